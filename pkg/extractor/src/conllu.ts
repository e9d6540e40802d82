/**
 * Minimal CoNLL-U reader for extraction.
 *
 * Only surface forms matter here: the extractor must produce exactly one
 * embedding per word token. Multiword-token range lines ("3-4") and empty
 * nodes ("3.1") are skipped, comments other than `sent_id` are ignored.
 */

export interface ConlluSentence {
  sentenceId: string;
  words: string[];
}

export function parseConllu(text: string): ConlluSentence[] {
  const sentences: ConlluSentence[] = [];
  let words: string[] = [];
  let sentenceId: string | null = null;

  const flush = () => {
    if (words.length > 0) {
      sentences.push({
        sentenceId: sentenceId ?? `sentence-${sentences.length + 1}`,
        words,
      });
    }
    words = [];
    sentenceId = null;
  };

  for (const rawLine of text.split("\n")) {
    const line = rawLine.replace(/\r$/, "");
    if (line.trim() === "") {
      flush();
      continue;
    }
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      if (body.startsWith("sent_id") && body.includes("=")) {
        sentenceId = body.split("=").slice(1).join("=").trim();
      }
      continue;
    }
    const columns = line.split("\t");
    if (columns.length !== 10) {
      throw new Error(`malformed CoNLL-U line (${columns.length} columns): ${line}`);
    }
    const id = columns[0];
    if (id.includes("-") || id.includes(".")) {
      continue; // multiword range or empty node
    }
    words.push(columns[1]);
  }
  flush();
  return sentences;
}
