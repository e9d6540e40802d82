/**
 * Subword tokenization.
 *
 * Two interchangeable strategies:
 *
 * - `WordPieceTokenizer`: greedy longest-match against a vocabulary file
 *   (one token per line, continuation pieces prefixed with "##"), the
 *   convention cased masked-language-model encoders use. Words with no
 *   match become a single unknown token; the count is reported so callers
 *   can log it.
 * - `FixedWidthTokenizer`: dependency-free fallback splitting words into
 *   chunks of at most four characters. It exists so the deterministic
 *   encoder pipeline runs without any model assets while still exercising
 *   multi-subword pooling.
 */

export interface Tokenizer {
  /** Subword strings for one word; never empty. */
  tokenizeWord(word: string): string[];
  /** Number of words mapped to the unknown token so far. */
  unknownCount: number;
}

export const UNKNOWN_TOKEN = "[UNK]";
export const SEQUENCE_START = "[CLS]";
export const SEQUENCE_END = "[SEP]";

export class WordPieceTokenizer implements Tokenizer {
  private vocab: Set<string>;
  unknownCount = 0;

  constructor(vocabulary: Iterable<string>) {
    this.vocab = new Set(vocabulary);
    if (this.vocab.size === 0) {
      throw new Error("empty tokenizer vocabulary");
    }
  }

  static fromFileText(text: string): WordPieceTokenizer {
    const entries = text
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0);
    return new WordPieceTokenizer(entries);
  }

  tokenizeWord(word: string): string[] {
    if (word.length === 0) {
      throw new Error("cannot tokenize an empty word");
    }
    const pieces: string[] = [];
    let start = 0;
    while (start < word.length) {
      let end = word.length;
      let found: string | null = null;
      while (start < end) {
        const candidate = (start > 0 ? "##" : "") + word.slice(start, end);
        if (this.vocab.has(candidate)) {
          found = candidate;
          break;
        }
        end -= 1;
      }
      if (found === null) {
        this.unknownCount += 1;
        return [UNKNOWN_TOKEN];
      }
      pieces.push(found);
      start = end;
    }
    return pieces;
  }
}

export class FixedWidthTokenizer implements Tokenizer {
  unknownCount = 0;

  constructor(private width: number = 4) {
    if (width < 1) {
      throw new Error("chunk width must be positive");
    }
  }

  tokenizeWord(word: string): string[] {
    if (word.length === 0) {
      throw new Error("cannot tokenize an empty word");
    }
    const characters = Array.from(word);
    const pieces: string[] = [];
    for (let start = 0; start < characters.length; start += this.width) {
      const chunk = characters.slice(start, start + this.width).join("");
      pieces.push(start === 0 ? chunk : "##" + chunk);
    }
    return pieces;
  }
}
