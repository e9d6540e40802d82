/**
 * Extraction pipeline: tokenize words into subwords, run the encoder over
 * (possibly windowed) token sequences, mean-pool subword vectors back to
 * words, and emit one DPE1 file per requested layer.
 *
 * Long sentences are processed in overlapping windows; every subword takes
 * its vector from the window where it sits most centrally (earlier window
 * on ties). Sequence boundary markers are fed to the encoder but never
 * pooled into any word.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { ConlluSentence } from "./conllu.js";
import { SentenceEmbedding, serialize } from "./dpe.js";
import { Encoder } from "./encoder.js";
import { SEQUENCE_END, SEQUENCE_START, Tokenizer } from "./tokenizer.js";

export interface WindowConfig {
  /** Tokens per encoder call, boundary markers included. */
  size: number;
  /** Content-token step between consecutive windows. */
  stride: number;
}

export const DEFAULT_WINDOW: WindowConfig = { size: 128, stride: 64 };

export interface SentenceVectors {
  /** Content subword strings, in order. */
  subwords: string[];
  /** Word index owning each content subword. */
  owner: number[];
  /** Per layer (same order as the request): one vector per content subword. */
  vectors: Float32Array[][];
}

function windowSpans(total: number, capacity: number, stride: number): Array<[number, number]> {
  if (total <= capacity) {
    return [[0, total]];
  }
  const spans: Array<[number, number]> = [];
  for (let start = 0; ; start += stride) {
    spans.push([start, Math.min(start + capacity, total)]);
    if (start + capacity >= total) {
      break;
    }
  }
  return spans;
}

/**
 * Encoder vectors for every content subword of one sentence, after window
 * stitching. This is the dump the pooling tests validate against.
 */
export function sentenceSubwordVectors(
  sentence: ConlluSentence,
  tokenizer: Tokenizer,
  encoder: Encoder,
  layers: number[],
  window: WindowConfig = DEFAULT_WINDOW,
): SentenceVectors {
  const subwords: string[] = [];
  const owner: number[] = [];
  sentence.words.forEach((word, wordIndex) => {
    let pieces: string[];
    try {
      pieces = tokenizer.tokenizeWord(word);
    } catch (error) {
      throw new Error(
        `sentence ${sentence.sentenceId}, token ${wordIndex + 1} (${word}): ` +
          `${(error as Error).message}`,
      );
    }
    if (pieces.length === 0) {
      throw new Error(
        `sentence ${sentence.sentenceId}, token ${wordIndex + 1} (${word}): ` +
          `tokenizer produced no subwords`,
      );
    }
    for (const piece of pieces) {
      subwords.push(piece);
      owner.push(wordIndex);
    }
  });

  const capacity = window.size - 2;
  if (capacity < 1 || window.stride < 1 || window.stride > capacity) {
    throw new Error(
      `invalid window: size ${window.size}, stride ${window.stride}`,
    );
  }
  const spans = windowSpans(subwords.length, capacity, window.stride);

  // per content position: the window whose center is nearest
  const chosen = new Array<number>(subwords.length).fill(-1);
  const centers = spans.map(([start, end]) => (start + end - 1) / 2);
  for (let position = 0; position < subwords.length; position++) {
    let best = -1;
    for (let w = 0; w < spans.length; w++) {
      const [start, end] = spans[w];
      if (position < start || position >= end) {
        continue;
      }
      if (best < 0 || Math.abs(centers[w] - position) < Math.abs(centers[best] - position)) {
        best = w;
      }
    }
    chosen[position] = best;
  }

  const vectors: Float32Array[][] = layers.map(() => new Array(subwords.length));
  spans.forEach(([start, end], w) => {
    const tokens = [SEQUENCE_START, ...subwords.slice(start, end), SEQUENCE_END];
    const encoded = encoder.encodeWindow(tokens, layers);
    for (let position = start; position < end; position++) {
      if (chosen[position] !== w) {
        continue;
      }
      for (let layerSlot = 0; layerSlot < layers.length; layerSlot++) {
        // +1 skips the sequence-start marker
        vectors[layerSlot][position] = encoded[layerSlot][position - start + 1];
      }
    }
  });

  return { subwords, owner, vectors };
}

/** Mean-pool subword vectors to words; float64 accumulation, float32 out. */
export function poolToWords(
  vectors: Float32Array[],
  owner: number[],
  wordCount: number,
  hiddenSize: number,
): Float32Array {
  const sums = new Float64Array(wordCount * hiddenSize);
  const counts = new Array<number>(wordCount).fill(0);
  vectors.forEach((vector, position) => {
    const word = owner[position];
    counts[word] += 1;
    for (let j = 0; j < hiddenSize; j++) {
      sums[word * hiddenSize + j] += vector[j];
    }
  });
  const pooled = new Float32Array(wordCount * hiddenSize);
  for (let word = 0; word < wordCount; word++) {
    if (counts[word] === 0) {
      throw new Error(`word ${word} received no subword vectors`);
    }
    for (let j = 0; j < hiddenSize; j++) {
      pooled[word * hiddenSize + j] = Math.fround(
        sums[word * hiddenSize + j] / counts[word],
      );
    }
  }
  return pooled;
}

export interface ExtractionResult {
  /** Per requested layer: the file payload records, in corpus order. */
  perLayer: Map<number, SentenceEmbedding[]>;
  unknownTokens: number;
}

export function extractCorpus(
  sentences: ConlluSentence[],
  tokenizer: Tokenizer,
  encoder: Encoder,
  layers: number[],
  window: WindowConfig = DEFAULT_WINDOW,
): ExtractionResult {
  const perLayer = new Map<number, SentenceEmbedding[]>(
    layers.map((layer) => [layer, []]),
  );
  sentences.forEach((sentence, index) => {
    const dump = sentenceSubwordVectors(sentence, tokenizer, encoder, layers, window);
    layers.forEach((layer, layerSlot) => {
      const pooled = poolToWords(
        dump.vectors[layerSlot],
        dump.owner,
        sentence.words.length,
        encoder.hiddenSize,
      );
      perLayer.get(layer)!.push({
        sentenceIndex: index,
        wordCount: sentence.words.length,
        values: pooled,
      });
    });
  });
  return { perLayer, unknownTokens: tokenizer.unknownCount };
}

export function writeLayerFiles(
  result: ExtractionResult,
  hiddenSize: number,
  outDir: string,
): string[] {
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const [layer, records] of result.perLayer) {
    const path = join(outDir, `layer-${layer}.dpe`);
    writeFileSync(path, serialize(records, hiddenSize, layer));
    written.push(path);
  }
  return written;
}
