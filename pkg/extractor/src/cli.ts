/**
 * Command line: extract per-layer word embeddings from a CoNLL-U file.
 *
 *   node dist/cli.js --conllu FILE --out DIR [--layers 0-12]
 *     [--encoder deterministic] [--dim 768] [--seed 0] [--vocab vocab.txt]
 *     [--window 128] [--stride 64] [--batch-size 16] [--device cpu]
 *
 * One DPE1 file per layer lands in --out; the layer recorded in each
 * header is authoritative. --batch-size and --device are accepted for
 * interface parity and forwarded to the encoder when it supports them
 * (the built-in deterministic encoder needs neither).
 */

import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { parseConllu } from "./conllu.js";
import { DEFAULT_ENCODER, loadEncoder } from "./encoder.js";
import { extractCorpus, writeLayerFiles } from "./extract.js";
import { FixedWidthTokenizer, Tokenizer, WordPieceTokenizer } from "./tokenizer.js";

function parseLayerSpec(spec: string): number[] {
  const layers: number[] = [];
  for (const part of spec.split(",")) {
    const trimmed = part.trim();
    if (trimmed === "") continue;
    if (trimmed.includes("-")) {
      const [lo, hi] = trimmed.split("-", 2).map(Number);
      for (let layer = lo; layer <= hi; layer++) layers.push(layer);
    } else {
      layers.push(Number(trimmed));
    }
  }
  if (layers.length === 0 || layers.some((l) => !Number.isInteger(l) || l < 0)) {
    throw new Error(`bad layer specification: ${spec}`);
  }
  return layers;
}

export function main(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      conllu: { type: "string" },
      out: { type: "string" },
      layers: { type: "string", default: "0-12" },
      encoder: { type: "string", default: DEFAULT_ENCODER },
      dim: { type: "string", default: "768" },
      seed: { type: "string", default: "0" },
      vocab: { type: "string" },
      window: { type: "string", default: "128" },
      stride: { type: "string", default: "64" },
      "batch-size": { type: "string", default: "16" },
      device: { type: "string", default: "cpu" },
    },
  });

  if (!values.conllu || !values.out) {
    console.error("usage: cli --conllu FILE --out DIR [options]");
    return 2;
  }

  try {
    const layers = parseLayerSpec(values.layers!);
    const sentences = parseConllu(readFileSync(values.conllu, "utf-8"));
    const tokenizer: Tokenizer = values.vocab
      ? WordPieceTokenizer.fromFileText(readFileSync(values.vocab, "utf-8"))
      : new FixedWidthTokenizer();
    const encoder = loadEncoder(values.encoder!, {
      hiddenSize: Number(values.dim),
      seed: Number(values.seed),
      layerCount: Math.max(13, Math.max(...layers) + 1),
    });
    const result = extractCorpus(sentences, tokenizer, encoder, layers, {
      size: Number(values.window),
      stride: Number(values.stride),
    });
    const written = writeLayerFiles(result, encoder.hiddenSize, values.out);
    console.log(
      `extracted ${sentences.length} sentences into ${written.length} layer ` +
        `files under ${values.out}`,
    );
    if (result.unknownTokens > 0) {
      console.log(`${result.unknownTokens} words mapped to the unknown token`);
    }
    return 0;
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
