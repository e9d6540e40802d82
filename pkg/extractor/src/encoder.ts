/**
 * Encoders produce one vector per subword token, per requested layer.
 *
 * `DeterministicEncoder` is the built-in, asset-free implementation: layer
 * 0 is a pure per-token embedding (no context), and layer k mixes layer-0
 * vectors over a +-k token window plus a layer tag, so deeper layers see
 * wider context and every layer's output differs. It is a pure function
 * of (seed, token strings), which makes extraction runs reproducible.
 *
 * Loading a real pretrained encoder is out of scope for this runtime; the
 * interface is the seam where one would plug in. Unknown identifiers fail
 * with an environment error naming the requested encoder.
 */

export interface Encoder {
  readonly hiddenSize: number;
  /** Depth: usable layer indices are 0..layerCount-1. */
  readonly layerCount: number;
  /**
   * Vectors for a window of subword tokens (boundary markers included).
   * Returns one Float32Array of length hiddenSize per token, per layer,
   * indexed as result[layerPosition][tokenPosition].
   */
  encodeWindow(tokens: string[], layers: number[]): Float32Array[][];
}

export const DEFAULT_ENCODER = "bert-base-multilingual-cased";

/** FNV-1a, 32 bit. */
function hashString(text: string, seed: number): number {
  let hash = (0x811c9dc5 ^ seed) >>> 0;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** mulberry32 PRNG over a 32-bit state. */
function mulberry32(state: number): () => number {
  let a = state >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class DeterministicEncoder implements Encoder {
  readonly layerCount: number;
  private tokenCache = new Map<string, Float32Array>();
  private layerTags = new Map<number, Float32Array>();

  constructor(
    readonly hiddenSize: number = 768,
    private seed: number = 0,
    layerCount: number = 13,
  ) {
    if (hiddenSize < 1) {
      throw new Error("hidden size must be positive");
    }
    this.layerCount = layerCount;
  }

  private tokenVector(token: string): Float32Array {
    let vector = this.tokenCache.get(token);
    if (vector === undefined) {
      const random = mulberry32(hashString(token, this.seed));
      vector = new Float32Array(this.hiddenSize);
      for (let j = 0; j < this.hiddenSize; j++) {
        vector[j] = Math.fround(random() * 2 - 1);
      }
      this.tokenCache.set(token, vector);
    }
    return vector;
  }

  private layerTag(layer: number): Float32Array {
    let tag = this.layerTags.get(layer);
    if (tag === undefined) {
      const random = mulberry32(hashString(`layer:${layer}`, this.seed));
      tag = new Float32Array(this.hiddenSize);
      for (let j = 0; j < this.hiddenSize; j++) {
        tag[j] = Math.fround((random() * 2 - 1) * 0.25);
      }
      this.layerTags.set(layer, tag);
    }
    return tag;
  }

  encodeWindow(tokens: string[], layers: number[]): Float32Array[][] {
    for (const layer of layers) {
      if (layer < 0 || layer >= this.layerCount) {
        throw new Error(
          `layer ${layer} outside encoder depth 0..${this.layerCount - 1}`,
        );
      }
    }
    const base = tokens.map((token) => this.tokenVector(token));
    return layers.map((layer) => {
      if (layer === 0) {
        return base.map((vector) => Float32Array.from(vector));
      }
      const tag = this.layerTag(layer);
      return base.map((_, position) => {
        const lo = Math.max(0, position - layer);
        const hi = Math.min(tokens.length - 1, position + layer);
        const mixed = new Float32Array(this.hiddenSize);
        for (let neighbor = lo; neighbor <= hi; neighbor++) {
          const vector = base[neighbor];
          for (let j = 0; j < this.hiddenSize; j++) {
            mixed[j] += vector[j];
          }
        }
        const count = hi - lo + 1;
        for (let j = 0; j < this.hiddenSize; j++) {
          mixed[j] = Math.fround(mixed[j] / count + tag[j]);
        }
        return mixed;
      });
    });
  }
}

export interface EncoderOptions {
  hiddenSize: number;
  seed: number;
  layerCount: number;
}

export function loadEncoder(identifier: string, options: EncoderOptions): Encoder {
  if (identifier === "deterministic") {
    return new DeterministicEncoder(
      options.hiddenSize,
      options.seed,
      options.layerCount,
    );
  }
  throw new Error(
    `cannot load encoder "${identifier}": no model runtime is available in ` +
      `this environment; use --encoder deterministic or plug an Encoder ` +
      `implementation into extract()`,
  );
}
