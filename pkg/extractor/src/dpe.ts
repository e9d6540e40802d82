/**
 * DPE1 binary container, little-endian.
 *
 * Layout: 20-byte header (magic "DPE1", version u32 = 1, sentence count
 * u32, width u32, layer u32), then per sentence: sentence index u32, word
 * count u32, n*width float32 values word-major. This is the contract the
 * downstream probing toolkit reads.
 */

export const MAGIC = "DPE1";
export const VERSION = 1;

export interface SentenceEmbedding {
  sentenceIndex: number;
  /** n rows by width columns, row-major. */
  values: Float32Array;
  wordCount: number;
}

export function serialize(
  records: SentenceEmbedding[],
  width: number,
  layer: number,
): Buffer {
  let size = 20;
  for (const record of records) {
    if (record.values.length !== record.wordCount * width) {
      throw new Error(
        `sentence ${record.sentenceIndex}: expected ${record.wordCount * width} ` +
          `values, got ${record.values.length}`,
      );
    }
    size += 8 + 4 * record.values.length;
  }
  const buffer = Buffer.alloc(size);
  buffer.write(MAGIC, 0, "ascii");
  buffer.writeUInt32LE(VERSION, 4);
  buffer.writeUInt32LE(records.length, 8);
  buffer.writeUInt32LE(width, 12);
  buffer.writeUInt32LE(layer, 16);
  let offset = 20;
  for (const record of records) {
    buffer.writeUInt32LE(record.sentenceIndex, offset);
    buffer.writeUInt32LE(record.wordCount, offset + 4);
    offset += 8;
    for (let i = 0; i < record.values.length; i++) {
      buffer.writeFloatLE(record.values[i], offset);
      offset += 4;
    }
  }
  return buffer;
}

export interface ParsedFile {
  layer: number;
  width: number;
  records: SentenceEmbedding[];
}

/** Reader counterpart, used by the tests to round-trip files. */
export function deserialize(buffer: Buffer): ParsedFile {
  if (buffer.length < 20) {
    throw new Error(`truncated header at byte ${buffer.length}`);
  }
  if (buffer.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("bad magic");
  }
  if (buffer.readUInt32LE(4) !== VERSION) {
    throw new Error(`unsupported version ${buffer.readUInt32LE(4)}`);
  }
  const count = buffer.readUInt32LE(8);
  const width = buffer.readUInt32LE(12);
  const layer = buffer.readUInt32LE(16);
  const records: SentenceEmbedding[] = [];
  let offset = 20;
  for (let i = 0; i < count; i++) {
    if (offset + 8 > buffer.length) {
      throw new Error(`truncated record header at byte ${offset}`);
    }
    const sentenceIndex = buffer.readUInt32LE(offset);
    const wordCount = buffer.readUInt32LE(offset + 4);
    offset += 8;
    const values = new Float32Array(wordCount * width);
    if (offset + 4 * values.length > buffer.length) {
      throw new Error(`truncated record payload at byte ${offset}`);
    }
    for (let j = 0; j < values.length; j++) {
      values[j] = buffer.readFloatLE(offset);
      offset += 4;
    }
    records.push({ sentenceIndex, wordCount, values });
  }
  return { layer, width, records };
}
