import { describe, expect, it } from "vitest";

import { deserialize, serialize, SentenceEmbedding } from "../src/dpe.js";

function record(index: number, wordCount: number, width: number, fill: (i: number) => number): SentenceEmbedding {
  const values = new Float32Array(wordCount * width);
  for (let i = 0; i < values.length; i++) values[i] = Math.fround(fill(i));
  return { sentenceIndex: index, wordCount, values };
}

describe("DPE1 serialization", () => {
  it("writes the exact byte layout", () => {
    const buffer = serialize([record(0, 2, 3, (i) => i)], 3, 5);
    expect(buffer.length).toBe(20 + 8 + 4 * 6);
    expect(buffer.toString("ascii", 0, 4)).toBe("DPE1");
    expect(buffer.readUInt32LE(4)).toBe(1); // version
    expect(buffer.readUInt32LE(8)).toBe(1); // sentences
    expect(buffer.readUInt32LE(12)).toBe(3); // width
    expect(buffer.readUInt32LE(16)).toBe(5); // layer
    expect(buffer.readUInt32LE(20)).toBe(0); // sentence index
    expect(buffer.readUInt32LE(24)).toBe(2); // word count
    expect(buffer.readFloatLE(28)).toBe(0);
    expect(buffer.readFloatLE(28 + 4 * 5)).toBe(5);
  });

  it("round-trips values bit-exactly", () => {
    const records = [
      record(0, 3, 4, (i) => Math.sin(i) * 10),
      record(1, 1, 4, (i) => -i / 7),
    ];
    const parsed = deserialize(serialize(records, 4, 9));
    expect(parsed.layer).toBe(9);
    expect(parsed.width).toBe(4);
    expect(parsed.records).toHaveLength(2);
    parsed.records.forEach((loaded, i) => {
      expect(loaded.wordCount).toBe(records[i].wordCount);
      expect(Array.from(loaded.values)).toEqual(Array.from(records[i].values));
    });
  });

  it("size formula holds across record shapes", () => {
    const widths = 6;
    const counts = [4, 1, 7];
    const records = counts.map((n, i) => record(i, n, widths, () => 0));
    const buffer = serialize(records, widths, 0);
    const expected = 20 + counts.reduce((acc, n) => acc + 8 + 4 * n * widths, 0);
    expect(buffer.length).toBe(expected);
  });

  it("rejects mismatched value lengths", () => {
    const bad = { sentenceIndex: 0, wordCount: 2, values: new Float32Array(5) };
    expect(() => serialize([bad], 3, 0)).toThrow(/expected 6/);
  });
});
