"""Binary container for per-layer word embeddings (the "DPE1" format).

Layout, little-endian throughout:

* header (20 bytes): magic ``b"DPE1"``, version u32 (= 1), num_sentences
  u32, embedding width ``e`` u32, encoder layer u32,
* one record per sentence: sentence_index u32, word count ``n`` u32,
  then ``n * e`` float32 values in word-major order.

The layer recorded in the header is authoritative; file names are
advisory. This format is the sole boundary with the embedding extractor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DataError, FormatError, TruncatedFileError

MAGIC = b"DPE1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_RECORD = struct.Struct("<II")


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Embeddings for one sentence: ``values`` is an n-by-e float32 matrix."""

    sentence_index: int
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def e(self) -> int:
        return self.values.shape[1]


def write_embeddings(records, layer: int, path) -> None:
    """Write records to ``path``; byte-deterministic for identical input."""
    records = list(records)
    widths = {record.values.shape[1] for record in records}
    if len(widths) > 1:
        raise ValueError(f"embedding width differs across records: {sorted(widths)}")
    e = widths.pop() if widths else 0
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, len(records), e, layer))
        for record in records:
            values = np.ascontiguousarray(record.values, dtype="<f4")
            handle.write(_RECORD.pack(record.sentence_index, values.shape[0]))
            handle.write(values.tobytes())


def read_embeddings(path) -> tuple[list[EmbeddingMatrix], int]:
    """Read a DPE1 file; returns (records in file order, layer)."""
    with open(path, "rb") as handle:
        data = handle.read()

    if len(data) < _HEADER.size:
        raise TruncatedFileError(f"{path}: header incomplete", len(data))
    magic, version, num_sentences, e, layer = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if num_sentences > 0 and e == 0:
        raise FormatError(f"{path}: embedding width must be positive")

    records = []
    offset = _HEADER.size
    for _ in range(num_sentences):
        if offset + _RECORD.size > len(data):
            raise TruncatedFileError(f"{path}: record header incomplete", offset)
        sentence_index, n = _RECORD.unpack_from(data, offset)
        offset += _RECORD.size
        nbytes = 4 * n * e
        if offset + nbytes > len(data):
            raise TruncatedFileError(f"{path}: record payload incomplete", offset)
        values = np.frombuffer(data, dtype="<f4", count=n * e, offset=offset)
        values = values.reshape(n, e).copy()
        if not np.isfinite(values).all():
            raise DataError(f"{path}: non-finite value in sentence {sentence_index}")
        records.append(EmbeddingMatrix(sentence_index=sentence_index, values=values))
        offset += nbytes
    return records, layer


def align(corpus, embeddings) -> list[tuple]:
    """Pair gold sentences with embedding matrices, enforcing matching n."""
    if len(corpus) != len(embeddings):
        raise AlignmentError(
            f"corpus has {len(corpus)} sentences, embeddings have {len(embeddings)}"
        )
    pairs = []
    for index, (sentence, record) in enumerate(zip(corpus, embeddings)):
        if len(sentence) != record.n:
            raise AlignmentError(
                f"sentence {index}: corpus has {len(sentence)} words, "
                f"embeddings have {record.n}"
            )
        pairs.append((sentence, record))
    return pairs
