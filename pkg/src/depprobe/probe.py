"""Linear probe parameterization and forward computations.

A probe is up to three linear maps over frozen word embeddings:

* ``structural`` (e-by-b): pairwise distances in its image approximate
  tree distances,
* ``relational`` (e-by-l, l = 37): per-word logits over relation labels,
* ``depth`` (e-by-c): squared norms in its image approximate word depth.

The labeled/directed configuration trains structural + relational
(e*b + e*l parameters); the depth-gated baseline trains structural +
depth (e*b + e*c parameters).
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import FormatError
from .treebank import RELATIONS, RelationVocab

#: Smoothing inside the distance square root; keeps the gradient finite
#: at zero difference. Distances are affected only below 1e-4.
DISTANCE_EPS = 1e-9

#: Defaults for the reference configuration.
DEFAULT_EMBEDDING_DIM = 768
DEFAULT_STRUCTURAL_DIM = 128
DEFAULT_DEPTH_DIM = 128
DEFAULT_STRUCTURAL_LAYER = 6
DEFAULT_RELATIONAL_LAYER = 7

CHECKPOINT_FORMAT = "depprobe-checkpoint"
CHECKPOINT_VERSION = 1


def _check_vector(matrix, vector, name):
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != matrix.shape[0]:
        raise ValueError(
            f"{name}: expected a vector of length {matrix.shape[0]}, "
            f"got shape {vector.shape}"
        )
    return vector


def structural_distance(structural: np.ndarray, h_i, h_j) -> float:
    """Smoothed L2 distance between two embeddings in the structural image."""
    h_i = _check_vector(structural, h_i, "h_i")
    h_j = _check_vector(structural, h_j, "h_j")
    delta = (h_i - h_j) @ structural
    return float(np.sqrt(delta @ delta + DISTANCE_EPS))


def distance_matrix(structural: np.ndarray, embeddings) -> np.ndarray:
    """All-pairs structural distances for one sentence (n-by-n, symmetric)."""
    values = getattr(embeddings, "values", embeddings)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != structural.shape[0]:
        raise ValueError(
            f"embeddings: expected shape (n, {structural.shape[0]}), got {values.shape}"
        )
    transformed = np.ascontiguousarray(values @ structural)
    return _kernels.distance_matrix(transformed, DISTANCE_EPS)


def depth_score(depth: np.ndarray, h_i) -> float:
    """Squared L2 norm of the embedding in the depth image."""
    h_i = _check_vector(depth, h_i, "h_i")
    transformed = h_i @ depth
    return float(transformed @ transformed)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def relation_probs(relational: np.ndarray, h_i) -> np.ndarray:
    """Probability vector over the relation labels for one word."""
    h_i = _check_vector(relational, h_i, "h_i")
    return softmax(h_i @ relational)


def relation_prob_matrix(relational: np.ndarray, embeddings) -> np.ndarray:
    """Per-word relation probabilities for a whole sentence (n-by-l)."""
    values = getattr(embeddings, "values", embeddings)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != relational.shape[0]:
        raise ValueError(
            f"embeddings: expected shape (n, {relational.shape[0]}), got {values.shape}"
        )
    return softmax(values @ relational)


@dataclass(frozen=True)
class ProbeModel:
    """Immutable bundle of the linear maps and their layer assignments."""

    structural: np.ndarray
    relational: np.ndarray | None = None
    depth: np.ndarray | None = None
    structural_layer: int = DEFAULT_STRUCTURAL_LAYER
    relational_layer: int | None = None
    depth_layer: int | None = None
    vocab: RelationVocab = RELATIONS

    @property
    def embedding_dim(self) -> int:
        return self.structural.shape[0]

    @property
    def structural_dim(self) -> int:
        return self.structural.shape[1]

    def parameter_count(self) -> int:
        count = self.structural.size
        if self.relational is not None:
            count += self.relational.size
        if self.depth is not None:
            count += self.depth.size
        return count

    def with_matrices(self, **matrices) -> "ProbeModel":
        return replace(self, **matrices)


def _uniform_init(rng, rows, cols):
    scale = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-scale, scale, size=(rows, cols))


def initialize(
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
    structural_dim: int = DEFAULT_STRUCTURAL_DIM,
    *,
    relational: bool = True,
    depth: bool = False,
    depth_dim: int = DEFAULT_DEPTH_DIM,
    structural_layer: int = DEFAULT_STRUCTURAL_LAYER,
    relational_layer: int = DEFAULT_RELATIONAL_LAYER,
    depth_layer: int | None = None,
    seed: int = 41,
    vocab: RelationVocab = RELATIONS,
) -> ProbeModel:
    """Seeded uniform fan-based initialization of a probe.

    Matrices are drawn in a fixed order (structural, relational, depth)
    from one generator, so a seed pins every entry.
    """
    rng = np.random.default_rng(seed)
    structural = _uniform_init(rng, embedding_dim, structural_dim)
    relational_map = _uniform_init(rng, embedding_dim, len(vocab)) if relational else None
    depth_map = _uniform_init(rng, embedding_dim, depth_dim) if depth else None
    return ProbeModel(
        structural=structural,
        relational=relational_map,
        depth=depth_map,
        structural_layer=structural_layer,
        relational_layer=relational_layer if relational else None,
        depth_layer=(depth_layer if depth_layer is not None else structural_layer)
        if depth
        else None,
        vocab=vocab,
    )


def _encode_matrix(matrix):
    payload = np.ascontiguousarray(matrix, dtype="<f8")
    return {
        "shape": list(payload.shape),
        "dtype": "<f8",
        "data": base64.b64encode(payload.tobytes()).decode("ascii"),
    }


def _decode_matrix(entry):
    data = base64.b64decode(entry["data"])
    matrix = np.frombuffer(data, dtype=entry["dtype"]).astype(np.float64)
    return matrix.reshape(entry["shape"])


def save_checkpoint(model: ProbeModel, path) -> None:
    """Write a probe to the JSON-with-base64 checkpoint container.

    The serialization is canonical (sorted keys, fixed separators), so
    identical models produce byte-identical files.
    """
    document = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "embedding_dim": model.embedding_dim,
        "relations": list(model.vocab.labels),
        "layers": {
            "structural": model.structural_layer,
            "relational": model.relational_layer,
            "depth": model.depth_layer,
        },
        "matrices": {"structural": _encode_matrix(model.structural)},
    }
    if model.relational is not None:
        document["matrices"]["relational"] = _encode_matrix(model.relational)
    if model.depth is not None:
        document["matrices"]["depth"] = _encode_matrix(model.depth)
    with open(path, "w", encoding="ascii") as handle:
        json.dump(document, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_checkpoint(path) -> ProbeModel:
    with open(path, encoding="ascii") as handle:
        document = json.load(handle)
    if document.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path}: not a probe checkpoint")
    if document.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version")
    matrices = document["matrices"]
    layers = document["layers"]
    return ProbeModel(
        structural=_decode_matrix(matrices["structural"]),
        relational=_decode_matrix(matrices["relational"]) if "relational" in matrices else None,
        depth=_decode_matrix(matrices["depth"]) if "depth" in matrices else None,
        structural_layer=layers["structural"],
        relational_layer=layers.get("relational"),
        depth_layer=layers.get("depth"),
        vocab=RelationVocab(tuple(document["relations"])),
    )
