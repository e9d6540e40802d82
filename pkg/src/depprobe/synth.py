"""Synthetic corpora with linearly recoverable structure.

Each sentence is a random tree whose words embed as the concatenation of

* tree coordinates: one orthogonal unit axis per edge, summed along the
  path from the root, so squared Euclidean distances equal tree distances
  (exact equality of plain distances is unattainable for tree metrics;
  the square-root relation preserves every distance ordering, which is
  what the decoders consume),
* a one-hot of the gold relation label,
* Gaussian noise dimensions,

mixed through one fixed random orthogonal map shared by the whole
dataset. A linear probe can unmix this exactly, so trained probes must
recover held-out trees almost perfectly; the end-to-end suite relies on
that.
"""

from __future__ import annotations

import numpy as np

from .embstore import EmbeddingMatrix
from .treebank import RELATIONS, ROOT_INDEX, GoldSentence, compute_tree_geometry

#: Fixed feature layout: tree coordinates, relation one-hot, noise.
COORD_DIM = 16
NOISE_DIM = 11
EMBEDDING_DIM = COORD_DIM + len(RELATIONS) + NOISE_DIM

#: Magnitude of the relation one-hot; two is enough for the relational
#: map to separate all labels within the default epoch budget.
LABEL_SCALE = 2.0

#: Header layer recorded in synthetic embedding files.
SYNTH_LAYER = 0

_NON_ROOT_LABELS = [i for i in range(len(RELATIONS)) if i != ROOT_INDEX]


def random_heads(n: int, rng) -> list:
    """Random rooted tree over n words: heads list with None at the root."""
    order = rng.permutation(n)
    heads: list = [None] * n
    for position in range(1, n):
        parent_position = int(rng.integers(0, position))
        heads[order[position]] = int(order[parent_position])
    return heads


def _sentence(index: int, heads, rng) -> GoldSentence:
    n = len(heads)
    tree_dist, depth = compute_tree_geometry(heads)
    rels = [
        ROOT_INDEX if head is None else int(rng.choice(_NON_ROOT_LABELS))
        for head in heads
    ]
    return GoldSentence(
        sentence_id=f"synth-{index}",
        words=tuple(f"w{i}" for i in range(n)),
        gold_head=tuple(heads),
        gold_rel=tuple(rels),
        tree_dist=tree_dist,
        depth=depth,
    )


def _features(sentence: GoldSentence, rng, noise_scale: float) -> np.ndarray:
    n = len(sentence)
    features = np.zeros((n, EMBEDDING_DIM), dtype=np.float64)

    # Path-sum coordinates: axis k belongs to the k-th non-root word's edge.
    axis_of_word = {}
    for word in range(n):
        if sentence.gold_head[word] is not None:
            axis_of_word[word] = len(axis_of_word)
    for word in range(n):
        node = word
        while sentence.gold_head[node] is not None:
            features[word, axis_of_word[node]] = 1.0
            node = sentence.gold_head[node]

    features[np.arange(n), COORD_DIM + np.asarray(sentence.gold_rel)] = LABEL_SCALE
    features[:, COORD_DIM + len(RELATIONS):] = rng.normal(
        0.0, noise_scale, size=(n, NOISE_DIM)
    )
    return features


def make_dataset(
    num_train: int,
    num_dev: int,
    seed: int,
    min_len: int = 3,
    max_len: int = 12,
    noise_scale: float = 0.5,
):
    """Generate (train_corpus, train_embs, dev_corpus, dev_embs).

    One orthogonal mixing matrix is drawn first and applied to every
    sentence of both splits; embeddings are float32 records with layer
    ``SYNTH_LAYER``.
    """
    if max_len - 1 > COORD_DIM:
        raise ValueError(f"max_len must stay at most {COORD_DIM + 1}")
    rng = np.random.default_rng(seed)
    mixing, _ = np.linalg.qr(rng.normal(size=(EMBEDDING_DIM, EMBEDDING_DIM)))

    def split(count, offset):
        corpus, embeddings = [], []
        for index in range(count):
            n = int(rng.integers(min_len, max_len + 1))
            sentence = _sentence(offset + index, random_heads(n, rng), rng)
            features = _features(sentence, rng, noise_scale)
            corpus.append(sentence)
            embeddings.append(
                EmbeddingMatrix(
                    sentence_index=index,
                    values=(features @ mixing.T).astype(np.float32),
                )
            )
        return corpus, embeddings

    train_corpus, train_embs = split(num_train, 0)
    dev_corpus, dev_embs = split(num_dev, num_train)
    return train_corpus, train_embs, dev_corpus, dev_embs
