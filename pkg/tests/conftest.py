"""Shared test helpers: random trees and gold sentences.

The tree construction here (Pruefer decoding) is deliberately different
from the generator shipped in the package, so tests that compare derived
quantities do not share code with the paths they check.
"""

import numpy as np
import pytest

from depprobe.treebank import ROOT_INDEX, GoldSentence, compute_tree_geometry


def random_heads_pruefer(rng, n):
    """Uniform random labeled tree via Pruefer decoding, rooted at random."""
    if n == 1:
        return [None]
    if n == 2:
        edges = [(0, 1)]
    else:
        sequence = [int(rng.integers(0, n)) for _ in range(n - 2)]
        degree = [1] * n
        for node in sequence:
            degree[node] += 1
        edges = []
        leaves = sorted(i for i in range(n) if degree[i] == 1)
        for node in sequence:
            leaf = leaves.pop(0)
            edges.append((leaf, node))
            degree[node] -= 1
            if degree[node] == 1:
                import bisect

                bisect.insort(leaves, node)
        edges.append((leaves[0], leaves[1]))

    root = int(rng.integers(0, n))
    adjacency = [[] for _ in range(n)]
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    heads = [None] * n
    seen = {root}
    queue = [root]
    while queue:
        node = queue.pop(0)
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                heads[other] = node
                queue.append(other)
    return heads


def _non_root_relation(rng):
    rel = int(rng.integers(0, 37))
    return rel if rel != ROOT_INDEX else (rel + 1) % 37


def random_gold_sentence(rng, n, sentence_id="test"):
    """Gold sentence over a random tree with random non-root relations."""
    heads = random_heads_pruefer(rng, n)
    tree_dist, depth = compute_tree_geometry(heads)
    rels = tuple(
        ROOT_INDEX if head is None else _non_root_relation(rng) for head in heads
    )
    return GoldSentence(
        sentence_id=sentence_id,
        words=tuple(f"w{i}" for i in range(n)),
        gold_head=tuple(heads),
        gold_rel=rels,
        tree_dist=tree_dist,
        depth=depth,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
