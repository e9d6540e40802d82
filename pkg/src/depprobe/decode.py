"""Tree decoders over probe outputs.

Three extraction strategies share the structural distance matrix:

* :func:`depprobe_decode` roots the tree at the word with the highest
  root-relation probability, grows it greedily by minimum distance, and
  labels every attached word; O(n^2), no graph programming needed,
* :func:`undirected_mst` extracts the minimum spanning tree of the
  distance matrix (the classic structural-probe readout),
* :func:`dirprobe_decode` roots at the shallowest word under the depth
  map, forbids head-deeper-than-child edges, and runs Chu-Liu-Edmonds
  maximum arborescence decoding on negated distances.

Ties break toward the lowest index everywhere, so all decoders are
deterministic and invariant under positive rescaling of the distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .treebank import RELATIONS, ROOT_LABEL, RelationVocab


@dataclass(frozen=True)
class PredictedTree:
    """A decoded tree: ``edges`` holds (head, child, relation-or-None).

    ``relaxed_words`` records children whose depth-gate constraints had to
    be dropped to keep decoding feasible (depth-gated decoder only).
    """

    n: int
    root: int
    edges: tuple[tuple[int, int, int | None], ...]
    directed: bool = True
    labeled: bool = True
    relaxed_words: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("tree must cover at least one word")
        if not 0 <= self.root < self.n:
            raise ValueError(f"root {self.root} out of range")
        if len(self.edges) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} edges, got {len(self.edges)}")
        children = [child for _, child, _ in self.edges]
        if self.root in children:
            raise ValueError("root must not appear as a child")
        if sorted(children) != [i for i in range(self.n) if i != self.root]:
            raise ValueError("every non-root word must appear exactly once as a child")
        if self.directed:
            reached = {self.root}
            pending = [(head, child) for head, child, _ in self.edges]
            while pending:
                remaining = []
                progressed = False
                for head, child in pending:
                    if head in reached:
                        reached.add(child)
                        progressed = True
                    else:
                        remaining.append((head, child))
                if not progressed:
                    raise ValueError("edges are not reachable from the root")
                pending = remaining
        if self.labeled:
            for _, _, relation in self.edges:
                if relation is None:
                    raise ValueError("labeled tree has an unlabeled edge")

    def heads(self) -> list[int | None]:
        """Per-word head index, ``None`` at the root."""
        heads: list[int | None] = [None] * self.n
        for head, child, _ in self.edges:
            heads[child] = head
        return heads

    def relations(self, root_index: int = RELATIONS.index_of_root) -> list[int] | None:
        """Per-word relation index; the root word carries the root label."""
        if not self.labeled:
            return None
        relations = [root_index] * self.n
        for _, child, relation in self.edges:
            relations[child] = relation
        return relations


def _check_square(matrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] == 0:
        raise ValueError("cannot decode an empty sentence")
    if not np.isfinite(matrix).all():
        raise ValueError("distance matrix contains non-finite values")
    return matrix


def depprobe_decode(
    dist, rel_probs, vocab: RelationVocab = RELATIONS
) -> PredictedTree:
    """Greedy rooted growth with argmax labeling.

    The root is the word maximizing the root-relation probability. Each
    step attaches the unattached word at minimum distance from the tree;
    its label is the argmax over non-root relations. On distance ties the
    lowest (tree word, candidate) index pair wins.
    """
    dist = _check_square(dist)
    n = dist.shape[0]
    rel_probs = np.asarray(rel_probs, dtype=np.float64)
    if rel_probs.shape != (n, len(vocab)):
        raise ValueError(
            f"expected relation probabilities of shape {(n, len(vocab))}, "
            f"got {rel_probs.shape}"
        )

    root_index = vocab.index_of_root
    root = int(np.argmax(rel_probs[:, root_index]))

    masked = rel_probs.copy()
    masked[:, root_index] = -np.inf
    labels = np.argmax(masked, axis=1)

    if n == 1:
        return PredictedTree(n=1, root=root, edges=())

    attached = np.zeros(n, dtype=bool)
    attached[root] = True
    best_dist = dist[root].copy()
    best_head = np.full(n, root, dtype=np.int64)

    edges = []
    for _ in range(n - 1):
        child = -1
        for j in range(n):
            if attached[j]:
                continue
            if child < 0 or (best_dist[j], best_head[j], j) < (
                best_dist[child],
                best_head[child],
                child,
            ):
                child = j
        head = int(best_head[child])
        edges.append((head, child, int(labels[child])))
        attached[child] = True
        for j in range(n):
            if attached[j]:
                continue
            if dist[child, j] < best_dist[j] or (
                dist[child, j] == best_dist[j] and child < best_head[j]
            ):
                best_dist[j] = dist[child, j]
                best_head[j] = child
    return PredictedTree(n=n, root=root, edges=tuple(edges))


def undirected_mst(dist) -> set[tuple[int, int]]:
    """Minimum spanning tree of the complete distance graph.

    Priority-based growth from vertex 0; ties break toward the lowest
    vertex index. Edges are returned as (low, high) pairs.
    """
    dist = _check_square(dist)
    n = dist.shape[0]
    if n == 1:
        return set()

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = dist[0].copy()
    parent = np.zeros(n, dtype=np.int64)

    edges = set()
    for _ in range(n - 1):
        vertex = -1
        for j in range(n):
            if in_tree[j]:
                continue
            if vertex < 0 or key[j] < key[vertex]:
                vertex = j
        edges.add((min(int(parent[vertex]), vertex), max(int(parent[vertex]), vertex)))
        in_tree[vertex] = True
        for j in range(n):
            if in_tree[j]:
                continue
            if dist[vertex, j] < key[j] or (
                dist[vertex, j] == key[j] and vertex < parent[j]
            ):
                key[j] = dist[vertex, j]
                parent[j] = vertex
    return edges


def edges_to_tree(edges, n: int, seed: int = 0) -> PredictedTree:
    """Orient an undirected spanning edge set away from ``seed``.

    The result is flagged undirected and unlabeled; the orientation is a
    storage convention only.
    """
    adjacency = [[] for _ in range(n)]
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    oriented = []
    seen = {seed}
    queue = [seed]
    while queue:
        node = queue.pop(0)
        for other in sorted(adjacency[node]):
            if other not in seen:
                seen.add(other)
                oriented.append((node, other, None))
                queue.append(other)
    return PredictedTree(
        n=n, root=seed, edges=tuple(oriented), directed=False, labeled=False
    )


def predictions_to_conllu(trees, sentences, vocab: RelationVocab = RELATIONS) -> str:
    """Serialize predicted trees over the gold word forms.

    Heads use the 1-based CoNLL-U convention with 0 at the root; edges of
    unlabeled trees carry "_". Undirected trees serialize through their
    storage orientation, so only their undirected readout is meaningful.
    """
    if len(trees) != len(sentences):
        raise ValueError(
            f"{len(trees)} trees against {len(sentences)} sentences"
        )
    blocks = []
    for tree, sentence in zip(trees, sentences):
        if tree.n != len(sentence):
            raise ValueError(
                f"sentence {sentence.sentence_id!r}: tree covers {tree.n} words, "
                f"sentence has {len(sentence)}"
            )
        heads = tree.heads()
        relations = tree.relations(vocab.index_of_root) if tree.labeled else None
        lines = [f"# sent_id = {sentence.sentence_id}"]
        for i, word in enumerate(sentence.words):
            head_field = "0" if heads[i] is None else str(heads[i] + 1)
            if relations is None:
                label = ROOT_LABEL if heads[i] is None else "_"
            else:
                label = vocab.label(relations[i])
            lines.append(
                "\t".join(
                    [str(i + 1), word, "_", "_", "_", "_", head_field, label, "_", "_"]
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def read_predictions(path, vocab: RelationVocab = RELATIONS) -> list[PredictedTree]:
    """Read predicted trees from CoNLL-U; "_" relations mark unlabeled edges.

    Unlike the gold reader this accepts unlabeled edges and does not
    require a relation vocabulary match for the root word; files read
    back as directed trees.
    """
    with open(path, encoding="utf-8") as handle:
        blocks: list[list[str]] = [[]]
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                if blocks[-1]:
                    blocks.append([])
                continue
            if line.startswith("#"):
                continue
            blocks[-1].append(line)
    if blocks and not blocks[-1]:
        blocks.pop()

    trees = []
    for block in blocks:
        heads: list[int | None] = []
        labels: list[str] = []
        for line in block:
            columns = line.split("\t")
            token_id = columns[0]
            if "-" in token_id or "." in token_id:
                continue
            head = int(columns[6])
            heads.append(None if head == 0 else head - 1)
            labels.append(columns[7])
        root = heads.index(None)
        labeled = all(
            label != "_" for i, label in enumerate(labels) if heads[i] is not None
        )
        edges = tuple(
            (head, child, vocab.index(labels[child]) if labeled else None)
            for child, head in enumerate(heads)
            if head is not None
        )
        trees.append(
            PredictedTree(n=len(heads), root=root, edges=edges, labeled=labeled)
        )
    return trees


class _Infeasible(Exception):
    """Internal: a (super)node has no allowed incoming edge."""

    def __init__(self, members):
        super().__init__(f"no allowed incoming edge for words {sorted(members)}")
        self.members = tuple(members)


def _find_cycle(best_head, root):
    n = len(best_head)
    color = [0] * n  # 0 unseen, 1 on stack, 2 done
    color[root] = 2
    for start in range(n):
        if color[start] != 0:
            continue
        path = []
        node = start
        while color[node] == 0:
            color[node] = 1
            path.append(node)
            node = best_head[node]
        if color[node] == 1:
            cycle = path[path.index(node):]
            return cycle
        for visited in path:
            color[visited] = 2
    return None


def max_arborescence(score, allowed, root: int) -> list[int]:
    """Maximum spanning arborescence with a fixed root.

    ``score[i, j]`` scores the edge head i -> child j; ``allowed`` masks
    usable edges (forbidden edges never enter the bookkeeping, so cycle
    contraction stays exact). Returns the head of every word, with
    ``root`` mapped to -1. Ties break toward the lowest head index.
    """
    n = score.shape[0]
    best_head = [-1] * n
    for child in range(n):
        if child == root:
            continue
        best = -1
        for head in range(n):
            if head == child or not allowed[head, child]:
                continue
            if best < 0 or score[head, child] > score[best, child]:
                best = head
        if best < 0:
            raise _Infeasible((child,))
        best_head[child] = best

    cycle = _find_cycle(best_head, root)
    if cycle is None:
        return best_head

    cycle_set = set(cycle)
    outside = [node for node in range(n) if node not in cycle_set]
    new_of_old = {node: i for i, node in enumerate(outside)}
    super_id = len(outside)
    m = super_id + 1

    new_score = np.zeros((m, m), dtype=np.float64)
    new_allowed = np.zeros((m, m), dtype=bool)
    enter_via = [-1] * m  # per outside head: which cycle member its edge enters
    exit_via = [-1] * m  # per outside child: which cycle member heads it

    for a in outside:
        for b in outside:
            if a == b:
                continue
            new_score[new_of_old[a], new_of_old[b]] = score[a, b]
            new_allowed[new_of_old[a], new_of_old[b]] = allowed[a, b]

    members_ordered = sorted(cycle_set)
    for a in outside:
        best_gain, best_member = None, -1
        for member in members_ordered:
            if not allowed[a, member]:
                continue
            gain = score[a, member] - score[best_head[member], member]
            if best_gain is None or gain > best_gain:
                best_gain, best_member = gain, member
        if best_member >= 0:
            new_score[new_of_old[a], super_id] = best_gain
            new_allowed[new_of_old[a], super_id] = True
            enter_via[new_of_old[a]] = best_member

    for b in outside:
        best_score, best_member = None, -1
        for member in members_ordered:
            if not allowed[member, b]:
                continue
            if best_score is None or score[member, b] > best_score:
                best_score, best_member = score[member, b], member
        if best_member >= 0:
            new_score[super_id, new_of_old[b]] = best_score
            new_allowed[super_id, new_of_old[b]] = True
            exit_via[new_of_old[b]] = best_member

    try:
        reduced_heads = max_arborescence(new_score, new_allowed, new_of_old[root])
    except _Infeasible as exc:
        members = []
        for new_node in exc.members:
            if new_node == super_id:
                members.extend(cycle)
            else:
                members.append(outside[new_node])
        raise _Infeasible(tuple(members)) from None

    heads = [-1] * n
    for new_child, new_head in enumerate(reduced_heads):
        if new_head < 0:
            continue
        if new_child == super_id:
            entry = enter_via[new_head]
            heads[entry] = outside[new_head]
            for member in cycle:
                if member != entry:
                    heads[member] = best_head[member]
        else:
            child = outside[new_child]
            if new_head == super_id:
                heads[child] = exit_via[new_child]
            else:
                heads[child] = outside[new_head]
    return heads


def dirprobe_decode(dist, depth_scores, *, flip_gate: bool = False) -> PredictedTree:
    """Depth-gated maximum arborescence decoding (directed, unlabeled).

    The shallowest word becomes the root; candidate edges are scored by
    negative distance; edges whose head is deeper than their child are
    forbidden (``flip_gate`` inverts the reading). If the gate leaves a
    word or a contracted component without any allowed incoming edge, the
    gate is dropped for the affected words only and recorded in
    ``relaxed_words``.
    """
    dist = _check_square(dist)
    n = dist.shape[0]
    depth_scores = np.asarray(depth_scores, dtype=np.float64)
    if depth_scores.shape != (n,):
        raise ValueError(f"expected {n} depth scores, got shape {depth_scores.shape}")
    if not np.isfinite(depth_scores).all():
        raise ValueError("depth scores contain non-finite values")

    root = int(np.argmin(depth_scores))
    if n == 1:
        return PredictedTree(n=1, root=root, edges=(), labeled=False)

    allowed = np.ones((n, n), dtype=bool)
    np.fill_diagonal(allowed, False)
    allowed[:, root] = False
    if flip_gate:
        gate = depth_scores[:, None] < depth_scores[None, :]
    else:
        gate = depth_scores[:, None] > depth_scores[None, :]
    gated = allowed & ~gate

    relaxed = []
    for child in range(n):
        if child != root and not gated[:, child].any():
            gated[:, child] = allowed[:, child]
            relaxed.append(child)

    score = -dist
    while True:
        try:
            heads = max_arborescence(score, gated, root)
            break
        except _Infeasible as exc:
            for child in exc.members:
                gated[:, child] = allowed[:, child]
                relaxed.append(child)

    edges = tuple(
        (head, child, None) for child, head in enumerate(heads) if head >= 0
    )
    return PredictedTree(
        n=n,
        root=root,
        edges=edges,
        labeled=False,
        relaxed_words=tuple(sorted(set(relaxed))),
    )
