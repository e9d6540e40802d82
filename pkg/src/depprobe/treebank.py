"""CoNLL-U treebank loading and gold tree geometry.

Sentences are parsed into immutable :class:`GoldSentence` records carrying
the word forms, head indices, relation indices, pairwise tree distances and
root depths that the probes train against.

Conventions:

* word indices are 0-based; the root word's head is ``None`` (a sentinel,
  never an arithmetic index),
* relation labels are truncated at the first ``":"`` (universal relation
  only) and looked up in the fixed 37-label vocabulary,
* the legacy label ``"ref"`` is accepted on input and mapped to a 38th
  internal index used only for evaluation grouping; probes never emit it,
* multiword-token ranges ("3-4") and empty nodes ("3.1") are skipped,
* punctuation is kept everywhere.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConlluParseError, StructuralError, VocabularyError

#: The 37 universal relation labels, alphabetically ordered.
UD_RELATIONS = (
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc",
    "ccomp", "clf", "compound", "conj", "cop", "csubj", "dep", "det",
    "discourse", "dislocated", "expl", "fixed", "flat", "goeswith",
    "iobj", "list", "mark", "nmod", "nsubj", "nummod", "obj", "obl",
    "orphan", "parataxis", "punct", "reparandum", "root", "vocative",
    "xcomp",
)

ROOT_LABEL = "root"
ROOT_INDEX = UD_RELATIONS.index(ROOT_LABEL)

#: Legacy label retained by some treebanks; evaluation-only, index 37.
REF_LABEL = "ref"
REF_INDEX = len(UD_RELATIONS)

#: Universal Dependencies taxonomy grouping (plus "ref" under "other").
TAXONOMY_GROUPS = {
    "nominal": ("appos", "dislocated", "expl", "iobj", "nmod", "nsubj",
                "nummod", "obj", "obl", "vocative"),
    "clause": ("acl", "advcl", "ccomp", "csubj", "xcomp"),
    "modifier": ("advmod", "amod", "discourse"),
    "function": ("aux", "case", "clf", "cop", "det", "mark"),
    "coord": ("cc", "conj"),
    "multi": ("compound", "fixed", "flat"),
    "loose": ("list", "parataxis"),
    "special": ("goeswith", "orphan", "reparandum"),
    "other": ("dep", "punct", "ref", "root"),
}

#: Inverse view: relation label -> taxonomy group name.
GROUP_OF_RELATION = {
    label: group for group, labels in TAXONOMY_GROUPS.items() for label in labels
}


class RelationVocab:
    """Fixed vocabulary over the 37 universal relations.

    ``index("ref")`` resolves to the evaluation-only index 37; every other
    unknown label raises :class:`VocabularyError`.
    """

    def __init__(self, labels=UD_RELATIONS):
        if len(set(labels)) != len(labels):
            raise ValueError("relation labels must be distinct")
        self.labels = tuple(labels)
        self.index_of_root = self.labels.index(ROOT_LABEL)
        self._index = {label: i for i, label in enumerate(self.labels)}

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        if label == REF_LABEL:
            return REF_INDEX
        try:
            return self._index[label]
        except KeyError:
            raise VocabularyError(f"unknown relation label {label!r}") from None

    def label(self, index: int) -> str:
        if index == REF_INDEX:
            return REF_LABEL
        return self.labels[index]


#: Default vocabulary instance shared across the toolkit.
RELATIONS = RelationVocab()


@dataclass(frozen=True, eq=False)
class GoldSentence:
    """One gold-annotated sentence with derived tree geometry.

    ``gold_head[i]`` is the 0-based head index of word ``i`` or ``None``
    for the root word. ``tree_dist`` counts edges between word pairs on
    the undirected tree; ``depth`` counts edges from the root.
    """

    sentence_id: str
    words: tuple[str, ...]
    gold_head: tuple[int | None, ...]
    gold_rel: tuple[int, ...]
    tree_dist: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.words)

    @property
    def root(self) -> int:
        return self.gold_head.index(None)


def compute_tree_geometry(heads) -> tuple[np.ndarray, np.ndarray]:
    """Derive (tree_dist, depth) from a head list with ``None`` at the root.

    Depth comes from a breadth-first traversal out of the root; pairwise
    distances from a breadth-first sweep over the undirected edge set per
    start word. Raises :class:`StructuralError` on cycles or forests.
    """
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h is None]
    if len(roots) != 1:
        raise StructuralError(f"expected exactly one root, found {len(roots)}")
    root = roots[0]

    adjacency = [[] for _ in range(n)]
    for child, head in enumerate(heads):
        if head is None:
            continue
        if not 0 <= head < n or head == child:
            raise StructuralError(f"head index {head} out of range for word {child}")
        adjacency[head].append(child)
        adjacency[child].append(head)

    depth = np.full(n, -1, dtype=np.int64)
    depth[root] = 0
    queue = [root]
    while queue:
        node = queue.pop(0)
        for child in adjacency[node]:
            if heads[child] == node and depth[child] < 0:
                depth[child] = depth[node] + 1
                queue.append(child)
    if (depth < 0).any():
        raise StructuralError("head indices contain a cycle or a detached subtree")

    tree_dist = np.zeros((n, n), dtype=np.int64)
    for start in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[start] = 0
        queue = [start]
        while queue:
            node = queue.pop(0)
            for other in adjacency[node]:
                if dist[other] < 0:
                    dist[other] = dist[node] + 1
                    queue.append(other)
        tree_dist[start] = dist
    return tree_dist, depth


def _finish_sentence(sentence_id, rows, vocab, start_line):
    words, heads, rels = [], [], []
    for line_number, columns in rows:
        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            continue
        try:
            index = int(token_id)
        except ValueError:
            raise ConlluParseError(f"bad token id {token_id!r}", line_number)
        if index != len(words) + 1:
            raise ConlluParseError(
                f"token ids must be sequential, expected {len(words) + 1} got {index}",
                line_number,
            )
        head_field, deprel = columns[6], columns[7]
        try:
            head = int(head_field)
        except ValueError:
            raise ConlluParseError(f"bad head field {head_field!r}", line_number)
        label = deprel.split(":", 1)[0]
        words.append(columns[1])
        heads.append(None if head == 0 else head - 1)
        rels.append(vocab.index(label))

    if not words:
        raise ConlluParseError("sentence contains no word tokens", start_line)
    try:
        tree_dist, depth = compute_tree_geometry(heads)
    except StructuralError as exc:
        raise StructuralError(f"sentence {sentence_id!r}: {exc}") from None
    root = heads.index(None)
    if rels[root] != vocab.index_of_root:
        # UD guarantees the root word carries the "root" relation.
        raise StructuralError(
            f"sentence {sentence_id!r}: root word does not carry the root relation"
        )
    return GoldSentence(
        sentence_id=sentence_id,
        words=tuple(words),
        gold_head=tuple(heads),
        gold_rel=tuple(rels),
        tree_dist=tree_dist,
        depth=depth,
    )


def parse_conllu(stream, vocab: RelationVocab = RELATIONS) -> list[GoldSentence]:
    """Parse CoNLL-U text into a list of :class:`GoldSentence`.

    ``stream`` may be a string or any iterable of lines. ``# sent_id =``
    comments provide sentence ids; sentences without one are numbered.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    sentences = []
    rows = []
    sentence_id = None
    start_line = 1

    def flush():
        nonlocal rows, sentence_id
        if rows:
            sid = sentence_id if sentence_id is not None else f"sentence-{len(sentences) + 1}"
            sentences.append(_finish_sentence(sid, rows, vocab, start_line))
        rows = []
        sentence_id = None

    line_number = 0
    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            start_line = line_number + 1
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("sent_id") and "=" in body:
                sentence_id = body.split("=", 1)[1].strip()
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, found {len(columns)}", line_number
            )
        rows.append((line_number, columns))
    flush()
    return sentences


def read_conllu(path, vocab: RelationVocab = RELATIONS) -> list[GoldSentence]:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle, vocab)


def to_conllu(sentences, vocab: RelationVocab = RELATIONS) -> str:
    """Serialize gold sentences back to CoNLL-U text (10 columns, "_" filler)."""
    blocks = []
    for sentence in sentences:
        lines = [f"# sent_id = {sentence.sentence_id}"]
        for i, word in enumerate(sentence.words):
            head = sentence.gold_head[i]
            head_field = "0" if head is None else str(head + 1)
            label = vocab.label(sentence.gold_rel[i])
            lines.append(
                "\t".join(
                    [str(i + 1), word, "_", "_", "_", "_", head_field, label, "_", "_"]
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
