"""Attachment metrics, relation accuracy and corpus statistics.

All scores are micro-averaged over tokens, punctuation included. The root
word counts as correctly attached when the predicted root index matches
the gold root; its predicted relation is the root label by construction.
Metrics that an unlabeled or undirected prediction cannot support are
reported as ``None``, never as zero.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import AlignmentError
from .treebank import GROUP_OF_RELATION, RELATIONS

#: Histogram buckets for head offsets, in reporting order.
OFFSET_BUCKETS = (
    "<-5", "-5", "-4", "-3", "-2", "-1", "0", "1", "2", "3", "4", "5", ">5",
)


@dataclass
class EvalReport:
    """Corpus-level scores; optional sections are filled by the CLI."""

    uas: float | None
    las: float | None
    uuas: float | None
    rel_acc: float | None
    tokens: int
    offset_histogram: dict | None = None
    group_rel_acc: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check_aligned(pred, gold):
    if len(pred) != len(gold):
        raise AlignmentError(
            f"{len(pred)} predicted trees against {len(gold)} gold sentences"
        )
    for index, (tree, sentence) in enumerate(zip(pred, gold)):
        if tree.n != len(sentence):
            raise AlignmentError(
                f"sentence {index}: predicted tree covers {tree.n} words, "
                f"gold has {len(sentence)}"
            )


def _undirected(edge_iter):
    return {(min(a, b), max(a, b)) for a, b in edge_iter}


def score(pred, gold) -> EvalReport:
    """Attachment and relation scores for aligned prediction/gold lists."""
    _check_aligned(pred, gold)
    if not gold:
        return EvalReport(uas=None, las=None, uuas=None, rel_acc=None, tokens=0)
    directed = all(tree.directed for tree in pred)
    labeled = all(tree.labeled for tree in pred)

    tokens = 0
    head_hits = 0
    both_hits = 0
    rel_hits = 0
    gold_edges = 0
    shared_edges = 0

    for tree, sentence in zip(pred, gold):
        tokens += len(sentence)
        gold_heads = sentence.gold_head
        gold_edges += len(sentence) - 1
        shared_edges += len(
            _undirected((h, c) for c, h in enumerate(gold_heads) if h is not None)
            & _undirected((h, c) for h, c, _ in tree.edges)
        )
        if directed:
            pred_heads = tree.heads()
            pred_rels = tree.relations(RELATIONS.index_of_root) if labeled else None
            for i in range(len(sentence)):
                head_ok = pred_heads[i] == gold_heads[i]
                head_hits += head_ok
                if labeled:
                    rel_ok = pred_rels[i] == sentence.gold_rel[i]
                    rel_hits += rel_ok
                    both_hits += head_ok and rel_ok

    return EvalReport(
        uas=head_hits / tokens if directed else None,
        las=both_hits / tokens if directed and labeled else None,
        uuas=shared_edges / gold_edges if gold_edges else None,
        rel_acc=rel_hits / tokens if directed and labeled else None,
        tokens=tokens,
    )


def head_offsets(pred, gold) -> dict:
    """Bucketed ratio of predicted-minus-gold head positions.

    Words are counted when both trees assign them a real head (the gold
    root and a mismatched predicted root have no offset to measure).
    """
    _check_aligned(pred, gold)
    counts = dict.fromkeys(OFFSET_BUCKETS, 0)
    total = 0
    for tree, sentence in zip(pred, gold):
        pred_heads = tree.heads()
        for i, gold_head in enumerate(sentence.gold_head):
            if gold_head is None or pred_heads[i] is None:
                continue
            offset = pred_heads[i] - gold_head
            if offset > 5:
                bucket = ">5"
            elif offset < -5:
                bucket = "<-5"
            else:
                bucket = str(offset)
            counts[bucket] += 1
            total += 1
    if total == 0:
        return {bucket: 0.0 for bucket in OFFSET_BUCKETS}
    return {bucket: counts[bucket] / total for bucket in OFFSET_BUCKETS}


def group_relation_accuracy(pred, gold, groups=GROUP_OF_RELATION) -> dict:
    """Per-relation and per-taxonomy-group accuracy over gold labels.

    Groups aggregate by micro-average; relations absent from the gold
    corpus are omitted. Requires labeled predictions.
    """
    _check_aligned(pred, gold)
    if not all(tree.labeled for tree in pred):
        raise ValueError("relation accuracy requires labeled predictions")

    correct = {}
    total = {}
    for tree, sentence in zip(pred, gold):
        pred_rels = tree.relations(RELATIONS.index_of_root)
        for i, gold_rel in enumerate(sentence.gold_rel):
            label = RELATIONS.label(gold_rel)
            total[label] = total.get(label, 0) + 1
            correct[label] = correct.get(label, 0) + (pred_rels[i] == gold_rel)

    report = {}
    for label in sorted(total):
        group = groups[label]
        entry = report.setdefault(
            group, {"accuracy": 0.0, "correct": 0, "total": 0, "relations": {}}
        )
        entry["correct"] += correct[label]
        entry["total"] += total[label]
        entry["relations"][label] = {
            "accuracy": correct[label] / total[label],
            "correct": correct[label],
            "total": total[label],
        }
    for entry in report.values():
        entry["accuracy"] = entry["correct"] / entry["total"]
    return report


@dataclass(frozen=True)
class EdgeLengthStats:
    median: float
    mean: float
    stddev: float
    fraction_over_10: float


def edge_length_stats(gold) -> EdgeLengthStats:
    """Distribution of |head - child| token offsets over gold edges."""
    lengths = [
        abs(head - child)
        for sentence in gold
        for child, head in enumerate(sentence.gold_head)
        if head is not None
    ]
    if not lengths:
        return EdgeLengthStats(0.0, 0.0, 0.0, 0.0)
    lengths = np.asarray(lengths, dtype=np.float64)
    return EdgeLengthStats(
        median=float(np.median(lengths)),
        mean=float(lengths.mean()),
        stddev=float(lengths.std()),
        fraction_over_10=float((lengths > 10).mean()),
    )
