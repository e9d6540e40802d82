"""Metrics against an independent per-token counting oracle."""

import numpy as np
import pytest

from conftest import random_gold_sentence, random_heads_pruefer
from depprobe.decode import PredictedTree
from depprobe.errors import AlignmentError
from depprobe.evaluate import (
    EdgeLengthStats,
    edge_length_stats,
    group_relation_accuracy,
    head_offsets,
    score,
)
from depprobe.treebank import (
    RELATIONS,
    ROOT_INDEX,
    GoldSentence,
    compute_tree_geometry,
)


def tree_from_heads(heads, rels=None):
    """Build a PredictedTree from a head list (None marks the root)."""
    root = heads.index(None)
    labeled = rels is not None
    edges = tuple(
        (head, child, rels[child] if labeled else None)
        for child, head in enumerate(heads)
        if head is not None
    )
    return PredictedTree(
        n=len(heads), root=root, edges=edges, labeled=labeled
    )


def gold_from_heads(heads, rels, sentence_id="g"):
    tree_dist, depth = compute_tree_geometry(heads)
    return GoldSentence(
        sentence_id=sentence_id,
        words=tuple(f"w{i}" for i in range(len(heads))),
        gold_head=tuple(heads),
        gold_rel=tuple(rels),
        tree_dist=tree_dist,
        depth=depth,
    )


def counting_oracle(pred, gold):
    """Token-by-token recount of UAS / LAS / RelAcc / UUAS."""
    tokens = head_ok = both_ok = rel_ok = 0
    gold_edges = shared = 0
    for tree, sentence in zip(pred, gold):
        heads = [None] * tree.n
        rels = [ROOT_INDEX] * tree.n
        for h, c, r in tree.edges:
            heads[c] = h
            if r is not None:
                rels[c] = r
        for i in range(len(sentence)):
            tokens += 1
            same_head = heads[i] == sentence.gold_head[i]
            same_rel = rels[i] == sentence.gold_rel[i]
            head_ok += same_head
            rel_ok += same_rel
            both_ok += same_head and same_rel
        gold_set = set()
        for c, h in enumerate(sentence.gold_head):
            if h is not None:
                gold_set.add(frozenset((h, c)))
        pred_set = {frozenset((h, c)) for h, c, _ in tree.edges}
        gold_edges += len(gold_set)
        shared += len(gold_set & pred_set)
    return {
        "uas": head_ok / tokens,
        "las": both_ok / tokens,
        "rel_acc": rel_ok / tokens,
        "uuas": shared / gold_edges if gold_edges else None,
        "tokens": tokens,
    }


def random_labeled_corpus(rng, sentences=8, max_n=7):
    gold, pred = [], []
    for i in range(sentences):
        n = int(rng.integers(1, max_n + 1))
        sentence = random_gold_sentence(rng, n, f"s{i}")
        gold.append(sentence)
        heads = random_heads_pruefer(rng, n)
        rels = [
            ROOT_INDEX if h is None else int(rng.integers(0, 37))
            for h in heads
        ]
        rels = [
            r if (h is None) == (r == ROOT_INDEX) else (r + 1) % 37 or 1
            for h, r in zip(heads, rels)
        ]
        rels = [
            ROOT_INDEX if h is None else (r if r != ROOT_INDEX else 0)
            for h, r in zip(heads, rels)
        ]
        pred.append(tree_from_heads(heads, rels))
    return pred, gold


class TestScore:
    def test_perfect_prediction(self, rng):
        gold = [random_gold_sentence(rng, 5, f"s{i}") for i in range(4)]
        pred = [
            tree_from_heads(list(s.gold_head), list(s.gold_rel)) for s in gold
        ]
        report = score(pred, gold)
        assert report.uas == report.las == report.uuas == report.rel_acc == 1.0

    def test_hand_counted_example(self):
        nsubj, obj = RELATIONS.index("nsubj"), RELATIONS.index("obj")
        gold = [gold_from_heads([None, 0, 0], [ROOT_INDEX, nsubj, obj])]
        pred = [tree_from_heads([None, 0, 1], [ROOT_INDEX, nsubj, obj])]
        report = score(pred, gold)
        assert report.uas == pytest.approx(2 / 3)
        assert report.las == pytest.approx(2 / 3)
        assert report.rel_acc == 1.0
        assert report.uuas == pytest.approx(1 / 2)

    def test_unlabeled_predictions_report_absent(self, rng):
        gold = [random_gold_sentence(rng, 4)]
        pred = [tree_from_heads(list(gold[0].gold_head))]
        report = score(pred, gold)
        assert report.uas == 1.0
        assert report.las is None
        assert report.rel_acc is None

    def test_undirected_predictions_report_only_uuas(self, rng):
        gold = [random_gold_sentence(rng, 4)]
        edges = tuple(
            (h, c, None) for c, h in enumerate(gold[0].gold_head) if h is not None
        )
        pred = [
            PredictedTree(
                n=4, root=gold[0].root, edges=edges, directed=False, labeled=False
            )
        ]
        report = score(pred, gold)
        assert report.uas is None and report.las is None and report.rel_acc is None
        assert report.uuas == 1.0

    def test_matches_counting_oracle_on_200_corpora(self, rng):
        for _ in range(200):
            pred, gold = random_labeled_corpus(rng)
            report = score(pred, gold)
            expected = counting_oracle(pred, gold)
            assert report.uas == expected["uas"]
            assert report.las == expected["las"]
            assert report.rel_acc == expected["rel_acc"]
            assert report.uuas == expected["uuas"]
            assert report.tokens == expected["tokens"]
            assert report.las <= min(report.uas, report.rel_acc)

    def test_single_word_sentences_reduce_to_root_identification(self):
        gold = [gold_from_heads([None], [ROOT_INDEX])]
        pred = [tree_from_heads([None], [ROOT_INDEX])]
        report = score(pred, gold)
        assert report.uas == 1.0 and report.las == 1.0
        assert report.uuas is None  # no edges to recover

    def test_permutation_invariance(self, rng):
        pred, gold = random_labeled_corpus(rng, sentences=6)
        report = score(pred, gold)
        order = rng.permutation(len(gold))
        shuffled = score([pred[i] for i in order], [gold[i] for i in order])
        assert shuffled.uas == report.uas
        assert shuffled.las == report.las
        assert shuffled.uuas == report.uuas

    def test_misalignment_rejected(self, rng):
        gold = [random_gold_sentence(rng, 4)]
        pred = [tree_from_heads([None, 0, 0])]
        with pytest.raises(AlignmentError):
            score(pred, gold)

    def test_empty_corpus(self):
        report = score([], [])
        assert report.tokens == 0
        assert report.uas is None and report.uuas is None

    def test_gold_ref_never_correct_for_labeled_probe_output(self):
        from depprobe.treebank import REF_INDEX

        dep = RELATIONS.index("dep")
        gold = [gold_from_heads([None, 0], [ROOT_INDEX, REF_INDEX])]
        pred = [tree_from_heads([None, 0], [ROOT_INDEX, dep])]
        report = score(pred, gold)
        assert report.uas == 1.0
        assert report.rel_acc == pytest.approx(1 / 2)
        assert report.las == pytest.approx(1 / 2)


class TestHeadOffsets:
    def test_perfect_parse_all_zero(self, rng):
        gold = [random_gold_sentence(rng, 6)]
        pred = [tree_from_heads(list(gold[0].gold_head), list(gold[0].gold_rel))]
        histogram = head_offsets(pred, gold)
        assert histogram["0"] == 1.0
        assert sum(histogram.values()) == pytest.approx(1.0)

    def test_large_offset_buckets(self):
        heads = [None] + [0] * 8
        rels = [ROOT_INDEX] + [0] * 8
        gold = [gold_from_heads(heads, rels)]
        pred_heads = [None, 7, 0, 0, 0, 0, 0, 0, 0]
        pred = [tree_from_heads(pred_heads, rels)]
        histogram = head_offsets(pred, gold)
        assert histogram[">5"] == pytest.approx(1 / 8)  # offset 7 - 0 = +7
        assert histogram["0"] == pytest.approx(7 / 8)

    def test_hand_tallied_crafted_corpus(self):
        heads = [None, 0, 1, 2, 3, 4, 5, 6, 7, 8]  # chain of 10
        rels = [ROOT_INDEX] + [0] * 9
        gold = [gold_from_heads(heads, rels)]
        pred_heads = [None, 0, 3, 4, 9, 4, 5, 6, 7, 0]
        pred = [tree_from_heads(pred_heads, rels)]
        histogram = head_offsets(pred, gold)
        # offsets: w1:0 w2:+2 w3:+2 w4:+6 w5:0 w6:0 w7:0 w8:0 w9:-8
        assert histogram["0"] == pytest.approx(5 / 9)
        assert histogram["2"] == pytest.approx(2 / 9)
        assert histogram[">5"] == pytest.approx(1 / 9)
        assert histogram["<-5"] == pytest.approx(1 / 9)
        assert sum(histogram.values()) == pytest.approx(1.0, abs=1e-9)


class TestGroupRelationAccuracy:
    def test_perfect_labels(self, rng):
        pred, gold = random_labeled_corpus(rng, sentences=4)
        pred = [tree_from_heads(list(s.gold_head), list(s.gold_rel)) for s in gold]
        report = group_relation_accuracy(pred, gold)
        for entry in report.values():
            assert entry["accuracy"] == 1.0
            for stats in entry["relations"].values():
                assert stats["accuracy"] == 1.0

    def test_all_punct_predictor(self):
        punct, nsubj = RELATIONS.index("punct"), RELATIONS.index("nsubj")
        gold = [
            gold_from_heads([None, 0, 0], [ROOT_INDEX, punct, nsubj]),
        ]
        pred = [tree_from_heads([None, 0, 0], [ROOT_INDEX, punct, punct])]
        report = group_relation_accuracy(pred, gold)
        assert report["other"]["relations"]["punct"]["accuracy"] == 1.0
        assert report["nominal"]["relations"]["nsubj"]["accuracy"] == 0.0
        assert "clause" not in report  # absent relations stay absent

    def test_unlabeled_rejected(self, rng):
        gold = [random_gold_sentence(rng, 3)]
        pred = [tree_from_heads(list(gold[0].gold_head))]
        with pytest.raises(ValueError):
            group_relation_accuracy(pred, gold)

    def test_micro_average_hand_tally(self):
        aux, cop = RELATIONS.index("aux"), RELATIONS.index("cop")
        gold = [
            gold_from_heads([None, 0, 0, 0], [ROOT_INDEX, aux, aux, cop]),
        ]
        pred = [tree_from_heads([None, 0, 0, 0], [ROOT_INDEX, aux, cop, cop])]
        report = group_relation_accuracy(pred, gold)
        function = report["function"]
        assert function["total"] == 3
        assert function["correct"] == 2
        assert function["accuracy"] == pytest.approx(2 / 3)


class TestEdgeLengthStats:
    def test_adjacent_chain(self):
        heads = [None, 0, 1, 2]
        stats = edge_length_stats([gold_from_heads(heads, [ROOT_INDEX, 0, 0, 0])])
        assert stats == EdgeLengthStats(1.0, 1.0, 0.0, 0.0)

    def test_single_long_edge(self):
        heads = [None, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 0]
        rels = [ROOT_INDEX] + [0] * 12
        stats = edge_length_stats([gold_from_heads(heads, rels)])
        lengths = [1] * 11 + [12]
        assert stats.median == float(np.median(lengths))
        assert stats.mean == pytest.approx(np.mean(lengths))
        assert stats.stddev == pytest.approx(np.std(lengths))
        assert stats.fraction_over_10 == pytest.approx(1 / 12)
