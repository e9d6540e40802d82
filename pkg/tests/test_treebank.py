"""Treebank parsing and tree geometry."""

import numpy as np
import pytest

from conftest import random_heads_pruefer
from depprobe.errors import ConlluParseError, StructuralError, VocabularyError
from depprobe.treebank import (
    GROUP_OF_RELATION,
    RELATIONS,
    REF_INDEX,
    ROOT_INDEX,
    TAXONOMY_GROUPS,
    UD_RELATIONS,
    compute_tree_geometry,
    parse_conllu,
    to_conllu,
)

TWO_WORD = """# sent_id = mini
1\tHe\t_\t_\t_\t_\t2\tnsubj\t_\t_
2\truns\t_\t_\t_\t_\t0\troot\t_\t_
"""


def apsp_oracle(heads):
    """Floyd-Warshall all-pairs shortest paths on the undirected edge set."""
    n = len(heads)
    dist = np.full((n, n), 10**6, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    for child, head in enumerate(heads):
        if head is not None:
            dist[child, head] = dist[head, child] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


class TestVocabulary:
    def test_exactly_37_alphabetical_distinct(self):
        assert len(UD_RELATIONS) == 37
        assert list(UD_RELATIONS) == sorted(UD_RELATIONS)
        assert len(set(UD_RELATIONS)) == 37

    def test_root_index_resolves(self):
        assert UD_RELATIONS[RELATIONS.index_of_root] == "root"

    def test_ref_is_evaluation_only(self):
        assert RELATIONS.index("ref") == REF_INDEX == 37
        assert RELATIONS.label(REF_INDEX) == "ref"

    def test_unknown_label_rejected(self):
        with pytest.raises(VocabularyError):
            RELATIONS.index("nonsense")

    def test_taxonomy_covers_vocab_plus_ref(self):
        members = [label for labels in TAXONOMY_GROUPS.values() for label in labels]
        assert sorted(members) == sorted([*UD_RELATIONS, "ref"])
        assert GROUP_OF_RELATION["ref"] == "other"
        assert GROUP_OF_RELATION["nsubj"] == "nominal"
        assert GROUP_OF_RELATION["cc"] == "coord"


class TestParseConllu:
    def test_two_word_sentence(self):
        (sentence,) = parse_conllu(TWO_WORD)
        assert sentence.sentence_id == "mini"
        assert sentence.words == ("He", "runs")
        assert sentence.gold_head == (1, None)
        assert sentence.gold_rel == (RELATIONS.index("nsubj"), ROOT_INDEX)
        assert list(sentence.depth) == [1, 0]
        assert sentence.tree_dist[0, 1] == 1

    def test_range_line_skipped(self):
        text = (
            "1\tvamonos\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2-3\tal\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "2\ta\t_\t_\t_\t_\t1\tcase\t_\t_\n"
            "3\tel\t_\t_\t_\t_\t1\tdet\t_\t_\n"
        )
        (sentence,) = parse_conllu(text)
        assert sentence.words == ("vamonos", "a", "el")

    def test_empty_node_skipped(self):
        text = (
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "1.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tobj\t_\t_\n"
        )
        (sentence,) = parse_conllu(text)
        assert sentence.words == ("a", "b")

    def test_five_word_chain_geometry(self):
        lines = ["1\tw1\t_\t_\t_\t_\t0\troot\t_\t_"]
        for i in range(2, 6):
            lines.append(f"{i}\tw{i}\t_\t_\t_\t_\t{i - 1}\tdep\t_\t_")
        (sentence,) = parse_conllu("\n".join(lines))
        assert sentence.tree_dist[0, 4] == 4
        assert list(sentence.depth) == [0, 1, 2, 3, 4]

    def test_subtype_truncated(self):
        text = (
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tnmod:poss\t_\t_\n"
        )
        (sentence,) = parse_conllu(text)
        assert sentence.gold_rel[1] == RELATIONS.index("nmod")

    def test_ref_label_accepted(self):
        text = (
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tref\t_\t_\n"
        )
        (sentence,) = parse_conllu(text)
        assert sentence.gold_rel[1] == REF_INDEX

    def test_malformed_line_reports_line_number(self):
        text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\nbroken line\n"
        with pytest.raises(ConlluParseError, match="line 2"):
            parse_conllu(text)

    def test_unknown_relation_rejected(self):
        text = "1\ta\t_\t_\t_\t_\t0\tflibbertigibbet\t_\t_\n"
        with pytest.raises(VocabularyError):
            parse_conllu(text)

    def test_cycle_names_sentence(self):
        text = (
            "# sent_id = looped\n"
            "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n"
        )
        with pytest.raises(StructuralError, match="looped"):
            parse_conllu(text)

    def test_two_roots_rejected(self):
        text = (
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n"
        )
        with pytest.raises(StructuralError):
            parse_conllu(text)

    def test_punctuation_retained(self):
        text = (
            "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
            "2\t.\t_\t_\t_\t_\t1\tpunct\t_\t_\n"
        )
        (sentence,) = parse_conllu(text)
        assert sentence.words[1] == "."


class TestGeometry:
    def test_star(self):
        tree_dist, depth = compute_tree_geometry([None, 0, 0, 0])
        assert list(depth) == [0, 1, 1, 1]
        assert tree_dist[1, 2] == 2

    def test_singleton(self):
        tree_dist, depth = compute_tree_geometry([None])
        assert list(depth) == [0]
        assert tree_dist.tolist() == [[0]]

    def test_random_trees_match_apsp_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            heads = random_heads_pruefer(rng, 7)
            tree_dist, depth = compute_tree_geometry(heads)
            np.testing.assert_array_equal(tree_dist, apsp_oracle(heads))
            root = heads.index(None)
            assert depth[root] == 0

    def test_forest_rejected(self):
        with pytest.raises(StructuralError):
            compute_tree_geometry([None, 0, None])
        with pytest.raises(StructuralError):
            compute_tree_geometry([None, 2, 1])  # 1 <-> 2 cycle


class TestInvariants:
    def test_parse_then_geometry_matches_oracle_on_100_trees(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 11))
            heads = random_heads_pruefer(rng, n)
            lines = []
            for i in range(n):
                head = heads[i]
                head_field = "0" if head is None else str(head + 1)
                rel = "root" if head is None else "dep"
                lines.append(f"{i + 1}\tw{i}\t_\t_\t_\t_\t{head_field}\t{rel}\t_\t_")
            (sentence,) = parse_conllu("\n".join(lines))
            np.testing.assert_array_equal(sentence.tree_dist, apsp_oracle(heads))
            assert sentence.gold_head.count(None) == 1
            np.testing.assert_array_equal(sentence.tree_dist, sentence.tree_dist.T)
            assert np.diagonal(sentence.tree_dist).sum() == 0
            assert sentence.depth.max() <= n - 1

    def test_round_trip(self, rng):
        from conftest import random_gold_sentence

        sentences = [
            random_gold_sentence(rng, int(rng.integers(1, 9)), f"s{i}")
            for i in range(20)
        ]
        reparsed = parse_conllu(to_conllu(sentences))
        assert len(reparsed) == len(sentences)
        for original, copy in zip(sentences, reparsed):
            assert copy.sentence_id == original.sentence_id
            assert copy.gold_head == original.gold_head
            assert copy.gold_rel == original.gold_rel
