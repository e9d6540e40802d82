"""Probe forward computations against scalar oracles."""

import math

import numpy as np
import pytest

from depprobe.probe import (
    DISTANCE_EPS,
    depth_score,
    distance_matrix,
    initialize,
    load_checkpoint,
    relation_probs,
    save_checkpoint,
    structural_distance,
)


def scalar_distance(matrix, h_i, h_j):
    """Plain-python re-evaluation of the distance form."""
    e, b = len(matrix), len(matrix[0])
    delta = [h_i[k] - h_j[k] for k in range(e)]
    projected = [sum(delta[k] * matrix[k][col] for k in range(e)) for col in range(b)]
    return math.sqrt(sum(v * v for v in projected) + DISTANCE_EPS)


def scalar_softmax(logits):
    top = max(logits)
    exps = [math.exp(v - top) for v in logits]
    total = sum(exps)
    return [v / total for v in exps]


class TestStructuralDistance:
    def test_euclidean_with_identity(self):
        matrix = np.eye(2)
        assert structural_distance(matrix, (0.0, 0.0), (3.0, 4.0)) == pytest.approx(
            5.0, abs=1e-6
        )

    def test_zero_difference_gives_sqrt_eps(self):
        matrix = np.eye(3)
        h = np.array([1.0, 2.0, 3.0])
        assert structural_distance(matrix, h, h) == pytest.approx(
            math.sqrt(DISTANCE_EPS), rel=1e-9
        )

    def test_symmetry(self, rng):
        matrix = rng.normal(size=(4, 3))
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert structural_distance(matrix, a, b) == structural_distance(matrix, b, a)

    def test_matches_scalar_oracle(self, rng):
        for _ in range(20):
            matrix = rng.normal(size=(5, 3))
            a, b = rng.normal(size=5), rng.normal(size=5)
            expected = scalar_distance(matrix.tolist(), a.tolist(), b.tolist())
            assert structural_distance(matrix, a, b) == pytest.approx(expected, rel=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            structural_distance(np.eye(3), np.zeros(2), np.zeros(2))

    def test_triangle_inequality_with_slack(self, rng):
        matrix = rng.normal(size=(6, 4))
        for _ in range(200):
            x, y, z = (rng.normal(size=6) for _ in range(3))
            d_xz = structural_distance(matrix, x, z)
            d_xy = structural_distance(matrix, x, y)
            d_yz = structural_distance(matrix, y, z)
            assert d_xz <= d_xy + d_yz + 1e-4


class TestDistanceMatrix:
    def test_single_word(self):
        out = distance_matrix(np.eye(2), np.zeros((1, 2)))
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(math.sqrt(DISTANCE_EPS), rel=1e-9)

    def test_symmetric(self, rng):
        matrix = rng.normal(size=(4, 3))
        embs = rng.normal(size=(6, 4))
        out = distance_matrix(matrix, embs)
        np.testing.assert_allclose(out, out.T, rtol=0, atol=0)

    def test_matches_pairwise_calls(self, rng):
        matrix = rng.normal(size=(4, 3))
        embs = rng.normal(size=(3, 4))
        out = distance_matrix(matrix, embs)
        for i in range(3):
            for j in range(3):
                expected = structural_distance(matrix, embs[i], embs[j])
                assert out[i, j] == pytest.approx(expected, rel=1e-9)

    def test_scaling_property(self, rng):
        # distances at least 1 so the eps smoothing stays below the tolerance
        matrix = rng.normal(size=(5, 4))
        embs = rng.normal(size=(6, 5)) * 3.0
        base = distance_matrix(matrix, embs)
        for scale in (1.5, 2.0, 3.0):
            scaled = distance_matrix(scale * matrix, embs)
            off = ~np.eye(6, dtype=bool)
            np.testing.assert_allclose(
                scaled[off], scale * base[off], rtol=1e-9, atol=0
            )


class TestDepthScore:
    def test_identity(self):
        assert depth_score(np.eye(2), (3.0, 4.0)) == pytest.approx(25.0)

    def test_zero(self):
        assert depth_score(np.eye(2), (0.0, 0.0)) == 0.0

    def test_matches_scalar_oracle(self, rng):
        for _ in range(20):
            matrix = rng.normal(size=(4, 2))
            h = rng.normal(size=4)
            projected = [
                sum(h[k] * matrix[k][col] for k in range(4)) for col in range(2)
            ]
            expected = sum(v * v for v in projected)
            assert depth_score(matrix, h) == pytest.approx(expected, rel=1e-12)


class TestRelationProbs:
    def test_uniform_for_equal_logits(self):
        matrix = np.zeros((4, 37))
        probs = relation_probs(matrix, np.ones(4))
        np.testing.assert_allclose(probs, 1 / 37, atol=1e-12)

    def test_huge_logit_is_stable(self):
        matrix = np.zeros((1, 37))
        matrix[0, 0] = 1000.0
        probs = relation_probs(matrix, np.ones(1))
        assert probs[0] == pytest.approx(1.0)
        assert np.isfinite(probs).all()

    def test_matches_scalar_oracle(self, rng):
        for _ in range(20):
            matrix = rng.normal(size=(5, 37))
            h = rng.normal(size=5)
            expected = scalar_softmax(list(h @ matrix))
            np.testing.assert_allclose(relation_probs(matrix, h), expected, atol=1e-9)

    def test_valid_distribution_for_any_finite_input(self, rng):
        for _ in range(50):
            matrix = rng.normal(size=(3, 37)) * rng.choice([1, 100, 1e4])
            probs = relation_probs(matrix, rng.normal(size=3))
            assert (probs > 0).all() or probs.min() >= 0
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)


class TestParameterCounts:
    def test_labeled_configuration(self):
        model = initialize(768, 128, relational=True, seed=1)
        assert model.parameter_count() == 126_720

    def test_depth_configuration(self):
        model = initialize(768, 128, relational=False, depth=True, depth_dim=128, seed=1)
        assert model.parameter_count() == 196_608


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        model = initialize(16, 8, relational=True, depth=True, depth_dim=4, seed=3)
        path = tmp_path / "probe.json"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.structural, model.structural)
        np.testing.assert_array_equal(loaded.relational, model.relational)
        np.testing.assert_array_equal(loaded.depth, model.depth)
        assert loaded.structural_layer == model.structural_layer
        assert loaded.relational_layer == model.relational_layer
        assert loaded.vocab.labels == model.vocab.labels

    def test_serialization_is_canonical(self, tmp_path):
        model = initialize(6, 4, relational=True, seed=9)
        save_checkpoint(model, tmp_path / "a.json")
        save_checkpoint(model, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_initialization_is_seeded(self):
        a = initialize(10, 5, seed=42)
        b = initialize(10, 5, seed=42)
        c = initialize(10, 5, seed=43)
        np.testing.assert_array_equal(a.structural, b.structural)
        assert not np.array_equal(a.structural, c.structural)

    def test_initialization_scale(self):
        model = initialize(100, 50, seed=0)
        bound = math.sqrt(6 / 150)
        assert abs(model.structural).max() <= bound
