from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from services.bernoulli_moments import (CovMatrix, EdgeMoments, EntropyClass, classify_entropy,
                                        count_pairs, covariance_from_moments,
                                        enumerate_uniform_moments, estimate_moments,
                                        presence_matrix)
from storage.graphs import Skeleton
from utils.errors import InvalidArgumentError


def _samples_from_rows(rows, v=3):
    """Squelettes dont les premières arêtes suivent les lignes de présence."""
    samples = []
    for row in rows:
        vector = np.zeros(v * (v - 1) // 2, dtype=np.uint8)
        vector[:len(row)] = row
        samples.append(Skeleton.from_indicator(vector, v))
    return samples


def _random_samples(rng, m, v):
    k = v * (v - 1) // 2
    presence = rng.random((m, k)) < rng.random(k)
    return [Skeleton.from_indicator(row.astype(np.uint8), v) for row in presence]


class TestEstimateMoments:

    def test_hand_counted_example(self):
        samples = _samples_from_rows([(1, 1), (1, 0), (0, 1), (1, 1)])
        moments = estimate_moments(samples, restrict_to=[0, 1])
        np.testing.assert_array_equal(moments.p_hat, [0.75, 0.75])
        assert moments.p_pair_hat[0, 1] == 0.5
        assert moments.m == 4
        assert moments.edge_ids == (0, 1)

    def test_identical_samples(self):
        sample = Skeleton(4, frozenset({(0, 1), (2, 3)}))
        moments = estimate_moments([sample] * 7)
        assert set(moments.p_hat.tolist()) <= {0.0, 1.0}
        np.testing.assert_array_equal(moments.p_pair_hat, np.outer(moments.p_hat, moments.p_hat))

    def test_single_edge_restriction(self, three_node_samples):
        full = estimate_moments(three_node_samples)
        single = estimate_moments(three_node_samples, restrict_to={0})
        assert single.k == 1
        assert single.p_hat[0] == full.p_hat[0]

    def test_subvector_closure(self):
        rng = np.random.default_rng(7)
        samples = _random_samples(rng, 60, 5)
        full = estimate_moments(samples)
        for _ in range(10):
            subset = sorted(rng.choice(full.k, size=rng.integers(1, full.k), replace=False).tolist())
            sub = estimate_moments(samples, restrict_to=subset)
            np.testing.assert_array_equal(sub.p_pair_hat, full.p_pair_hat[np.ix_(subset, subset)])
            assert sub.edge_ids == tuple(subset)

    def test_entries_are_multiples_of_one_over_m(self):
        rng = np.random.default_rng(11)
        samples = _random_samples(rng, 37, 4)
        moments = estimate_moments(samples)
        scaled = moments.p_pair_hat * moments.m
        np.testing.assert_allclose(scaled, np.round(scaled), atol=1e-9)
        assert moments.check() == []

    def test_parallel_counting_is_identical(self):
        rng = np.random.default_rng(3)
        presence = (rng.random((10_000, 6)) < 0.4).astype(np.uint8)
        np.testing.assert_array_equal(count_pairs(presence, n_jobs=1), count_pairs(presence, n_jobs=4))

    def test_empty_list(self):
        with pytest.raises(InvalidArgumentError):
            estimate_moments([])

    def test_inconsistent_node_counts(self):
        with pytest.raises(InvalidArgumentError):
            presence_matrix([Skeleton(3), Skeleton(4)])

    def test_invalid_restriction(self, three_node_samples):
        with pytest.raises(InvalidArgumentError):
            estimate_moments(three_node_samples, restrict_to=[3])


class TestCovariance:

    def test_maximum_entropy_moments(self):
        pairs = np.full((3, 3), 0.25)
        np.fill_diagonal(pairs, 0.5)
        sigma = covariance_from_moments(EdgeMoments.from_pairs(pairs))
        np.testing.assert_array_equal(sigma.entries, 0.25 * np.eye(3))

    def test_degenerate_moments(self):
        p = np.array([1.0, 0.0, 1.0])
        sigma = covariance_from_moments(EdgeMoments.from_pairs(np.outer(p, p)))
        np.testing.assert_array_equal(sigma.entries, np.zeros((3, 3)))

    def test_direct_substitution(self):
        sigma = covariance_from_moments(EdgeMoments.from_pairs([[0.75, 0.5], [0.5, 0.75]]))
        np.testing.assert_allclose(sigma.entries, [[3 / 16, -1 / 16], [-1 / 16, 3 / 16]], atol=1e-15)

    def test_bounds_and_psd_for_random_samples(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            samples = _random_samples(rng, int(rng.integers(2, 80)), int(rng.integers(2, 6)))
            sigma = covariance_from_moments(estimate_moments(samples))
            assert sigma.within_bounds()
            assert np.linalg.eigvalsh(sigma.entries).min() >= -1e-9

    def test_non_symmetric_rejected(self):
        with pytest.raises(InvalidArgumentError):
            CovMatrix([[0.1, 0.2], [0.0, 0.1]])

    def test_entries_are_read_only(self, sigma1):
        with pytest.raises(ValueError):
            sigma1.entries[0, 0] = 1.0


class TestUncorrelatedMeansIndependent:
    """Deux arêtes de Bernoulli : covariance nulle <=> factorisation de la loi jointe."""

    def test_grid_of_joint_distributions(self):
        m = 20
        checked = 0
        for n00, n01, n10 in product(range(m + 1), repeat=3):
            n11 = m - n00 - n01 - n10
            if n11 < 0:
                continue
            rows = [(0, 0)] * n00 + [(0, 1)] * n01 + [(1, 0)] * n10 + [(1, 1)] * n11
            moments = estimate_moments(_samples_from_rows(rows), restrict_to=[0, 1])
            exact = moments.exact_pairs()
            p1, p2, p12 = exact[0][0], exact[1][1], exact[0][1]

            uncorrelated = p12 - p1 * p2 == 0
            cells = {(1, 1): p12, (1, 0): p1 - p12, (0, 1): p2 - p12, (0, 0): 1 - p1 - p2 + p12}
            factorizes = all(
                cells[a, b] == (p1 if a else 1 - p1) * (p2 if b else 1 - p2)
                for a, b in cells
            )
            assert uncorrelated == factorizes
            assert Fraction(n11, m) == p12

            sigma = covariance_from_moments(moments).entries
            assert (abs(sigma[0, 1]) < 1e-12) == uncorrelated
            checked += 1
        assert checked == 1771


class TestEntropyClass:

    def test_minimum(self):
        p = np.array([1.0, 0.0, 1.0])
        assert classify_entropy(EdgeMoments.from_pairs(np.outer(p, p))) is EntropyClass.MINIMUM

    def test_maximum(self):
        moments = EdgeMoments.from_pairs([[0.5, 0.25], [0.25, 0.5]])
        assert classify_entropy(moments) is EntropyClass.MAXIMUM

    def test_intermediate(self):
        moments = EdgeMoments.from_pairs([[0.75, 0.5], [0.5, 0.75]])
        assert classify_entropy(moments) is EntropyClass.INTERMEDIATE

    def test_tolerance(self):
        moments = EdgeMoments.from_pairs([[0.51, 0.26], [0.26, 0.5]])
        assert classify_entropy(moments) is EntropyClass.INTERMEDIATE
        assert classify_entropy(moments, tol=0.02) is EntropyClass.MAXIMUM

    def test_negative_tolerance(self):
        with pytest.raises(InvalidArgumentError):
            classify_entropy(EdgeMoments.from_pairs([[0.5]]), tol=-1.0)


class TestUniformEnumeration:

    @pytest.mark.parametrize("v", [2, 3, 4, 5])
    def test_exact_maximum_entropy_moments(self, v):
        moments = enumerate_uniform_moments(v)
        exact = moments.exact_pairs()
        for i in range(moments.k):
            for j in range(moments.k):
                assert exact[i][j] == (Fraction(1, 2) if i == j else Fraction(1, 4))

    def test_v4_covariance_is_scaled_identity(self):
        sigma = covariance_from_moments(enumerate_uniform_moments(4))
        np.testing.assert_array_equal(sigma.entries, 0.25 * np.eye(6))

    @pytest.mark.parametrize("v", [1, 6])
    def test_out_of_range(self, v):
        with pytest.raises(InvalidArgumentError):
            enumerate_uniform_moments(v)
