import numpy as np
import pytest

from services.bernoulli_moments import CovMatrix, covariance_from_moments, estimate_moments
from services.variability_stats import (REPORT_COLUMNS, StatisticKind, VariabilityReport,
                                        complement_statistic, normalized_n, null_distance,
                                        var_n_bounds, variability)
from services.parametric_tests import nagao_test
from storage.graphs import EdgeIndexer, Skeleton


def _random_bernoulli_covariance(rng, k, m=40):
    presence = (rng.random((m, k)) < rng.random(k)).astype(float)
    return CovMatrix(np.cov(presence, rowvar=False, bias=True).reshape(k, k))


class TestReferenceMatrices:
    """Valeurs descriptives de Σ₁, Σ₂ et Σ₃."""

    def test_sigma1(self, sigma1):
        report = variability(sigma1)
        assert report.k == 2
        assert report.var_t == pytest.approx(0.48, abs=1e-12)
        assert report.var_g == pytest.approx(0.056, abs=1e-12)
        assert report.var_n == pytest.approx(0.1384, abs=1e-12)
        assert report.nvar_t == pytest.approx(0.96, abs=1e-12)
        assert report.nvar_g == pytest.approx(0.896, abs=1e-12)
        assert report.nvar_n == pytest.approx(0.9642, abs=1e-4)
        assert not report.out_of_bounds

    def test_sigma2(self, sigma2):
        report = variability(sigma2)
        assert report.var_t == pytest.approx(0.3072, abs=1e-12)
        assert report.var_g == pytest.approx(0.02016, abs=1e-12)
        assert report.var_n == pytest.approx(0.2468, abs=1e-4)
        assert report.nvar_t == pytest.approx(0.6144, abs=1e-12)
        assert report.nvar_g == pytest.approx(0.32256, abs=1e-12)
        # 0.6752 dans la table provient d'un VAR_N arrondi
        assert report.nvar_n == pytest.approx(0.6752, abs=2e-4)

    def test_sigma3(self, sigma3):
        report = variability(sigma3)
        assert report.var_t == pytest.approx(0.3072, abs=1e-12)
        assert report.var_g == pytest.approx(8.96e-5, rel=1e-10)
        assert report.nvar_g == pytest.approx(0.0014336, rel=1e-10)
        assert report.nvar_n == pytest.approx(0.5682, abs=2e-4)


class TestExtremes:

    @pytest.mark.parametrize("k", [1, 2, 5, 9])
    def test_maximum_entropy(self, k):
        report = variability(CovMatrix.scaled_identity(k))
        for value in (report.nvar_t, report.nvar_g, report.nvar_n):
            assert value == pytest.approx(1.0, abs=1e-12)
        for value in (report.cvar_t, report.cvar_g, report.cvar_n):
            assert value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_minimum_entropy(self, k):
        report = variability(CovMatrix.zeros(k))
        assert report.var_t == 0.0
        assert report.var_g == 0.0
        assert report.var_n == pytest.approx(k ** 3 / 16)
        assert (report.cvar_t, report.cvar_g) == (1.0, 1.0)
        assert report.cvar_n == pytest.approx(1.0, abs=1e-12)

    def test_zero_matrix_with_reduction(self):
        report = variability(CovMatrix.zeros(3), reduce_for_det=True)
        assert report.used_reduction
        assert report.k_star == 0
        assert report.kept_indices == []
        assert report.nvar_g == 0.0

    def test_rank_deficient_reduction(self):
        report = variability(CovMatrix(np.full((2, 2), 0.25)), reduce_for_det=True)
        assert report.used_reduction
        assert report.k_star == 1
        assert report.var_g == pytest.approx(0.25)
        assert report.nvar_g == pytest.approx(1.0)


class TestBounds:

    def test_normalization_width(self):
        for k in range(1, 30):
            low, high = var_n_bounds(k)
            assert high - low == pytest.approx(k * (2 * k - 1) / 16)
            assert normalized_n(low, k) == pytest.approx(1.0)
            assert normalized_n(high, k) == pytest.approx(0.0, abs=1e-12)

    def test_random_valid_matrices(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            k = int(rng.integers(1, 7))
            sigma = _random_bernoulli_covariance(rng, k)
            report = variability(sigma)
            low, high = var_n_bounds(k)
            assert 0.0 <= report.var_t <= k / 4 + 1e-12
            assert report.var_g <= np.prod(np.diag(sigma.entries)) + 1e-15
            assert low - 1e-12 <= report.var_n <= high + 1e-12
            for value in (report.nvar_t, report.nvar_g, report.nvar_n):
                assert -1e-9 <= value <= 1 + 1e-9

    def test_covariances_estimated_from_skeletons(self):
        rng = np.random.default_rng(50)
        for _ in range(200):
            v = int(rng.integers(3, 6))
            pairs = EdgeIndexer(v).pairs()
            weights = rng.random(len(pairs))
            samples = [
                Skeleton(v, frozenset(pair for pair, w in zip(pairs, weights) if rng.random() < w))
                for _ in range(50)
            ]
            sigma = covariance_from_moments(estimate_moments(samples))
            for reduce_for_det in (False, True):
                report = variability(sigma, reduce_for_det=reduce_for_det)
                assert -1e-9 <= report.nvar_n <= 1 + 1e-9

    def test_trace_equality_only_at_quarter_diagonal(self):
        sigma = CovMatrix([[0.25, 0.1], [0.1, 0.25]])
        assert variability(sigma).var_t == 0.5
        assert variability(CovMatrix([[0.25, 0.0], [0.0, 0.2]])).var_t < 0.5

    def test_out_of_bounds_flag(self):
        report = variability(CovMatrix([[0.3, 0.0], [0.0, 0.3]]))
        assert report.out_of_bounds
        assert report.nvar_t > 1.0


class TestComplementStatistic:

    def test_matches_report(self, sigma1, sigma2, sigma3):
        for sigma in (sigma1, sigma2, sigma3):
            report = variability(sigma)
            assert complement_statistic(sigma.entries, "t") == pytest.approx(report.cvar_t, abs=1e-12)
            assert complement_statistic(sigma.entries, "g") == pytest.approx(report.cvar_g, abs=1e-12)

    def test_null_distance_from_eigenvalues(self, sigma1, sigma2, sigma3):
        for sigma in (sigma1, sigma2, sigma3):
            eigenvalues = np.linalg.eigvalsh(sigma.entries)
            expected = 16 * np.sum((eigenvalues - 0.25) ** 2) / 2
            assert complement_statistic(sigma.entries, StatisticKind.N) == pytest.approx(expected, abs=1e-12)

    def test_null_distance_extremes(self):
        for k in (1, 2, 5):
            assert null_distance(0.25 * np.eye(k)) == 0.0
            assert null_distance(np.full((k, k), 0.25) if k > 1 else np.zeros((1, 1))) == pytest.approx(1.0)

    def test_null_distance_matches_nagao(self, sigma2):
        result = nagao_test(sigma2, 50)
        assert null_distance(sigma2.entries) == pytest.approx(
            result.statistic / result.support_bounds[1], abs=1e-12
        )

    def test_batched(self, sigma1, sigma3):
        stack = np.stack([sigma1.entries, sigma3.entries])
        values = complement_statistic(stack, StatisticKind.G)
        np.testing.assert_allclose(values, [1 - 0.896, 1 - 0.0014336], atol=1e-12)


class TestSerialization:

    def test_key_values(self, sigma1):
        text = variability(sigma1).to_key_values()
        lines = text.splitlines()
        assert [line.split("=")[0] for line in lines] == REPORT_COLUMNS + ["kept_indices"]
        assert "var_t=0.47999999999999998" in lines or "var_t=0.48" in lines
        assert lines[-1] == "kept_indices=0;1"

    def test_csv(self, sigma1, sigma2):
        text = VariabilityReport.to_csv([variability(sigma1), variability(sigma2)])
        lines = text.splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert len(lines) == 3
        assert lines[1].endswith("false,2,false")
