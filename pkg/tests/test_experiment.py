import io
import json

import numpy as np
import pandas as pd
import pytest
from scipy.stats import spearmanr

from services.bernoulli_moments import covariance_from_moments, estimate_moments
from services.bootstrap_service import LearnerConfig
from services.experiment_service import (EXPERIMENT_COLUMNS, ExperimentService, RunManifest,
                                         experiment_service, file_digest, observed_covariance)
from services.montecarlo import Divisor
from storage.datasets import load_reference_network
from storage.graphs import Skeleton
from utils.errors import InvalidArgumentError
from utils.rng import substream

GROWTH_SIZES = (100, 300, 1000, 3000)


def _frame(text):
    return pd.read_csv(io.StringIO(text))


def _uniform_skeletons(rng, m, v):
    k = v * (v - 1) // 2
    return [Skeleton.from_indicator(row, v) for row in rng.integers(0, 2, size=(m, k), dtype=np.uint8)]


class TestTables:

    def test_table1(self):
        table = _frame(ExperimentService.table1()).set_index("matrix")
        assert list(table.index) == ["sigma1", "sigma2", "sigma3"]
        assert table.loc["sigma1", "var_t"] == pytest.approx(0.48)
        assert table.loc["sigma2", "nvar_g"] == pytest.approx(0.32256)
        assert table.loc["sigma3", "nvar_n"] == pytest.approx(0.5682, abs=2e-4)

    def test_table2(self):
        table = _frame(ExperimentService.table2())
        assert len(table) == 45
        row = table[(table["test"] == "nagao") & (table["matrix"] == "sigma1") & (table["m"] == 10)]
        assert row["p_corrected"].iloc[0] == pytest.approx(0.964547, abs=1e-5)

    def test_table3_small_scale(self):
        text = ExperimentService.table3(replicates=300, seed=5)
        table = _frame(text)
        assert list(table.columns) == ["statistic", "matrix", "m", "observed", "p_hat", "se"]
        assert len(table) == 45
        assert table["p_hat"].between(0.0, 1.0).all()
        assert ExperimentService.table3(replicates=300, seed=5) == text

    def test_reproduce_tables(self, tmp_path):
        paths = experiment_service.reproduce_tables(str(tmp_path / "out"), replicates=50, seed=1)
        assert sorted(paths) == ["table1.csv", "table2.csv", "table3.csv"]
        for path in paths.values():
            with open(path, encoding="utf-8") as f:
                assert f.readline().strip()


class TestObservedCovariance:

    def test_divisors(self, three_node_samples):
        moments = estimate_moments(three_node_samples)
        plug_in = covariance_from_moments(moments).entries
        np.testing.assert_array_equal(observed_covariance(moments, Divisor.M).entries, plug_in)
        np.testing.assert_allclose(observed_covariance(moments, "m-1").entries, plug_in * 4 / 3)


class TestSkeletonPvalue:

    def test_random_skeletons_are_not_significant(self):
        p_values = []
        for seed in range(20):
            samples = _uniform_skeletons(substream(seed), 50, 4)
            p_values.append(ExperimentService.skeleton_pvalue(samples, 2000, seed).p_hat)
        assert 0.3 <= np.mean(p_values) <= 0.7

    def test_identical_skeletons_are_significant(self):
        samples = [Skeleton(4, frozenset({(0, 1), (2, 3)}))] * 30
        result = ExperimentService.skeleton_pvalue(samples, 1000, 1)
        assert result.p_hat == 0.0


class TestRunExperiment:

    def test_small_campaign(self):
        bn = load_reference_network()
        learners = [LearnerConfig.parse("hc"), LearnerConfig.parse("gs-g2")]
        text = experiment_service.run_experiment(bn, [80], 2, learners, m=4, mc_replicates=100, seed=3)
        table = _frame(text)
        assert list(table.columns) == EXPERIMENT_COLUMNS
        assert table["learner"].tolist() == ["hc", "gs-g2", "hc", "gs-g2"]
        assert table["replicate"].tolist() == [0, 0, 1, 1]
        assert table["p_value"].between(0.0, 1.0).all()

    def test_zero_replicates(self):
        text = experiment_service.run_experiment(load_reference_network(), [50], 0,
                                                 [LearnerConfig.parse("hc")], 4, 10, 1)
        assert text == ",".join(EXPERIMENT_COLUMNS) + "\n"

    @pytest.mark.parametrize("sizes, replicates, learners", [
        ([50], -1, ["hc"]),
        ([50], 1, []),
        ([0], 1, ["hc"]),
    ])
    def test_invalid(self, sizes, replicates, learners):
        configs = [LearnerConfig.parse(spec) for spec in learners]
        with pytest.raises(InvalidArgumentError):
            experiment_service.run_experiment(load_reference_network(), sizes, replicates, configs, 4, 10, 1)

    @pytest.mark.slow
    def test_significance_grows_with_sample_size(self):
        bn = load_reference_network()
        learners = [LearnerConfig.parse("gs-g2"), LearnerConfig.parse("hc")]
        text = experiment_service.run_experiment(
            bn, list(GROWTH_SIZES), 20, learners, m=50, mc_replicates=10_000, seed=8, n_jobs=4
        )
        table = _frame(text)
        large = table[table["size"] >= 1000]
        for learner in ("gs-g2", "hc"):
            assert (large[large["learner"] == learner]["p_value"] < 0.01).all()

        medians = table.groupby("size")["p_value"].median().reindex(GROWTH_SIZES)
        assert (np.diff(medians.to_numpy()) <= 0).all()
        # trois médianes nulles ou plus plafonnent ρ à -0.775 par ex-aequo
        if (medians == 0).sum() <= 2:
            rho, _ = spearmanr(GROWTH_SIZES, medians.to_numpy())
            assert rho <= -0.9


class TestWorkerDeterminism:

    def test_experiment_output(self):
        bn = load_reference_network()
        learners = [LearnerConfig.parse("gs-g2"), LearnerConfig.parse("hc")]
        outputs = [
            experiment_service.run_experiment(bn, [120], 2, learners, m=12, mc_replicates=5000,
                                              seed=21, n_jobs=n_jobs)
            for n_jobs in (1, 8, 1)
        ]
        assert outputs[0] == outputs[1] == outputs[2]

    def test_reproduce_tables_output(self, tmp_path):
        contents = []
        for n_jobs in (1, 8):
            target = tmp_path / f"jobs{n_jobs}"
            paths = experiment_service.reproduce_tables(str(target), replicates=5000, seed=4, n_jobs=n_jobs)
            contents.append({name: (target / name).read_bytes() for name in paths})
        assert contents[0] == contents[1]


class TestRunManifest:

    def test_json(self, tmp_path):
        path = tmp_path / "input.txt"
        path.write_text("nodes=2\n")
        manifest = RunManifest(command="moments", config={"tol": 0.0}, seed=7)
        manifest.add_input(str(path))
        manifest.add_input("-")
        document = json.loads(manifest.finish(0.0).to_json())
        assert document["command"] == "moments"
        assert document["seed"] == 7
        assert document["inputs"] == {str(path): file_digest(str(path))}
        assert document["wall_clock_seconds"] >= 0
        assert len(file_digest(str(path))) == 64
