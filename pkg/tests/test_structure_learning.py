import numpy as np
import pytest

from services.independence_tests import CiStatistic, CiTestKind
from services.structure_learning import (BicScorer, Move, MoveType, bic_score, forward_sample,
                                         grow_shrink, hill_climb, markov_blanket)
from storage.datasets import CategoricalDataset, bayes_net_from_dict, load_reference_network
from storage.graphs import Dag, skeleton_of
from utils.errors import InvalidArgumentError

BINARY = ["0", "1"]


def _network(nodes):
    return bayes_net_from_dict({"nodes": [
        {"name": name, "levels": BINARY, "parents": parents, "cpt": cpt}
        for name, parents, cpt in nodes
    ]})


@pytest.fixture(scope="module")
def chain():
    bn = _network([
        ("a", [], [[0.5, 0.5]]),
        ("b", ["a"], [[0.9, 0.1], [0.1, 0.9]]),
        ("c", ["b"], [[0.9, 0.1], [0.1, 0.9]]),
    ])
    return forward_sample(bn, 5000, 11)


@pytest.fixture(scope="module")
def collider():
    bn = _network([
        ("a", [], [[0.5, 0.5]]),
        ("b", [], [[0.5, 0.5]]),
        ("c", ["a", "b"], [[0.95, 0.05], [0.1, 0.9], [0.1, 0.9], [0.05, 0.95]]),
    ])
    return forward_sample(bn, 5000, 12)


class TestForwardSample:

    def test_deterministic(self):
        bn = load_reference_network()
        first = forward_sample(bn, 200, 5)
        second = forward_sample(bn, 200, 5)
        np.testing.assert_array_equal(first.data, second.data)
        assert first.names == bn.names

    def test_root_marginal(self):
        bn = load_reference_network()
        data = forward_sample(bn, 20_000, 1)
        frequency = data.data[:, 0].mean()
        assert abs(frequency - 0.4) < 4 * np.sqrt(0.24 / 20_000)

    def test_conditional_frequencies(self, chain):
        a, b = chain.data[:, 0], chain.data[:, 1]
        assert abs((a == b).mean() - 0.9) < 0.02

    def test_degenerate_cpt(self):
        bn = _network([("a", [], [[0.0, 1.0]]), ("b", ["a"], [[1.0, 0.0], [1.0, 0.0]])])
        data = forward_sample(bn, 50, np.random.default_rng(0))
        assert data.data[:, 0].tolist() == [1] * 50
        assert data.data[:, 1].tolist() == [0] * 50

    def test_invalid_size(self):
        with pytest.raises(InvalidArgumentError):
            forward_sample(load_reference_network(), 0, 1)


class TestBic:

    def test_empty_dag_by_hand(self):
        data = CategoricalDataset(("x",), (BINARY,), np.array([[0], [0], [1], [0]]))
        expected = 3 * np.log(0.75) + np.log(0.25) - 0.5 * np.log(4)
        assert bic_score(Dag.empty(("x",)), data) == pytest.approx(expected)

    def test_equivalent_dags_have_equal_scores(self, chain):
        forward = Dag(chain.names, frozenset({(0, 1), (1, 2)}))
        backward = Dag(chain.names, frozenset({(2, 1), (1, 0)}))
        assert bic_score(forward, chain) == pytest.approx(bic_score(backward, chain), abs=1e-8)

    def test_true_structure_beats_empty(self, chain):
        scorer = BicScorer(chain)
        truth = Dag(chain.names, frozenset({(0, 1), (1, 2)}))
        assert scorer.score(truth) > scorer.score(Dag.empty(chain.names))

    def test_labels_must_match(self, chain):
        with pytest.raises(InvalidArgumentError):
            bic_score(Dag.empty(("p", "q", "r")), chain)

    @pytest.mark.parametrize("x_share, y_share", [(0.5, 0.5), (0.4, 0.3), (0.1, 0.8)])
    def test_independent_parent_lowers_score(self, x_share, y_share):
        n = 10_000
        x = np.repeat([0, 1], [n - round(n * x_share), round(n * x_share)])
        y = np.concatenate([np.repeat([0, 1], [size - round(size * y_share), round(size * y_share)])
                            for size in np.bincount(x)])
        rows = np.random.default_rng(0).permutation(n)
        data = CategoricalDataset(("x", "y"), (BINARY, BINARY), np.column_stack([x, y])[rows])
        scorer = BicScorer(data)
        assert scorer.local(1, (0,)) < scorer.local(1, ())
        with_parent = Dag(data.names, frozenset({(0, 1)}))
        assert bic_score(with_parent, data) < bic_score(Dag.empty(data.names), data)


class TestHillClimb:

    def test_move_order_and_inverse(self):
        moves = sorted([Move(MoveType.REVERSE, 0, 1), Move(MoveType.ADD, 2, 0), Move(MoveType.ADD, 0, 2)])
        assert moves[0] == Move(MoveType.ADD, 0, 2)
        assert Move(MoveType.REVERSE, 0, 1).inverse() == Move(MoveType.REVERSE, 1, 0)
        assert Move(MoveType.ADD, 0, 1).inverse().kind is MoveType.DELETE

    def test_recovers_chain_skeleton(self, chain):
        dag = hill_climb(chain)
        assert skeleton_of(dag).edges == frozenset({(0, 1), (1, 2)})

    def test_tabu_recovers_chain_skeleton(self, chain):
        dag = hill_climb(chain, tabu_length=10)
        assert skeleton_of(dag).edges == frozenset({(0, 1), (1, 2)})

    def test_restarts_never_lower_the_score(self, collider):
        plain = hill_climb(collider)
        restarted = hill_climb(collider, restarts=3, perturb=2, seed=9)
        assert bic_score(restarted, collider) >= bic_score(plain, collider) - 1e-9

    def test_deterministic(self, collider):
        assert hill_climb(collider, restarts=2, seed=4) == hill_climb(collider, restarts=2, seed=4)

    def test_zero_iterations(self, chain):
        assert hill_climb(chain, max_iter=0, restarts=5).arcs == frozenset()

    def test_invalid_parameters(self, chain):
        with pytest.raises(InvalidArgumentError):
            hill_climb(chain, score="aic")
        with pytest.raises(InvalidArgumentError):
            hill_climb(chain, tabu_length=-1)

    @pytest.mark.parametrize("seed", range(8))
    def test_never_below_empty_graph(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.integers(0, 2, 400)
        columns = [np.where(rng.random(400) < 0.3 + 0.1 * j, base, rng.integers(0, 2, 400)) for j in range(4)]
        data = CategoricalDataset(tuple("abcd"), (BINARY,) * 4, np.column_stack(columns))
        empty = bic_score(Dag.empty(data.names), data)
        for tabu_length in (0, 5):
            dag = hill_climb(data, tabu_length=tabu_length, restarts=1, seed=seed)
            assert bic_score(dag, data) >= empty - 1e-9


class TestGrowShrink:

    def test_markov_blanket_of_chain_end(self, chain):
        blanket = markov_blanket(chain, 0, CiTestKind(alpha=0.001), order=[0, 1, 2])
        assert blanket == [1]

    def test_recovers_chain_skeleton(self, chain):
        dag = grow_shrink(chain, CiTestKind(alpha=0.001))
        assert skeleton_of(dag).edges == frozenset({(0, 1), (1, 2)})

    def test_orients_v_structure(self, collider):
        for statistic in CiStatistic:
            dag = grow_shrink(collider, CiTestKind(statistic, alpha=0.001))
            assert dag.arcs == frozenset({(0, 2), (1, 2)})

    def test_independent_variables(self):
        rng = np.random.default_rng(3)
        data = CategoricalDataset(("x", "y"), (BINARY, BINARY), rng.integers(0, 2, size=(2000, 2)))
        assert grow_shrink(data, CiTestKind(alpha=0.001)).arcs == frozenset()

    def test_invalid_max_cond(self, chain):
        with pytest.raises(InvalidArgumentError):
            grow_shrink(chain, max_cond=-1)

    def test_false_edges_on_independent_data(self):
        alpha, k = 0.05, 6
        edges = []
        for seed in range(50):
            rng = np.random.default_rng(seed)
            data = CategoricalDataset(tuple("abcd"), (BINARY,) * 4, rng.integers(0, 2, size=(500, 4)))
            edges.append(len(grow_shrink(data, CiTestKind(alpha=alpha)).arcs))
        assert np.mean(edges) <= alpha * k * 2
