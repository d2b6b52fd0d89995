"""Fixtures partagées et option --runslow."""
import numpy as np
import pytest

from services.bernoulli_moments import CovMatrix
from storage.graphs import Skeleton

SIGMA_1 = np.array([[6.0, 1.0], [1.0, 6.0]]) / 25.0
SIGMA_2 = np.array([[66.0, -21.0], [-21.0, 126.0]]) / 625.0
SIGMA_3 = np.array([[66.0, 91.0], [91.0, 126.0]]) / 625.0


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="exécuter les tests de calibration longs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="nécessite --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def sigma1():
    return CovMatrix(SIGMA_1)


@pytest.fixture
def sigma2():
    return CovMatrix(SIGMA_2)


@pytest.fixture
def sigma3():
    return CovMatrix(SIGMA_3)


@pytest.fixture
def three_node_samples():
    """Quatre squelettes sur 3 nœuds (arêtes 0-1, 0-2, 1-2)."""
    return [
        Skeleton(3, frozenset({(0, 1)})),
        Skeleton(3, frozenset({(0, 1), (1, 2)})),
        Skeleton(3, frozenset({(0, 2)})),
        Skeleton(3, frozenset()),
    ]
