"""

    tests.conftest.py
    ~~~~~~~~~~~~~~~~~
    Shared fixtures.

    @author: z33k

"""
import numpy as np
import pytest

from netctl.ctrlcfg import minimum_driver_count, select_drivers
from netctl.data import InputSet, Network, TargetSet
from netctl.gramian import Gramian, PrecisionConfig
from netctl.netgen import build_network
from netctl.utils.precision import promote


@pytest.fixture
def prec() -> PrecisionConfig:
    return PrecisionConfig(30)


@pytest.fixture
def scalar_net() -> Network:
    """A = [-1].
    """
    return Network(n=1, edges=(), diagonal_noise=(-1.0,))


@pytest.fixture
def chain3() -> Network:
    """0 -> 1 -> 2 with unit weights and self-dynamics -1, -2, -3.
    """
    return Network(n=3, edges=((0, 1), (1, 2)), weights=(1.0, 1.0),
                   diagonal_noise=(-1.0, -2.0, -3.0))


def random_network(n: int, seed: int, k_av=2.0, gamma=2.5) -> Network:
    return build_network(n, gamma, gamma, k_av, seed=seed)


def drivers(net: Network, fraction=1.0, seed=0) -> InputSet:
    m = max(minimum_driver_count(net), int(round(fraction * net.n)))
    return select_drivers(net, m, seed)


def diagonal_gramian(values, prec: PrecisionConfig, horizon=(0.0, 1.0)) -> Gramian:
    matrix = promote(np.diag(np.asarray(values, dtype=float)), prec.ctx)
    return Gramian(matrix, prec, horizon, TargetSet(tuple(range(len(values)))))
