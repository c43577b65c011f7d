"""

    tests.test_ctrlcfg.py
    ~~~~~~~~~~~~~~~~~~~~~
    Control configuration.

    @author: z33k

"""
import math

import numpy as np
import pytest

from netctl.ctrlcfg import DriverSelectionError, build_input_matrix, build_output_matrix, \
    minimum_driver_count, output_controllability_check, reaches_all, root_components, \
    sample_nested_chain, sample_target_set, select_drivers
from netctl.data import InputSet, Network, TargetSet

from conftest import random_network


def test_root_components_of_chain(chain3) -> None:
    assert root_components(chain3) == [[0]]
    assert minimum_driver_count(chain3) == 1


def test_isolated_node_is_a_root() -> None:
    net = Network(n=3, edges=((0, 1),), diagonal_noise=(-1.0, -2.0, -3.0))
    assert root_components(net) == [[0], [2]]


def test_cycle_is_a_single_root() -> None:
    net = Network(n=4, edges=((0, 1), (1, 0), (1, 2), (2, 3)))
    assert root_components(net) == [[0, 1]]


def test_select_drivers_too_few() -> None:
    net = Network(n=3, edges=((0, 1),))
    with pytest.raises(DriverSelectionError) as e:
        select_drivers(net, 1, seed=0)
    assert e.value.minimum == 2


def test_select_drivers_too_many(chain3) -> None:
    with pytest.raises(ValueError):
        select_drivers(chain3, 4, seed=0)


@pytest.mark.parametrize("seed", range(5))
def test_select_drivers_reach_everything(seed) -> None:
    net = random_network(50, seed)
    m = max(minimum_driver_count(net), 10)
    inputs = select_drivers(net, m, seed=seed)
    assert inputs.m == m
    assert len(set(inputs.nodes)) == m
    assert reaches_all(net, inputs)
    for members in root_components(net):
        assert any(node in inputs for node in members)


def test_select_drivers_is_deterministic() -> None:
    net = random_network(30, 1)
    m = minimum_driver_count(net) + 3
    assert select_drivers(net, m, seed=9) == select_drivers(net, m, seed=9)


def test_reaches_all_detects_gap(chain3) -> None:
    assert reaches_all(chain3, InputSet((0,)))
    assert not reaches_all(chain3, InputSet((1,)))


def test_versor_matrices() -> None:
    b = build_input_matrix(InputSet((2, 0)), 3)
    c = build_output_matrix(TargetSet((1,)), 3)
    assert np.array_equal(b, [[0, 1], [0, 0], [1, 0]])
    assert np.array_equal(c, [[0, 1, 0]])


def test_versor_matrix_out_of_range() -> None:
    with pytest.raises(IndexError):
        build_output_matrix(TargetSet((3,)), 3)


def test_sample_target_set() -> None:
    targets = sample_target_set(20, 5, seed=3)
    assert targets.p == 5
    assert list(targets.nodes) == sorted(set(targets.nodes))
    assert targets == sample_target_set(20, 5, seed=3)
    assert sample_target_set(4, 4, seed=0).nodes == (0, 1, 2, 3)


@pytest.mark.parametrize("p", [0, 6])
def test_sample_target_set_range(p) -> None:
    with pytest.raises(ValueError):
        sample_target_set(5, p, seed=0)


def test_sample_target_set_checks_types() -> None:
    with pytest.raises(TypeError):
        sample_target_set(5.0, 2)


def test_sample_nested_chain() -> None:
    chain = sample_nested_chain(6, seed=2)
    assert [t.p for t in chain] == list(range(1, 7))
    assert all(small.issubset(big) for small, big in zip(chain, chain[1:]))


def test_chain_is_output_controllable_from_its_root(chain3) -> None:
    report = output_controllability_check(chain3, InputSet((0,)), TargetSet((2,)), digits=30)
    assert report.controllable
    assert report.mu_min > report.threshold


def test_full_drivers_control_all_targets(chain3) -> None:
    report = output_controllability_check(chain3, InputSet((0, 1, 2)), TargetSet((0, 1, 2)),
                                          digits=30)
    assert report.controllable


def test_disconnected_target_is_not_controllable() -> None:
    net = Network(n=3, edges=((0, 1),), diagonal_noise=(-1.0, -2.0, -3.0))
    report = output_controllability_check(net, InputSet((0,)), TargetSet((2,)), digits=30)
    assert not report.controllable
    assert report.log10_mu_min == -math.inf or report.log10_mu_min < -15
