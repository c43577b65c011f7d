"""

    tests.test_config.py
    ~~~~~~~~~~~~~~~~~~~~
    Experiment configuration.

    @author: z33k

"""
import json
import math

import numpy as np
import pytest

from netctl.config import ConfigError, ExperimentConfig, load_config
from netctl.constants import DEFAULT_FRACTIONS
from netctl.data import InputSet

GENERATE = {"generate": {"n": 20, "gamma_in": 2.5, "gamma_out": 2.5, "k_av": 2.0}}


def test_defaults() -> None:
    cfg = ExperimentConfig.from_json({"network": GENERATE})
    assert cfg.fractions == DEFAULT_FRACTIONS
    assert cfg.horizon == (0.0, 1.0)
    assert cfg.prec.digits == 100
    assert cfg.source == "generate"
    assert cfg.driver_count(20) == 10
    assert cfg.target_set(4).nodes == (0, 1, 2, 3)
    assert np.array_equal(cfg.initial_state(3), np.zeros(3))


def test_lists_become_tuples() -> None:
    cfg = ExperimentConfig.from_json({"network": GENERATE, "fractions": [0.5, 1.0],
                                      "targets": [1, 2]})
    assert cfg.fractions == (0.5, 1.0)
    assert cfg.targets == (1, 2)


def test_erdos_renyi_limit_is_valid() -> None:
    cfg = ExperimentConfig.from_json(
        {"network": {"generate": {**GENERATE["generate"], "gamma_in": "inf", "gamma_out": "inf"}}})
    assert cfg.load_network().meta.gamma_in == math.inf


@pytest.mark.parametrize("data", [
    [],
    {},
    {"network": {}},
    {"network": {"edge_list": "a.txt", "file": "b.json"}},
    {"network": {"generate": {"n": 10}}},
    {"network": {"generate": {**GENERATE["generate"], "gamma_in": 1.5}}},
    {"network": {"generate": {**GENERATE["generate"], "gamma_out": 2.0}}},
    {"network": {"generate": {**GENERATE["generate"], "n": 1}}},
    {"network": {"generate": {**GENERATE["generate"], "k_av": 0.0}}},
    {"network": {"generate": {**GENERATE["generate"], "n": "ten"}}},
    {"network": GENERATE, "bogus": 1},
    {"network": GENERATE, "drivers": 2, "n_d": 0.5},
    {"network": GENERATE, "n_d": 0.0},
    {"network": GENERATE, "drivers": 0},
    {"network": GENERATE, "digits": 8},
    {"network": GENERATE, "t0": 1.0, "tf": 1.0},
    {"network": GENERATE, "fractions": [0.5, 1.2]},
    {"network": GENERATE, "samples": 0},
    {"network": GENERATE, "zetas": [-1.0]},
    {"network": GENERATE, "error_mode": "bogus"},
    {"network": GENERATE, "yf": "best_case"},
    {"network": GENERATE, "cost": {"P": "p.txt"}},
])
def test_invalid(data) -> None:
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(data)


def test_override() -> None:
    cfg = ExperimentConfig.from_json({"network": GENERATE, "seed": 1})
    assert cfg.override(seed=None, digits=40).seed == 1
    assert cfg.override(seed=2).seed == 2
    assert cfg.override(digits=40).prec.digits == 40
    with pytest.raises(ConfigError):
        cfg.override(digits=4)


def test_driver_count() -> None:
    assert ExperimentConfig(GENERATE, drivers=3).driver_count(10) == 3
    assert ExperimentConfig(GENERATE, n_d=0.01).driver_count(10) == 1
    with pytest.raises(ConfigError):
        ExperimentConfig(GENERATE, drivers=30).driver_count(10)


def test_targets_and_state() -> None:
    cfg = ExperimentConfig(GENERATE, targets=(0, 5), x0=(1.0, 2.0))
    with pytest.raises(ConfigError):
        cfg.target_set(4)
    with pytest.raises(ConfigError):
        cfg.initial_state(3)


def test_generated_network_realizations() -> None:
    cfg = ExperimentConfig(GENERATE, seed=5)
    first = cfg.load_network()
    assert first == cfg.load_network()
    assert first.n == 20
    assert first.is_stabilized
    assert cfg.load_network(1) != first


def test_edge_list_network(tmp_path) -> None:
    path = tmp_path / "chain.txt"
    path.write_text("0 1 1.0\n1 2 1.0\n", encoding="utf8")
    net = ExperimentConfig({"edge_list": str(path)}, seed=0).load_network()
    assert net.n == 3
    assert net.edges == ((0, 1), (1, 2))
    undirected = ExperimentConfig({"edge_list": str(path), "directed": False}).load_network()
    assert undirected.edge_count == 4
    with pytest.raises(ConfigError):
        ExperimentConfig({"edge_list": str(tmp_path / "missing.txt")}).load_network()


def test_cost_matrices(tmp_path) -> None:
    np.savetxt(tmp_path / "q.txt", 2 * np.eye(3))
    np.savetxt(tmp_path / "r.txt", np.array([[4.0]]))
    cfg = ExperimentConfig(GENERATE, cost={"Q": str(tmp_path / "q.txt"),
                                           "R": str(tmp_path / "r.txt")})
    cost = cfg.quadratic_cost(3, InputSet((0,)))
    assert np.array_equal(cost.q, 2 * np.eye(3))
    assert np.array_equal(cost.m, np.zeros((3, 1)))
    assert cost.r[0, 0] == 4.0
    plain = ExperimentConfig(GENERATE).quadratic_cost(3, InputSet((0,)), zeta=1.5)
    assert np.array_equal(plain.q, 1.5 * np.eye(3))
    with pytest.raises(ConfigError):
        ExperimentConfig(GENERATE, cost={"Q": str(tmp_path / "missing.txt")}).quadratic_cost(
            3, InputSet((0,)))


def test_load_config(tmp_path) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"network": GENERATE, "seed": 3}), encoding="utf8")
    assert load_config(path).seed == 3
    assert load_config(str(path)).seed == 3
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf8")
    with pytest.raises(ConfigError):
        load_config(broken)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    with pytest.raises(TypeError):
        load_config(3)
