"""

    tests.test_netgen.py
    ~~~~~~~~~~~~~~~~~~~~
    Network construction.

    @author: z33k

"""
import io
import logging

import numpy as np
import pytest
import scipy.linalg
from scipy import stats

from netctl.constants import ER_GAMMA
from netctl.data import Network
from netctl.netgen import GenerationError, assign_weights, build_network, \
    degree_preserving_randomize, generate_static, load_edge_list, load_network, save_network, \
    stabilize
from netctl.utils import ParsingError


def test_generate_static_edge_count_and_simplicity() -> None:
    net = generate_static(100, 2.5, 2.5, 2.5, seed=1)
    assert net.edge_count == 250
    assert abs(net.degrees.average - 2.5) < 0.025
    assert all(src != dst for src, dst in net.edges)
    assert len(set(net.edges)) == net.edge_count


def test_generate_static_complete_pair() -> None:
    net = generate_static(2, 3.0, 3.0, 1.0, seed=0)
    assert set(net.edges) == {(0, 1), (1, 0)}


def test_generate_static_infeasible_budget() -> None:
    with pytest.raises(GenerationError):
        generate_static(2, 3.0, 3.0, 2.0, seed=0)


@pytest.mark.parametrize("gamma", [2.0, 1.5])
def test_generate_static_rejects_small_exponent(gamma) -> None:
    with pytest.raises(ValueError):
        generate_static(10, gamma, 3.0, 1.0, seed=0)


def test_generate_static_erdos_renyi_limit() -> None:
    net = generate_static(200, ER_GAMMA, ER_GAMMA, 3.0, seed=3)
    in_degrees = np.array(net.degrees.in_degrees)
    # uniform endpoints leave no hubs
    assert in_degrees.max() < 20


def test_generate_static_hubs_follow_index() -> None:
    net = generate_static(500, 2.1, 2.1, 3.0, seed=5)
    out_degrees = np.array(net.degrees.out_degrees)
    assert out_degrees[:10].mean() > out_degrees[-100:].mean()


def test_generate_static_is_deterministic() -> None:
    assert generate_static(50, 2.5, 2.5, 2.0, seed=7) == generate_static(50, 2.5, 2.5, 2.0, seed=7)


def test_stabilize_moves_spectral_abscissa() -> None:
    net = stabilize(assign_weights(generate_static(50, 2.5, 2.5, 2.0, seed=2), seed=2))
    eigenvalues = scipy.linalg.eigvals(net.adjacency)
    assert abs(np.max(eigenvalues.real) + 1) < 1e-8


def test_stabilize_is_idempotent() -> None:
    net = stabilize(assign_weights(generate_static(30, 2.5, 2.5, 2.0, seed=4), seed=4))
    assert stabilize(net).shift == pytest.approx(net.shift, rel=1e-12)


def test_stabilize_no_edges() -> None:
    net = stabilize(Network(n=1, edges=(), diagonal_noise=(0.3,)))
    assert net.adjacency[0, 0] == pytest.approx(-1.0)


def test_assign_weights_ranges() -> None:
    net = assign_weights(generate_static(40, 2.5, 2.5, 2.0, seed=8), seed=8)
    assert all(0.5 <= w <= 1.5 for w in net.weights)
    assert all(-1 <= d <= 1 for d in net.diagonal_noise)
    assert len(set(net.diagonal_noise)) == net.n


def test_build_network_is_stable_and_reproducible() -> None:
    net = build_network(40, 2.5, 2.5, 2.0, seed=11)
    assert net.meta.seed == 11
    assert net.is_stabilized
    assert net == build_network(40, 2.5, 2.5, 2.0, seed=11)


def test_adjacency_orientation(chain3) -> None:
    a = chain3.adjacency
    assert a[1, 0] == 1.0 and a[0, 1] == 0.0
    assert np.allclose(np.diag(a), [-1.0, -2.0, -3.0])


@pytest.mark.parametrize("iterations", [0, 5, None])
def test_degree_preserving_randomize_keeps_degrees(iterations) -> None:
    net = build_network(60, 2.5, 2.5, 3.0, seed=13)
    rewired = degree_preserving_randomize(net, iterations, seed=13)
    assert rewired.degrees == net.degrees
    assert len(set(rewired.edges)) == rewired.edge_count
    assert all(src != dst for src, dst in rewired.edges)
    assert abs(np.max(scipy.linalg.eigvals(rewired.adjacency).real) + 1) < 1e-8


def test_degree_preserving_randomize_changes_topology() -> None:
    net = build_network(60, 2.5, 2.5, 3.0, seed=17)
    assert set(degree_preserving_randomize(net, seed=17).edges) != set(net.edges)


def test_degree_preserving_randomize_needs_two_edges() -> None:
    with pytest.raises(GenerationError):
        degree_preserving_randomize(Network(n=2, edges=((0, 1),)))


def test_load_edge_list_two_lines() -> None:
    net = load_edge_list(io.BytesIO(b"a b\nb c\n"), seed=0)
    assert net.n == 3
    assert net.edge_count == 2
    assert net.labels == ("a", "b", "c")


def test_load_edge_list_undirected_is_symmetric() -> None:
    net = load_edge_list(io.BytesIO(b"1 2\n2 3\n"), directed=False, seed=0)
    assert set(net.edges) == {(0, 1), (1, 0), (1, 2), (2, 1)}


def test_load_edge_list_keeps_weights_and_drops_duplicates() -> None:
    net = load_edge_list(io.BytesIO(b"0 1 0.75\n0 1 2.0\n1 1\n"), seed=0)
    assert net.edges == ((0, 1),)
    assert net.weights == (0.75,)


def test_load_edge_list_bad_line_reports_number() -> None:
    with pytest.raises(ParsingError, match="Line 2"):
        load_edge_list(io.BytesIO(b"0 1\n0 1 2 3\n"))


def test_load_edge_list_empty() -> None:
    with pytest.raises(ParsingError):
        load_edge_list(io.BytesIO(b"# nothing here\n"))


def test_save_and_load_network(tmp_path) -> None:
    net = build_network(20, ER_GAMMA, ER_GAMMA, 2.0, seed=19)
    path = save_network(net, tmp_path / "network.json")
    assert load_network(path) == net
    first = path.read_bytes()
    save_network(load_network(path), path)
    assert path.read_bytes() == first


def test_save_network_checks_types(tmp_path) -> None:
    with pytest.raises(TypeError):
        save_network("not a network", tmp_path / "network.json")


def test_load_edge_list_rejects_non_utf8() -> None:
    with pytest.raises(ParsingError, match="UTF-8"):
        load_edge_list(io.BytesIO(b"0 1\n\xff\xfe 2\n"))


def test_load_edge_list_warns_on_duplicates(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="netctl.netgen"):
        net = load_edge_list(io.BytesIO(b"0 1\n1 2\n0 1\n"), seed=0)
    assert net.edge_count == 2
    assert "Dropping duplicate edge: '0' -> '1'" in caplog.text


def test_stabilize_diagonal_only() -> None:
    net = stabilize(Network(n=2, edges=(), diagonal_noise=(0.5, -0.5)))
    assert net.shift == pytest.approx(-1.5)
    assert np.allclose(np.sort(scipy.linalg.eigvals(net.adjacency).real), [-2.0, -1.0])
    twice = stabilize(net)
    assert twice.shift == net.shift
    assert np.array_equal(twice.adjacency, net.adjacency)


def test_degree_preserving_randomize_leaves_two_cycle() -> None:
    net = stabilize(Network(n=2, edges=((0, 1), (1, 0)), diagonal_noise=(0.2, -0.3)))
    rewired = degree_preserving_randomize(net, seed=0)
    assert rewired.edges == net.edges
    assert rewired.is_stabilized


def test_degree_preserving_randomize_mixes_edges() -> None:
    net = build_network(50, 2.5, 2.5, 2.0, seed=23)
    original = set(net.edges)
    similarities = []
    for seed in range(20):
        rewired = set(degree_preserving_randomize(net, seed=seed).edges)
        similarities.append(len(original & rewired) / len(original | rewired))
    assert np.mean(similarities) < 0.5


@pytest.mark.slow
def test_generate_static_out_degree_tail() -> None:
    degrees = np.concatenate([generate_static(500, 2.5, 2.5, 2.5, seed=seed).degrees.out_degrees
                              for seed in range(50)])
    ks = np.arange(4, 26)
    ccdf = np.array([np.mean(degrees >= k) for k in ks])
    fit = stats.linregress(np.log(ks), np.log(ccdf))
    # a density tail k^-gamma has a cumulative tail k^-(gamma - 1)
    assert 1 - fit.slope == pytest.approx(2.5, abs=0.5)
