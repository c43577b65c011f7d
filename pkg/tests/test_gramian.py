"""

    tests.test_gramian.py
    ~~~~~~~~~~~~~~~~~~~~~
    Gramian, spectrum, reductions.

    @author: z33k

"""
import math
import pickle

import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import quad_vec

from netctl.ctrlcfg import build_input_matrix, sample_nested_chain
from netctl.data import Network, TargetSet
from netctl.gramian import Gramian, NotOutputControllableError, PrecisionConfig, \
    SpectralError, compute_Y, compute_gramian, eig_decompose, eta_step, export_spectrum_csv, \
    interlacing_audit, jacobi_eigh, reduce, worst_case_energy
from netctl.utils.precision import demote, promote

from conftest import diagonal_gramian, drivers, random_network


def _full_gramian(net: Network, fraction: float, prec: PrecisionConfig, tf=1.0) -> Gramian:
    b = build_input_matrix(drivers(net, fraction), net.n)
    return compute_gramian(eig_decompose(net), b, np.eye(net.n), 0.0, tf, prec)


def test_precision_config() -> None:
    prec = PrecisionConfig(30)
    assert abs(prec.threshold - prec.ctx.mpf("1e-15")) < prec.ctx.mpf("1e-40")
    assert prec.ctx.dps == 30
    with pytest.raises(ValueError):
        PrecisionConfig(10)


def test_eig_decompose_diagonal() -> None:
    decomp = eig_decompose(np.diag([-1.0, -2.0, -3.0]))
    assert np.allclose(sorted(decomp.eigenvalues.real), [-3.0, -2.0, -1.0])
    assert np.allclose(np.abs(decomp.vectors) @ np.ones(3), np.ones(3))
    assert decomp.condition == pytest.approx(1.0)


def test_eig_decompose_defective() -> None:
    with pytest.raises(SpectralError):
        eig_decompose(np.array([[-1.0, 1.0], [0.0, -1.0]]))


def test_exp_action_scalar(scalar_net) -> None:
    decomp = eig_decompose(scalar_net)
    assert decomp.exp_action(np.array([1.0]), 1.0)[0] == pytest.approx(math.exp(-1), rel=1e-14)


@pytest.mark.parametrize("precision", [None, PrecisionConfig(30)])
def test_compute_Y_double_eigenvalue(precision) -> None:
    y = compute_Y(eig_decompose(np.diag([-1.0, -1.0])), 0.0, 1.0, precision)
    expected = (math.exp(-2) - 1) / -2
    for value in np.asarray(y).flat:
        assert complex(value).real == pytest.approx(expected, rel=1e-14)


def test_compute_Y_needs_positive_horizon() -> None:
    with pytest.raises(ValueError):
        compute_Y(eig_decompose(np.diag([-1.0])), 1.0, 1.0)


def test_compute_Y_rejects_zero_eigenvalue() -> None:
    with pytest.raises(SpectralError):
        compute_Y(eig_decompose(np.zeros((2, 2))), 0.0, 1.0)


def test_scalar_gramian(scalar_net, prec) -> None:
    gram = compute_gramian(eig_decompose(scalar_net), np.ones((1, 1)), np.ones((1, 1)), 0.0, 1.0,
                           prec)
    assert float(gram.matrix[0, 0]) == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-12)
    assert gram.targets == TargetSet((0,))


def test_zero_input_matrix_gives_zero_gramian(chain3, prec) -> None:
    gram = compute_gramian(eig_decompose(chain3), np.zeros((3, 1)), np.eye(3), 0.0, 1.0, prec)
    assert all(value == 0 for value in gram.matrix.flat)
    assert all(value == 0 for value in gram.eig.values)
    with pytest.raises(NotOutputControllableError):
        worst_case_energy(gram)


@pytest.mark.parametrize("seed", range(5))
def test_gramian_matches_direct_quadrature(seed, prec) -> None:
    net = random_network(6, seed, k_av=1.5)
    b = build_input_matrix(drivers(net, 0.5, seed), net.n)
    gram = compute_gramian(eig_decompose(net), b, np.eye(net.n), 0.0, 1.0, prec)
    a = net.adjacency

    def integrand(s: float) -> np.ndarray:
        e = scipy.linalg.expm(a * s)
        return e @ b @ b.T @ e.T

    direct, _ = quad_vec(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12)
    error = np.linalg.norm(demote(gram.matrix) - direct) / np.linalg.norm(direct)
    assert error < 1e-8


def test_gramian_is_symmetric(prec) -> None:
    gram = _full_gramian(random_network(8, 3), 0.5, prec)
    assert all(gram.matrix[i, j] == gram.matrix[j, i] for i in range(8) for j in range(8))


@pytest.mark.parametrize("digits", [50, pytest.param(100, marks=pytest.mark.slow)])
def test_jacobi_residual_contract(digits) -> None:
    prec = PrecisionConfig(digits)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((50, 50))
    spd = x @ x.T + np.eye(50)
    spectrum = jacobi_eigh(promote(spd, prec.ctx), prec)
    assert spectrum.residual <= prec.power_of_ten(10 - digits)
    assert np.allclose(demote(spectrum.values), np.linalg.eigvalsh(spd), rtol=1e-12)
    gram = spectrum.vectors.T @ spectrum.vectors
    off = max(abs(gram[i, j] - (1 if i == j else 0)) for i in range(50) for j in range(50))
    assert off < prec.power_of_ten(10 - digits)


def test_jacobi_without_warm_start_agrees() -> None:
    prec = PrecisionConfig(40)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((6, 6))
    matrix = promote(x @ x.T, prec.ctx)
    cold = jacobi_eigh(matrix, prec, warm_start=False)
    warm = jacobi_eigh(matrix, prec)
    e, _ = prec.ctx.eigsy(prec.ctx.matrix(matrix.tolist()))
    reference = sorted(e[i] for i in range(6))
    for k in range(6):
        assert abs(cold.values[k] - reference[k]) < prec.power_of_ten(-30)
        assert abs(warm.values[k] - reference[k]) < prec.power_of_ten(-30)


def test_jacobi_ascending_on_diagonal(prec) -> None:
    gram = diagonal_gramian([4.0, 1.0, 2.0], prec)
    assert [float(v) for v in gram.eig.values] == pytest.approx([1.0, 2.0, 4.0], rel=1e-14)


def test_jacobi_sweep_cap() -> None:
    prec = PrecisionConfig(30)
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 5))
    with pytest.raises(SpectralError):
        jacobi_eigh(promote(x + x.T, prec.ctx), prec, sweeps=1, warm_start=False)


def test_reduce_selects_principal_submatrix(prec) -> None:
    gram = _full_gramian(random_network(6, 4, k_av=1.5), 1.0, prec)
    reduced = reduce(gram, TargetSet((1, 4)))
    assert reduced.p == 2
    assert reduced.matrix[0, 1] == gram.matrix[1, 4]
    assert reduced.matrix[1, 1] == gram.matrix[4, 4]
    with pytest.raises(ValueError):
        reduce(reduced, TargetSet((0,)))


def test_eta_step_at_least_one(prec) -> None:
    gram = _full_gramian(random_network(6, 5, k_av=1.5), 1.0, prec)
    parent, child = reduce(gram, TargetSet((0, 2, 3))), reduce(gram, TargetSet((0, 3)))
    assert eta_step(parent, child) >= 1


def test_eta_step_detects_broken_interlacing(prec) -> None:
    parent = diagonal_gramian([1.0, 2.0], prec)
    child = Gramian(promote(np.array([[0.5]]), prec.ctx), prec, (0.0, 1.0), TargetSet((0,)))
    with pytest.raises(SpectralError):
        eta_step(parent, child)


def test_interlacing_on_nested_chain() -> None:
    prec = PrecisionConfig(50)
    gram = _full_gramian(random_network(8, 6), 1.0, prec)
    chain = [reduce(gram, targets) for targets in sample_nested_chain(8, seed=6)]
    report = interlacing_audit(chain)
    assert report.steps == 7
    assert report.violations == 0
    assert report.energies_non_decreasing
    energies = [worst_case_energy(g).energy for g in chain]
    assert all(small <= big for small, big in zip(energies, energies[1:]))


def test_gramian_survives_pickling(prec) -> None:
    gram = _full_gramian(random_network(5, 7, k_av=1.5), 1.0, prec)
    restored = pickle.loads(pickle.dumps(gram))
    assert all(a == b for a, b in zip(gram.matrix.flat, restored.matrix.flat))
    assert restored.targets == gram.targets
    assert restored.prec == gram.prec


def test_export_spectrum_csv(tmp_path, prec) -> None:
    path = export_spectrum_csv(diagonal_gramian([1.0, 3.0], prec), tmp_path / "spectrum.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "index,eigenvalue"
    assert len(lines) == 3
