"""

    netctl.gramian.py
    ~~~~~~~~~~~~~~~~~
    Output controllability Gramian from the eigendecomposition of the state matrix, its
    extended-precision spectrum, worst-case energies, reductions, interlacing audits and
    eta-step ratios.

    @author: z33k

"""
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg
from mpmath.ctx_mp import MPContext

from netctl.constants import DEFAULT_DIGITS, EIG_RESIDUAL_TOLERANCE, JACOBI_SWEEPS, \
    MAX_EIGVEC_CONDITION, MIN_DIGITS, PathLike
from netctl.data import Network, TargetSet
from netctl.utils import timed, write_csv
from netctl.utils.precision import demote, from_raw, get_context, imag_part, promote, \
    real_part, to_raw

_log = logging.getLogger(__name__)


class SpectralError(ArithmeticError):
    """Raised whenever an eigendecomposition cannot be trusted.
    """


class NotOutputControllableError(ValueError):
    """Raised when the smallest eigenvalue of a reduced Gramian falls under the positivity
    threshold.
    """
    def __init__(self, message: str, mu_min: object = None) -> None:
        super().__init__(message)
        self.mu_min = mu_min


@dataclass(frozen=True)
class PrecisionConfig:
    """Working precision of the software floating point format in decimal digits.
    """
    digits: int = DEFAULT_DIGITS

    def __post_init__(self) -> None:
        if self.digits < MIN_DIGITS:
            raise ValueError(f"At least {MIN_DIGITS} digits are required, got: {self.digits}")

    @property
    def ctx(self) -> MPContext:
        return get_context(self.digits)

    def power_of_ten(self, exponent: float) -> object:
        return self.ctx.power(10, self.ctx.mpf(exponent))

    @property
    def threshold(self) -> object:
        """Smallest eigenvalue a controllable reduced Gramian must exceed.
        """
        return self.power_of_ten(-self.digits / 2)

    @property
    def residual_tolerance(self) -> object:
        return self.power_of_ten(-self.digits + 10)

    @property
    def interlacing_tolerance(self) -> object:
        return self.power_of_ten(-self.digits + 12)


@dataclass(frozen=True, eq=False)
class EigDecomp:
    """Hardware precision eigendecomposition A = V diag(lambda) V^-1.
    """
    matrix: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float
    residual: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def exp_action(self, z: np.ndarray, s: float) -> np.ndarray:
        """Return e^(A s) z.
        """
        return (self.vectors @ (np.exp(self.eigenvalues * s) * (self.inverse @ z))).real

    def exp_transpose_actions(self, z: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Return rows e^(A^T s_k) z for every s_k in ``s``.
        """
        coefficients = self.vectors.T @ z
        return ((np.exp(np.outer(s, self.eigenvalues)) * coefficients) @ self.inverse).real


def eig_decompose(net: Network | np.ndarray) -> EigDecomp:
    """Eigendecompose the state matrix of ``net`` (or a bare matrix).

    Raises:
        SpectralError: on residuals above tolerance or a near-defective eigenvector basis
    """
    a = np.array(net.adjacency if isinstance(net, Network) else net, dtype=float)
    try:
        eigenvalues, vectors = scipy.linalg.eig(a)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SpectralError(f"Eigensolver failed: {e}") from e
    scale = max(1.0, float(np.linalg.norm(a, 2))) if a.size else 1.0
    residual = float(np.max(np.linalg.norm(a @ vectors - vectors * eigenvalues, axis=0),
                            initial=0.0)) / scale
    if residual > EIG_RESIDUAL_TOLERANCE:
        raise SpectralError(f"Eigenpair residual {residual:.3e} above tolerance")
    condition = float(np.linalg.cond(vectors))
    if not np.isfinite(condition) or condition > MAX_EIGVEC_CONDITION:
        raise SpectralError(
            f"Near-defective state matrix (eigenvector condition {condition:.3e}), consider "
            f"re-noising the diagonal")
    return EigDecomp(a, eigenvalues, vectors, np.linalg.inv(vectors), condition, residual)


def compute_Y(decomp: EigDecomp, t0: float, tf: float,
              prec: PrecisionConfig | None = None) -> np.ndarray:
    """Return Y with Y_ij = (exp[(lambda_i + lambda_j)(tf - t0)] - 1) / (lambda_i + lambda_j).

    Computed in hardware complex arithmetic unless ``prec`` is given.
    """
    if tf <= t0:
        raise ValueError(f"Time horizon must be positive, got: ({t0}, {tf})")
    horizon = tf - t0
    if prec is None:
        sums = decomp.eigenvalues[:, None] + decomp.eigenvalues[None, :]
        if np.min(np.abs(sums)) < EIG_RESIDUAL_TOLERANCE:
            raise SpectralError("Eigenvalue pair sums to zero, state matrix is not Hurwitz")
        return np.expm1(sums * horizon) / sums

    ctx = prec.ctx
    lam = promote(decomp.eigenvalues.astype(complex), ctx)
    sums = lam[:, None] + lam[None, :]
    if min(abs(x) for x in sums.flat) < prec.threshold:
        raise SpectralError("Eigenvalue pair sums to zero, state matrix is not Hurwitz")
    return np.frompyfunc(ctx.expm1, 1, 1)(sums * ctx.mpf(horizon)) / sums


def _versor_indices(m: np.ndarray) -> list[int] | None:
    """Return column positions of the ones if every row of ``m`` is a versor, else ``None``.
    """
    if m.ndim != 2 or not np.all((m == 0) | (m == 1)) or not np.all(m.sum(axis=1) == 1):
        return None
    return np.argmax(m, axis=1).tolist()


def _mp_inverse(v: np.ndarray, ctx: MPContext) -> np.ndarray:
    inverse = ctx.inverse(ctx.matrix(v.tolist()))
    return np.array(inverse.tolist(), dtype=object)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with eigenvectors as columns.
    """
    values: np.ndarray
    vectors: np.ndarray
    residual: object
    sweeps: int

    @property
    def mu_min(self) -> object:
        return self.values[0]

    @property
    def v_min(self) -> np.ndarray:
        return self.vectors[:, 0]


@dataclass(frozen=True, eq=False)
class Gramian:
    """Reduced output controllability Gramian W_p (a real symmetric object array of
    extended-precision numbers).
    """
    matrix: np.ndarray
    prec: PrecisionConfig
    horizon: tuple[float, float]
    targets: TargetSet | None = None

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eig(self) -> Spectrum:
        return spectrum(self)

    @property
    def mu_min(self) -> object:
        return self.eig.mu_min

    def __reduce__(self):
        return _restore_gramian, (to_raw(self.matrix), self.prec.digits, self.horizon,
                                  self.targets)


def _restore_gramian(raw, digits: int, horizon: tuple[float, float],
                     targets: TargetSet | None) -> Gramian:
    prec = PrecisionConfig(digits)
    return Gramian(from_raw(raw, prec.ctx), prec, horizon, targets)


@timed("Gramian computation", precision=2)
def compute_gramian(decomp: EigDecomp, b: np.ndarray, c: np.ndarray, t0: float, tf: float,
                    prec: PrecisionConfig | None = None) -> Gramian:
    """Compute W_p = C V (Y o V^-1 B B^T V^-T) V^T C^T in extended precision.

    The eigendecomposition is promoted from hardware precision. The result is symmetrized and
    its imaginary residue discarded.
    """
    prec = prec or PrecisionConfig()
    ctx = prec.ctx
    y = compute_Y(decomp, t0, tf, prec)
    v = promote(decomp.vectors.astype(complex), ctx)
    v_inv = _mp_inverse(v, ctx)

    columns = _versor_indices(np.asarray(b, dtype=float).T)
    k = v_inv[:, columns] if columns is not None else v_inv @ promote(np.asarray(b, float), ctx)
    rows = _versor_indices(np.asarray(c, dtype=float))
    cv = v[rows, :] if rows is not None else promote(np.asarray(c, float), ctx) @ v

    w = cv @ (y * (k @ k.T)) @ cv.T
    scale = max([abs(x) for x in w.flat] + [ctx.one])
    residue = max([abs(x) for x in imag_part(w).flat] + [ctx.zero])
    if residue > prec.residual_tolerance * scale:
        _log.warning(f"Imaginary residue {ctx.nstr(residue, 5)} above tolerance discarded")
    w = real_part(w)
    w = (w + w.T) / 2
    targets = TargetSet(tuple(rows)) if rows is not None else None
    return Gramian(w, prec, (t0, tf), targets)


def _orthonormalize(q: np.ndarray, ctx: MPContext) -> np.ndarray:
    """Orthonormalize columns by classical Gram-Schmidt with reorthogonalization.
    """
    q = q.copy()
    for k in range(q.shape[1]):
        for _ in range(2):
            if k:
                q[:, k] = q[:, k] - q[:, :k] @ (q[:, :k].T @ q[:, k])
        q[:, k] = q[:, k] / ctx.sqrt(q[:, k] @ q[:, k])
    return q


def jacobi_eigh(matrix: np.ndarray, prec: PrecisionConfig, sweeps=JACOBI_SWEEPS,
                warm_start=True) -> Spectrum:
    """Diagonalize a real symmetric object array with the cyclic Jacobi method.

    Off-diagonal entries are annihilated until each satisfies
    |a_ij| <= eps * sqrt(|a_ii * a_jj|), which preserves relative accuracy of tiny eigenvalues.
    A warm start rotates the matrix by hardware eigenvectors (reorthonormalized in extended
    precision) so that only a few sweeps remain.

    Raises:
        SpectralError: on non-convergence within ``sweeps`` sweeps
    """
    ctx = prec.ctx
    a = np.array(matrix, dtype=object, copy=True)
    p = a.shape[0]
    v = np.empty((p, p), dtype=object)
    for idx in np.ndindex(p, p):
        v[idx] = ctx.one if idx[0] == idx[1] else ctx.zero
    if warm_start and p > 1:
        hardware = demote(a)
        if np.all(np.isfinite(hardware)):
            _, q = np.linalg.eigh(hardware)
            v = _orthonormalize(promote(q, ctx), ctx)
            a = v.T @ a @ v
            a = (a + a.T) / 2

    eps = ctx.eps
    done = 0
    for sweep in range(1, sweeps + 1):
        rotated = False
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if not aij:
                    continue
                aii, ajj = a[i, i], a[j, j]
                if abs(aij) <= eps * ctx.sqrt(abs(aii * ajj)):
                    a[i, j] = a[j, i] = ctx.zero
                    continue
                rotated = True
                theta = (ajj - aii) / (2 * aij)
                if theta:
                    t = ctx.sign(theta) / (abs(theta) + ctx.sqrt(theta * theta + 1))
                else:
                    t = ctx.one
                c = 1 / ctx.sqrt(t * t + 1)
                s = t * c
                ci, cj = a[:, i].copy(), a[:, j].copy()
                a[:, i], a[:, j] = c * ci - s * cj, s * ci + c * cj
                ri, rj = a[i, :].copy(), a[j, :].copy()
                a[i, :], a[j, :] = c * ri - s * rj, s * ri + c * rj
                a[i, i], a[j, j] = aii - t * aij, ajj + t * aij
                a[i, j] = a[j, i] = ctx.zero
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i], v[:, j] = c * vi - s * vj, s * vi + c * vj
        done = sweep
        if not rotated:
            break
    else:
        off = ctx.sqrt(sum(a[i, j] ** 2 for i in range(p) for j in range(p) if i != j))
        raise SpectralError(
            f"Jacobi iteration did not converge in {sweeps} sweep(s), off-diagonal norm: "
            f"{ctx.nstr(off, 5)}")

    order = sorted(range(p), key=lambda k: a[k, k])
    values = np.empty(p, dtype=object)
    values[:] = [a[k, k] for k in order]
    vectors = v[:, order] if p else v
    residual = _mean_residual(np.asarray(matrix, dtype=object), values, vectors, ctx)
    scale = max([abs(x) for x in np.asarray(matrix).flat] + [ctx.one])
    if residual > prec.residual_tolerance * scale:
        _log.warning(f"Mean eigen-residual {ctx.nstr(residual, 5)} above the "
                     f"{prec.digits}-digit contract")
    return Spectrum(values, vectors, residual, done)


def _mean_residual(matrix: np.ndarray, values: np.ndarray, vectors: np.ndarray,
                   ctx: MPContext) -> object:
    p = matrix.shape[0]
    if not p:
        return ctx.zero
    diff = matrix @ vectors - vectors * values
    return sum(ctx.sqrt(diff[:, k] @ diff[:, k]) for k in range(p)) / p


def spectrum(gram: Gramian) -> Spectrum:
    """Return the full spectral decomposition of ``gram`` with eigenvalues ascending.
    """
    return jacobi_eigh(gram.matrix, gram.prec)


@dataclass(frozen=True)
class WorstCase:
    energy: object
    log10_energy: float


def require_output_controllable(gram: Gramian) -> None:
    mu_min = gram.mu_min
    if not mu_min > gram.prec.threshold:
        raise NotOutputControllableError(
            f"Not output controllable: mu_1 = {gram.prec.ctx.nstr(mu_min, 5)} under threshold "
            f"1e-{gram.prec.digits / 2:g}", mu_min)


def worst_case_energy(gram: Gramian) -> WorstCase:
    """Return E_max = 1/mu_1, the energy needed along the hardest output direction.
    """
    require_output_controllable(gram)
    ctx = gram.prec.ctx
    energy = 1 / gram.mu_min
    return WorstCase(energy, float(ctx.log10(energy)))


def reduce(gram_full: Gramian, keep: TargetSet) -> Gramian:
    """Select the principal submatrix of ``gram_full`` indexed by ``keep``.
    """
    if gram_full.targets is None:
        raise ValueError("Gramian has no target set to reduce")
    if not keep.issubset(gram_full.targets):
        raise ValueError(f"Targets {keep.nodes} are not a subset of {gram_full.targets.nodes}")
    positions = [gram_full.targets.nodes.index(node) for node in keep.nodes]
    matrix = gram_full.matrix[np.ix_(positions, positions)]
    return Gramian(matrix, gram_full.prec, gram_full.horizon, keep)


def eta_step(gram_parent: Gramian, gram_child: Gramian) -> object:
    """Return eta_p = mu_1(child) / mu_1(parent), the rate at which the worst-case energy grows
    when the parent's extra target is added back.

    Raises:
        SpectralError: if the ratio falls under 1 beyond eigensolver tolerance
    """
    if gram_parent.targets is not None and gram_child.targets is not None:
        if not gram_child.targets.issubset(gram_parent.targets):
            raise ValueError("Child Gramian is not a reduction of the parent")
    mu_parent, mu_child = gram_parent.mu_min, gram_child.mu_min
    tolerance = gram_parent.prec.interlacing_tolerance
    if mu_child < mu_parent - tolerance:
        raise SpectralError(
            f"Interlacing violated: mu_1 dropped from {gram_parent.prec.ctx.nstr(mu_parent, 8)} "
            f"to {gram_parent.prec.ctx.nstr(mu_child, 8)}")
    if not mu_parent > 0:
        raise NotOutputControllableError("Parent Gramian is singular", mu_parent)
    return mu_child / mu_parent


@dataclass(frozen=True)
class InterlacingReport:
    steps: int
    violations: int
    max_violation: object
    energies_non_decreasing: bool


def interlacing_audit(chain: Sequence[Gramian]) -> InterlacingReport:
    """Verify mu_k(parent) <= mu_k(child) <= mu_(k+d)(parent) along a nested chain of Gramians
    (d being the number of targets a step drops).

    Violations above tolerance are counted, not raised.
    """
    chain = sorted(chain, key=lambda g: g.p, reverse=True)
    if not chain:
        raise ValueError("Empty chain")
    ctx = chain[0].prec.ctx
    tolerance = chain[0].prec.interlacing_tolerance
    violations, worst, monotone = 0, ctx.zero, True
    for parent, child in zip(chain, chain[1:]):
        big, small = parent.eig.values, child.eig.values
        gap = len(big) - len(small)
        for k in range(len(small)):
            excess = max(big[k] - small[k], small[k] - big[k + gap], ctx.zero)
            worst = max(worst, excess)
            if excess > tolerance:
                violations += 1
        # worst-case energy can only grow with the target count
        if small[0] < big[0] - tolerance:
            monotone = False
    if violations:
        _log.warning(f"Interlacing audit found {violations} violation(s)")
    return InterlacingReport(len(chain) - 1, violations, worst, monotone)


def export_spectrum_csv(gram: Gramian, path: PathLike) -> Path:
    """Write (index, eigenvalue) rows with eigenvalues as decimal strings of full precision.
    """
    ctx = gram.prec.ctx
    rows = [[str(i), ctx.nstr(value, gram.prec.digits)]
            for i, value in enumerate(gram.eig.values, start=1)]
    return write_csv(path, ["index", "eigenvalue"], rows)
