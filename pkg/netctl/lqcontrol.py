"""

    netctl.lqcontrol.py
    ~~~~~~~~~~~~~~~~~~~
    Target control with a general quadratic cost: barred matrices, continuous algebraic Riccati
    equation, closed-loop (tilde) system, two-part optimal input and its energy, zeta sweeps.

    @author: z33k

"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from netctl.constants import CARE_RESIDUAL_TOLERANCE, DEFAULT_FRACTIONS, DEFAULT_SAMPLES, \
    DEFAULT_T0, DEFAULT_TF, DEFAULT_ZETAS, MAX_EIGVEC_CONDITION, ODE_TOLERANCE, PathLike, \
    REPORT_GRID_POINTS
from netctl.ctrlcfg import build_input_matrix
from netctl.data import InputSet, Network, ScalingResult, TargetSet
from netctl.gramian import EigDecomp, Gramian, NotOutputControllableError, PrecisionConfig, \
    compute_gramian, eig_decompose, reduce, require_output_controllable
from netctl.minenergy import ControlProblem, ControlSignal, IntegrationError, Maneuver, \
    QuadratureRule, Trajectory, energy_closed_form, energy_quadrature, legendre_gauss
from netctl.scaling import fit_eta, full_gramian, realization_seed, sample_target_energies
from netctl.utils import timed, write_csv
from netctl.utils.precision import demote, format_number, promote

_log = logging.getLogger(__name__)


class InvalidCostError(ValueError):
    """Raised on weights that don't define a valid quadratic cost.
    """


class RiccatiError(ArithmeticError):
    """Raised when no trustworthy stabilizing Riccati solution is found.
    """


def _is_symmetric(m: np.ndarray) -> bool:
    return np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(m).max(initial=0))))


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """Weights of J = 1/2 * integral of (x^T Q x + 2 x^T M u + u^T R u) dt.
    """
    q: np.ndarray
    m: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        for name in ("q", "m", "r"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), float)))
        n, m = self.m.shape
        if self.q.shape != (n, n) or self.r.shape != (m, m):
            raise InvalidCostError(f"Inconsistent weight shapes: Q{self.q.shape}, "
                                   f"M{self.m.shape}, R{self.r.shape}")
        if not _is_symmetric(self.q) or not _is_symmetric(self.r):
            raise InvalidCostError("Q and R must be symmetric")
        if np.min(np.linalg.eigvalsh(self.q)) < -1e-12:
            raise InvalidCostError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(self.r)) <= 0:
            raise InvalidCostError("R must be positive definite")

    @classmethod
    def from_zeta(cls, zeta: float, n: int, m: int) -> "QuadraticCost":
        """Return the cost with Q = zeta * I, M = 0 and R = I.
        """
        if zeta < 0:
            raise InvalidCostError(f"State weight must be non-negative, got: {zeta}")
        return cls(zeta * np.eye(n), np.zeros((n, m)), np.eye(m))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def inputs(self) -> int:
        return self.r.shape[0]

    @property
    def r_inv(self) -> np.ndarray:
        return np.linalg.inv(self.r)

    @property
    def r_inv_sqrt(self) -> np.ndarray:
        """Inverse of the principal square root of R.
        """
        w, u = np.linalg.eigh(self.r)
        return (u / np.sqrt(w)) @ u.T

    @property
    def is_identity_weighted(self) -> bool:
        return np.array_equal(self.r, np.eye(self.inputs))


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    s: np.ndarray
    residual: float
    a_bar: np.ndarray
    b_bar: np.ndarray
    q_bar: np.ndarray

    @property
    def closed_loop(self) -> np.ndarray:
        """A~ = A_bar - B_bar B_bar^T S.
        """
        return self.a_bar - self.b_bar @ self.b_bar.T @ self.s


@dataclass(frozen=True, eq=False)
class TildeSystem:
    a_tilde: np.ndarray
    decomp: EigDecomp
    w_tilde: Gramian
    beta_tilde: np.ndarray


def bar_matrices(net: Network, b: np.ndarray,
                 cost: QuadraticCost) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return A_bar = A - B R^-1 M^T, B_bar = B R^(-1/2) and Q_bar = Q - M R^-1 M^T.

    Raises:
        InvalidCostError: if Q_bar isn't positive semidefinite or shapes don't match
    """
    if b.shape != (net.n, cost.inputs) or cost.n != net.n:
        raise InvalidCostError(f"Cost shaped for ({cost.n}, {cost.inputs}), system is "
                               f"{b.shape}")
    r_inv = cost.r_inv
    a_bar = net.adjacency - b @ r_inv @ cost.m.T
    b_bar = b @ cost.r_inv_sqrt
    q_bar = cost.q - cost.m @ r_inv @ cost.m.T
    q_bar = (q_bar + q_bar.T) / 2
    if np.min(np.linalg.eigvalsh(q_bar)) < -1e-10 * max(1.0, float(np.abs(q_bar).max())):
        raise InvalidCostError("Q - M R^-1 M^T is not positive semidefinite")
    return a_bar, b_bar, q_bar


def _care_residual(a_bar: np.ndarray, g: np.ndarray, q_bar: np.ndarray,
                   s: np.ndarray) -> np.ndarray:
    return a_bar.T @ s + s @ a_bar - s @ g @ s + q_bar


def solve_care(a_bar: np.ndarray, b_bar: np.ndarray, q_bar: np.ndarray) -> RiccatiSolution:
    """Return the stabilizing solution of S B_bar B_bar^T S - S A_bar - A_bar^T S - Q_bar = 0.

    The stable invariant subspace of the Hamiltonian [[A_bar, -G], [-Q_bar, -A_bar^T]]
    (G = B_bar B_bar^T) comes from an ordered real Schur form. One Newton step refines it.

    Raises:
        RiccatiError: if there's no stabilizing solution or its basis is ill-conditioned
    """
    n = a_bar.shape[0]
    g = b_bar @ b_bar.T
    hamiltonian = np.block([[a_bar, -g], [-q_bar, -a_bar.T]])
    _, z, sdim = scipy.linalg.schur(hamiltonian, output="real", sort="lhp")
    if sdim != n:
        raise RiccatiError(f"Hamiltonian has {sdim} stable eigenvalue(s), {n} expected")
    u11, u21 = z[:n, :n], z[n:, :n]
    condition = np.linalg.cond(u11)
    if not np.isfinite(condition) or condition > MAX_EIGVEC_CONDITION:
        raise RiccatiError(f"Ill-conditioned stable subspace basis (condition {condition:.3e})")
    s = np.linalg.solve(u11.T, u21.T).T
    s = (s + s.T) / 2

    closed = a_bar - g @ s
    correction = scipy.linalg.solve_continuous_lyapunov(
        closed.T, -_care_residual(a_bar, g, q_bar, s))
    s = s + (correction + correction.T) / 2

    residual = float(np.linalg.norm(_care_residual(a_bar, g, q_bar, s), "fro"))
    bound = CARE_RESIDUAL_TOLERANCE * (1 + np.linalg.norm(s, "fro") ** 2)
    if residual > bound:
        raise RiccatiError(f"Riccati residual {residual:.3e} above bound {bound:.3e}")
    solution = RiccatiSolution(s, residual, a_bar, b_bar, q_bar)
    spectral_abscissa = float(np.max(np.linalg.eigvals(solution.closed_loop).real))
    if spectral_abscissa >= 0:
        raise RiccatiError(f"Closed loop isn't Hurwitz (max Re(lambda) = {spectral_abscissa})")
    _log.info(f"Solved Riccati equation (residual {residual:.3e})")
    return solution


def solve_cost(net: Network, b: np.ndarray, cost: QuadraticCost) -> RiccatiSolution:
    return solve_care(*bar_matrices(net, b, cost))


def tilde_system(prob: ControlProblem, cost: QuadraticCost, riccati: RiccatiSolution,
                 prec: PrecisionConfig | None = None) -> TildeSystem:
    """Build the closed-loop matrix A~, the reduced Gramian W~_p of (A~, B R^(-1/2), C) and the
    closed-loop maneuver beta~ = yf - C e^(A~ (tf - t0)) x0.

    Raises:
        SpectralError: if A~ is (nearly) defective
    """
    a_tilde = riccati.closed_loop
    decomp = eig_decompose(a_tilde)
    w_tilde = compute_gramian(decomp, riccati.b_bar, prob.c, prob.t0, prob.tf, prec)
    free = decomp.exp_action(prob.x0, prob.horizon)
    return TildeSystem(a_tilde, decomp, w_tilde, prob.yf - free[list(prob.targets.nodes)])


@dataclass(frozen=True)
class _Feedforward:
    """Evaluates u_c2(t) = R^-1 B^T e^(A~^T (tf - t)) w.
    """
    decomp: EigDecomp
    gain: np.ndarray  # B R^-1
    w: np.ndarray
    tf: float

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        s = self.tf - np.atleast_1d(np.asarray(t, dtype=float))
        u = self.decomp.exp_transpose_actions(self.w, s) @ self.gain
        return u[0] if np.ndim(t) == 0 else u


@dataclass(frozen=True)
class _ClosedLoopInput:
    """Evaluates u_c(t) = -K x(t) + u_c2(t) along an integrated closed-loop trajectory.
    """
    states: object  # dense ODE solution
    k: np.ndarray
    feedforward: _Feedforward

    def feedback(self, t: float | np.ndarray) -> np.ndarray:
        x = self.states(t)
        return -(self.k @ x).T

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        return self.feedback(t) + self.feedforward(t)


@dataclass(frozen=True, eq=False)
class LqControl:
    signal: ControlSignal
    trajectory: Trajectory
    feedback: ControlSignal
    feedforward: ControlSignal

    @property
    def k(self) -> np.ndarray:
        return self.signal.evaluator.k


def feedback_gain(prob: ControlProblem, cost: QuadraticCost,
                  riccati: RiccatiSolution) -> np.ndarray:
    """Return K = R^-1 (M^T + B^T S).
    """
    return cost.r_inv @ (cost.m.T + prob.b.T @ riccati.s)


@timed("quadratic cost control", precision=2)
def lq_optimal_input(prob: ControlProblem, cost: QuadraticCost, tilde: TildeSystem,
                     riccati: RiccatiSolution, points=REPORT_GRID_POINTS) -> LqControl:
    """Return u_c = u_c1 + u_c2 together with the trajectory it produces.

    u_c1(t) = -R^-1 (M^T + B^T S) x(t) needs the realized state, so the input comes out of a
    closed-loop integration of x' = Ax + B u_c. The feedforward part
    u_c2(t) = R^-1 B^T e^(A~^T (tf - t)) C^T (C W~ C^T)^-1 beta~ is open loop.

    Raises:
        NotOutputControllableError: if W~_p is (numerically) singular
        IntegrationError: if the integrator fails
    """
    return _lq_input(prob, cost, tilde, riccati, points)


def _lq_input(prob: ControlProblem, cost: QuadraticCost, tilde: TildeSystem,
              riccati: RiccatiSolution, points=REPORT_GRID_POINTS) -> LqControl:
    gram = tilde.w_tilde
    require_output_controllable(gram)
    spectrum = gram.eig
    coefficients = spectrum.vectors.T @ promote(tilde.beta_tilde, gram.prec.ctx)
    z = demote(spectrum.vectors @ (coefficients / spectrum.values))
    w = np.zeros(prob.n)
    w[list(prob.targets.nodes)] = z
    feedforward = _Feedforward(tilde.decomp, prob.b @ cost.r_inv, w, prob.tf)
    k = feedback_gain(prob, cost, riccati)
    a, b = prob.net.adjacency, prob.b

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return a @ x + b @ (feedforward(t) - k @ x)

    sol = solve_ivp(rhs, (prob.t0, prob.tf), prob.x0, method="RK45", rtol=ODE_TOLERANCE,
                    atol=ODE_TOLERANCE, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"Closed-loop integration failed: {sol.message}")
    evaluator = _ClosedLoopInput(sol.sol, k, feedforward)
    times = np.linspace(prob.t0, prob.tf, points)
    states = sol.sol(times).T
    trajectory = Trajectory(times, states, states[:, list(prob.targets.nodes)])
    return LqControl(
        signal=ControlSignal(times, np.atleast_2d(evaluator(times)), evaluator),
        trajectory=trajectory,
        feedback=ControlSignal(times, np.atleast_2d(evaluator.feedback(times)),
                               evaluator.feedback),
        feedforward=ControlSignal(times, np.atleast_2d(feedforward(times)), feedforward))


@dataclass(frozen=True)
class LqEnergy:
    """Quadrature energy of u_c split into the part the feedback adds and the pure feedforward
    part. ``quadratic_form`` is beta~^T W~_p^-1 beta~ (set only when R = I).
    """
    total: float
    feedback_terms: float
    feedforward: float
    quadratic_form: float | None = None


def lq_energy(prob: ControlProblem, cost: QuadraticCost, tilde: TildeSystem,
              riccati: RiccatiSolution, rule: QuadratureRule | None = None,
              control: LqControl | None = None) -> LqEnergy:
    """Integrate u_c^T u_c over the horizon and split it into its two parts.
    """
    rule = rule or legendre_gauss(t0=prob.t0, tf=prob.tf)
    control = control or lq_optimal_input(prob, cost, tilde, riccati)
    total = energy_quadrature(control.signal, rule)
    feedforward = energy_quadrature(control.feedforward, rule)
    quadratic_form = None
    if cost.is_identity_weighted:
        quadratic_form = float(energy_closed_form(Maneuver(tilde.beta_tilde), tilde.w_tilde))
        mismatch = abs(feedforward - quadratic_form)
        if mismatch > 1e-6 * max(1.0, abs(quadratic_form)):
            _log.warning(f"Feedforward energy {feedforward!r} departs from the quadratic form "
                         f"{quadratic_form!r}")
    return LqEnergy(total, total - feedforward, feedforward, quadratic_form)


@dataclass(frozen=True)
class ZetaRow:
    zeta: float
    fraction: float
    mean_log10_E: float
    std_log10_E: float
    eta: float


@dataclass(frozen=True)
class ZetaSweep:
    zetas: tuple[float, ...]
    results: tuple[tuple[ScalingResult, ...], ...]  # per zeta, per realization

    def eta(self, idx: int) -> float:
        return float(np.mean([r.eta for r in self.results[idx]]))

    def mean_log10_E(self, idx: int) -> float:
        """Grand mean of log10 E_c over fractions and realizations.
        """
        return float(np.mean([np.mean(r.mean_logE) for r in self.results[idx]]))

    @property
    def rows(self) -> list[ZetaRow]:
        rows = []
        for idx, zeta in enumerate(self.zetas):
            first = self.results[idx][0]
            for j, fraction in enumerate(first.fractions):
                means = [r.mean_logE[j] for r in self.results[idx]]
                stds = [r.std_logE[j] for r in self.results[idx]]
                rows.append(ZetaRow(zeta, fraction, float(np.mean(means)), float(np.mean(stds)),
                                    self.eta(idx)))
        return rows


@dataclass(frozen=True, eq=False)
class _ZetaCase:
    """Closed-loop data shared by every target set drawn at one zeta.
    """
    net: Network
    inputs: InputSet
    cost: QuadraticCost
    riccati: RiccatiSolution
    decomp: EigDecomp
    gram: Gramian  # W~ with every node a target
    rule: QuadratureRule

    def problem(self, targets: TargetSet) -> tuple[ControlProblem, TildeSystem]:
        """Return the task of steering ``targets`` from rest to the unit worst-case direction of
        W~_p together with its closed-loop system.

        Raises:
            NotOutputControllableError: if W~_p is (numerically) singular
        """
        reduced = reduce(self.gram, targets)
        require_output_controllable(reduced)
        yf = demote(reduced.eig.v_min)
        t0, tf = self.gram.horizon
        prob = ControlProblem(self.net, self.inputs, targets, np.zeros(self.net.n), yf, t0, tf)
        return prob, TildeSystem(self.riccati.closed_loop, self.decomp, reduced, yf)

    def log_energy(self, targets: TargetSet) -> float | None:
        try:
            prob, tilde = self.problem(targets)
        except NotOutputControllableError as e:
            _log.warning(f"Target set of size {targets.p} failed: {e}")
            return None
        control = _lq_input(prob, self.cost, tilde, self.riccati)
        energy = lq_energy(prob, self.cost, tilde, self.riccati, self.rule, control)
        return math.log10(energy.total)


def zeta_case(net: Network, inputs: InputSet, zeta: float,
              horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
              prec: PrecisionConfig | None = None) -> _ZetaCase:
    """Solve the Riccati equation for Q = zeta * I (M = 0, R = I) and build the closed-loop
    Gramian every sampled target set reduces.

    Raises:
        RiccatiError: if the Riccati equation can't be solved
        NotOutputControllableError: if the closed loop fails the test with every node a target
    """
    b = build_input_matrix(inputs, net.n)
    cost = QuadraticCost.from_zeta(zeta, net.n, inputs.m)
    riccati = solve_cost(net, b, cost)
    decomp = eig_decompose(riccati.closed_loop)
    gram = full_gramian(net, inputs, horizon, prec, decomp=decomp, b=riccati.b_bar)
    require_output_controllable(gram)
    t0, tf = horizon
    return _ZetaCase(net, inputs, cost, riccati, decomp, gram, legendre_gauss(t0=t0, tf=tf))


@timed("zeta sweep", precision=1)
def zeta_sweep(nets: Sequence[tuple[Network, InputSet]], zetas: Sequence[float] = DEFAULT_ZETAS,
               fractions: Sequence[float] = DEFAULT_FRACTIONS, samples=DEFAULT_SAMPLES,
               horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
               prec: PrecisionConfig | None = None, seed: int | None = None,
               workers=1) -> ZetaSweep:
    """Measure the energy scaling law under state weights Q = zeta * I (M = 0, R = I).

    Each sampled target set is steered from x0 = 0 to the unit worst-case direction of W~_p and
    the energy recorded is the quadrature of u_c^T u_c over the whole optimal input
    u_c = -K x + u_c2. Target sets are shared across zetas and with the minimum-energy sampling,
    so zeta = 0 reproduces it up to quadrature error.
    """
    results = []
    for zeta in zetas:
        per_net = []
        for idx, (net, inputs) in enumerate(nets):
            case = zeta_case(net, inputs, zeta, horizon, prec)
            sub_seed = seed if len(nets) == 1 else realization_seed(seed, idx)
            table = sample_target_energies(case.log_energy, net.n, fractions, samples, sub_seed,
                                           workers)
            per_net.append(fit_eta(table, sub_seed))
        results.append(tuple(per_net))
        _log.info(f"zeta = {zeta}: eta = {np.mean([r.eta for r in per_net]):.4f}")
    return ZetaSweep(tuple(float(z) for z in zetas), tuple(results))


def export_zeta_csv(sweep: ZetaSweep, path: PathLike) -> None:
    rows = [[format_number(r.zeta), format_number(r.fraction), format_number(r.mean_log10_E),
             format_number(r.std_log10_E), format_number(r.eta)] for r in sweep.rows]
    write_csv(path, ["zeta", "fraction", "mean_log10_E", "std_log10_E", "eta"], rows)


def export_zeta_eta_csv(sweep: ZetaSweep, path: PathLike) -> None:
    rows = [[format_number(z), format_number(sweep.eta(i)), format_number(sweep.mean_log10_E(i))]
            for i, z in enumerate(sweep.zetas)]
    write_csv(path, ["zeta", "eta", "mean_log10_E"], rows)
