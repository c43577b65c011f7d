"""

    netctl.minenergy.py
    ~~~~~~~~~~~~~~~~~~~
    Minimum-energy target control: maneuver, optimal input, closed-form and quadrature energies,
    simulation of the controlled network and energy bounds.

    @author: z33k

"""
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from netctl.constants import DEFAULT_T0, DEFAULT_TF, ODE_TOLERANCE, PathLike, \
    QUADRATURE_NODES, REPORT_GRID_POINTS
from netctl.ctrlcfg import build_input_matrix, build_output_matrix
from netctl.data import InputSet, Network, TargetSet
from netctl.gramian import EigDecomp, Gramian, require_output_controllable
from netctl.utils import timed, write_csv
from netctl.utils.precision import demote, format_number, promote

_log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """Raised when the ODE integrator gives up.
    """


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Boundary data of a target control task: steer y = Cx from x(t0) = x0 to y(tf) = yf.
    """
    net: Network
    inputs: InputSet
    targets: TargetSet
    x0: np.ndarray
    yf: np.ndarray
    t0: float = DEFAULT_T0
    tf: float = DEFAULT_TF

    def __post_init__(self) -> None:
        if self.tf <= self.t0:
            raise ValueError(f"Final time must exceed initial time: ({self.t0}, {self.tf})")
        self.inputs.validate(self.n)
        self.targets.validate(self.n)
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(-1))
        object.__setattr__(self, "yf", np.asarray(self.yf, dtype=float).reshape(-1))
        if self.x0.shape != (self.n,):
            raise ValueError(f"Initial state must have {self.n} entries, got: {self.x0.shape}")
        if self.yf.shape != (self.p,):
            raise ValueError(f"Desired output must have {self.p} entries, got: {self.yf.shape}")

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def m(self) -> int:
        return self.inputs.m

    @property
    def p(self) -> int:
        return self.targets.p

    @property
    def horizon(self) -> float:
        return self.tf - self.t0

    @cached_property
    def b(self) -> np.ndarray:
        return build_input_matrix(self.inputs, self.n)

    @cached_property
    def c(self) -> np.ndarray:
        return build_output_matrix(self.targets, self.n)


@dataclass(frozen=True)
class Maneuver:
    beta: np.ndarray

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.beta))


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Input sampled on ``times`` (rows of ``samples``, one column per driver) with an evaluator
    for any time in the horizon.
    """
    times: np.ndarray
    samples: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray]

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        return self.evaluator(t)

    @property
    def norm_squared(self) -> np.ndarray:
        return np.sum(self.samples ** 2, axis=1)

    @classmethod
    def from_evaluator(cls, evaluator: Callable[[np.ndarray], np.ndarray], t0: float, tf: float,
                       points=REPORT_GRID_POINTS) -> "ControlSignal":
        times = np.linspace(t0, tf, points)
        return cls(times, np.atleast_2d(evaluator(times)), evaluator)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray

    @property
    def final_output(self) -> np.ndarray:
        return self.outputs[-1]


@dataclass(frozen=True)
class QuadratureRule:
    """Legendre-Gauss nodes mapped to [t0, tf] and their reference-interval weights.
    """
    points: np.ndarray
    weights: np.ndarray
    t0: float
    tf: float

    @property
    def nodes(self) -> int:
        return len(self.points)


def legendre_gauss(nodes=QUADRATURE_NODES, t0=DEFAULT_T0, tf=DEFAULT_TF) -> QuadratureRule:
    if nodes < 1:
        raise ValueError(f"Quadrature needs at least one node, got: {nodes}")
    x, w = np.polynomial.legendre.leggauss(nodes)
    return QuadratureRule((tf - t0) / 2 * x + (tf + t0) / 2, w, t0, tf)


@dataclass(frozen=True)
class _SpectralInput:
    """Evaluates u(t) = B^T e^(A^T (tf - t)) w for a fixed n-vector w.
    """
    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    inputs: tuple[int, ...]
    w: np.ndarray
    tf: float

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        s = self.tf - np.atleast_1d(np.asarray(t, dtype=float))
        coefficients = self.vectors.T @ self.w
        rows = ((np.exp(np.outer(s, self.eigenvalues)) * coefficients) @ self.inverse).real
        u = rows[:, list(self.inputs)]
        return u[0] if np.ndim(t) == 0 else u


def maneuver(prob: ControlProblem, decomp: EigDecomp) -> Maneuver:
    """Return beta = yf - C e^(A (tf - t0)) x0, the output displacement left to the control.
    """
    free = decomp.exp_action(prob.x0, prob.horizon)
    return Maneuver(prob.yf - free[list(prob.targets.nodes)])


def _spectral_coefficients(gram: Gramian, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (v_i^T beta, mu_i) pairs of the Gramian spectrum in extended precision.
    """
    if len(beta) != gram.p:
        raise ValueError(f"Maneuver has {len(beta)} entries, Gramian is {gram.p}x{gram.p}")
    spectrum = gram.eig
    return spectrum.vectors.T @ promote(np.asarray(beta, dtype=float), gram.prec.ctx), \
        spectrum.values


def _check_targets(prob: ControlProblem, gram: Gramian) -> None:
    if gram.targets is not None and gram.targets != prob.targets:
        raise ValueError(f"Gramian targets {gram.targets.nodes} do not match the problem's "
                         f"{prob.targets.nodes}")


def min_energy_input(prob: ControlProblem, gram: Gramian, decomp: EigDecomp) -> ControlSignal:
    """Synthesize u*(t) = B^T e^(A^T (tf - t)) C^T W_p^-1 beta.

    W_p^-1 beta is applied through the extended-precision spectrum of the Gramian.

    Raises:
        NotOutputControllableError: if mu_1 falls under the precision threshold
    """
    _check_targets(prob, gram)
    require_output_controllable(gram)
    man = maneuver(prob, decomp)
    coefficients, values = _spectral_coefficients(gram, man.beta)
    z = demote(gram.eig.vectors @ (coefficients / values))
    w = np.zeros(prob.n)
    w[list(prob.targets.nodes)] = z
    evaluator = _SpectralInput(decomp.eigenvalues, decomp.vectors, decomp.inverse,
                               prob.inputs.nodes, w, prob.tf)
    return ControlSignal.from_evaluator(evaluator, prob.t0, prob.tf)


def energy_closed_form(man: Maneuver, gram: Gramian) -> object:
    """Return beta^T W_p^-1 beta = sum_i (v_i^T beta)^2 / mu_i in extended precision.
    """
    require_output_controllable(gram)
    coefficients, values = _spectral_coefficients(gram, man.beta)
    return sum((c * c / mu for c, mu in zip(coefficients, values)), gram.prec.ctx.zero)


def energy_bounds(man: Maneuver, gram: Gramian) -> tuple[object, object]:
    """Return (beta^2 / mu_p, beta^2 / mu_1), the extreme energies of a maneuver of this size.
    """
    require_output_controllable(gram)
    ctx = gram.prec.ctx
    beta = promote(np.asarray(man.beta, dtype=float), ctx)
    squared = sum((b * b for b in beta), ctx.zero)
    values = gram.eig.values
    return squared / values[-1], squared / values[0]


def worst_case_maneuver(gram: Gramian) -> Maneuver:
    """Return the unit maneuver along v_1, the hardest output direction to reach.
    """
    require_output_controllable(gram)
    return Maneuver(demote(gram.eig.v_min))


@timed("simulation", precision=2)
def simulate(prob: ControlProblem, u: ControlSignal | None = None,
             points=REPORT_GRID_POINTS) -> Trajectory:
    """Integrate x' = Ax + Bu from x0 with an adaptive Runge-Kutta 5(4) scheme.

    A missing signal means free evolution. States are reported on a uniform grid.

    Raises:
        IntegrationError: if the integrator fails
    """
    a, b = prob.net.adjacency, prob.b

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        dx = a @ x
        if u is not None:
            dx = dx + b @ u(t)
        return dx

    sol = solve_ivp(rhs, (prob.t0, prob.tf), prob.x0, method="RK45", rtol=ODE_TOLERANCE,
                    atol=ODE_TOLERANCE, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"Integration failed: {sol.message}")
    times = np.linspace(prob.t0, prob.tf, points)
    states = sol.sol(times).T
    return Trajectory(times, states, states[:, list(prob.targets.nodes)])


def energy_quadrature(u: ControlSignal, rule: QuadratureRule) -> float:
    """Estimate the integral of u^T u over the horizon by Legendre-Gauss quadrature.
    """
    values = np.atleast_2d(u(rule.points))
    return float((rule.tf - rule.t0) / 2 * np.sum(rule.weights * np.sum(values ** 2, axis=1)))


def reach_error(prob: ControlProblem, traj: Trajectory) -> float:
    """Return |y(tf) - yf| / max(1, |yf|).
    """
    miss = np.linalg.norm(traj.final_output - prob.yf)
    return float(miss / max(1.0, float(np.linalg.norm(prob.yf))))


def export_trajectory_csv(traj: Trajectory, path: PathLike) -> Path:
    n = traj.states.shape[1]
    rows = [[format_number(t), *(format_number(x) for x in state)]
            for t, state in zip(traj.times, traj.states)]
    return write_csv(path, ["t", *(f"x{i + 1}" for i in range(n))], rows)


def export_signal_csv(u: ControlSignal, path: PathLike) -> Path:
    rows = [[format_number(t), *(format_number(x) for x in sample), format_number(sq)]
            for t, sample, sq in zip(u.times, u.samples, u.norm_squared)]
    return write_csv(path, ["t", *(f"u{j + 1}" for j in range(u.m)), "u_norm_sq"], rows)
