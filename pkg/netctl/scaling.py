"""

    netctl.scaling.py
    ~~~~~~~~~~~~~~~~~
    Energy scaling law: target set sampling of worst-case energies, eta fits, exact eta chains,
    network ensembles and degree preserving randomization significance.

    @author: z33k

"""
import itertools
import logging
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

import backoff
import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from netctl.constants import CHAIN_START_FRACTION, DEFAULT_FRACTIONS, DEFAULT_SAMPLES, \
    DEFAULT_T0, DEFAULT_TF, MIN_REPLICAS, PathLike, REPLICA_RETRIES
from netctl.ctrlcfg import DriverSelectionError, build_input_matrix, sample_target_set, \
    select_drivers
from netctl.data import EnergySamples, EnsembleResult, DprReport, InputSet, Network, \
    ScalingResult, TargetSet
from netctl.gramian import EigDecomp, Gramian, NotOutputControllableError, PrecisionConfig, \
    compute_gramian, eig_decompose, eta_step, reduce, require_output_controllable, \
    worst_case_energy
from netctl.netgen import degree_preserving_randomize
from netctl.utils import derive_rng, timed, write_csv
from netctl.utils.precision import format_number

_log = logging.getLogger(__name__)


TargetEnergy = Callable[[TargetSet], float | None]  # log10 energy of a target set


def target_count(fraction: float, n: int) -> int:
    """Return p for a target fraction p/n (at least one node).
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"Target fraction must be in (0, 1], got: {fraction}")
    return max(1, int(round(fraction * n)))


def realization_seed(seed: int | None, idx: int) -> int:
    """Return the master seed of the ``idx``-th network realization.
    """
    return int(derive_rng(seed, idx).integers(2 ** 63))


def full_gramian(net: Network, inputs: InputSet,
                 horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
                 prec: PrecisionConfig | None = None, decomp: EigDecomp | None = None,
                 b: np.ndarray | None = None) -> Gramian:
    """Return the Gramian with every node a target (C = I), the parent of all reductions.

    ``b`` overrides the versor input matrix of ``inputs`` (e.g. with a weighted one).
    """
    t0, tf = horizon
    b = build_input_matrix(inputs, net.n) if b is None else b
    gram = compute_gramian(decomp or eig_decompose(net), b, np.eye(net.n), t0, tf, prec)
    return gram


def _log_energy(gram: Gramian, targets: TargetSet) -> float | None:
    try:
        return worst_case_energy(reduce(gram, targets)).log10_energy
    except NotOutputControllableError as e:
        _log.warning(f"Target set of size {targets.p} failed: {e}")
        return None


def _sample_task(energy: TargetEnergy, n: int, fraction_idx: int, fraction: float, samples: int,
                 seed: int | None) -> list[float | None]:
    p = target_count(fraction, n)
    if p == n:  # a single target set exists
        return [energy(TargetSet(tuple(range(n))))] * samples
    return [energy(sample_target_set(n, p, derive_rng(seed, fraction_idx, idx)))
            for idx in range(samples)]


@timed("energy sampling", precision=1)
def sample_target_energies(energy: TargetEnergy, n: int,
                           fractions: Sequence[float] = DEFAULT_FRACTIONS, samples=DEFAULT_SAMPLES,
                           seed: int | None = None, workers=1) -> EnergySamples:
    """Draw ``samples`` target sets per fraction of an ``n``-node network and record
    ``energy`` of each (log10, None on failure).

    Target set ``k`` of fraction ``i`` always comes from the stream derived from
    (seed, i, k), so the table doesn't depend on ``workers`` nor on the energy measured.
    """
    if samples < 1:
        raise ValueError(f"At least one sample per fraction is needed, got: {samples}")
    fractions = tuple(sorted(float(f) for f in fractions))
    for f in fractions:
        target_count(f, n)
    rows = Parallel(n_jobs=workers)(
        delayed(_sample_task)(energy, n, i, f, samples, seed) for i, f in enumerate(fractions))
    table = EnergySamples(n, fractions, tuple(tuple(row) for row in rows))
    if table.failures:
        _log.warning(f"{table.failures} sampled target set(s) were not output controllable")
    return table


def sample_reduced_energies(gram_full: Gramian, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                            samples=DEFAULT_SAMPLES, seed: int | None = None,
                            workers=1) -> EnergySamples:
    """Record log10 E_max of reductions of ``gram_full`` to sampled target sets.
    """
    return sample_target_energies(partial(_log_energy, gram_full), gram_full.p, fractions,
                                  samples, seed, workers)


def sample_energies(net: Network, inputs: InputSet, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                    samples=DEFAULT_SAMPLES,
                    horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
                    prec: PrecisionConfig | None = None, seed: int | None = None,
                    workers=1) -> EnergySamples:
    """Sample worst-case energies of random target sets of ``net`` driven from ``inputs``.

    The full Gramian is computed once and reduced per sample.

    Raises:
        NotOutputControllableError: if the network fails the test with every node a target
    """
    gram = full_gramian(net, inputs, horizon, prec)
    require_output_controllable(gram)
    return sample_reduced_energies(gram, fractions, samples, seed, workers)


def fit_eta(table: EnergySamples, seed: int | None = None) -> ScalingResult:
    """Fit mean log E_max against p/n by ordinary least squares.

    The log10 slope is converted to natural log so that E_max ~ exp(eta * p/n + c).

    Raises:
        ValueError: on less than 3 distinct fractions with valid samples
    """
    fractions, means, stds, counts = [], [], [], []
    for idx, fraction in enumerate(table.fractions):
        values = table.valid(idx)
        if not len(values):
            _log.warning(f"No valid sample at fraction {fraction}, skipping it")
            continue
        fractions.append(fraction)
        means.append(float(np.mean(values)))
        stds.append(float(np.std(values, ddof=1)) if len(values) > 1 else 0.0)
        counts.append(len(values))
    if len(set(fractions)) < 3:
        raise ValueError(f"Degenerate abscissa: at least 3 distinct fractions needed, got: "
                         f"{sorted(set(fractions))}")
    x, y = np.array(fractions), np.array(means)
    if np.ptp(y) == 0:
        slope, intercept, r_squared = 0.0, float(y[0]), 1.0
    else:
        fit = stats.linregress(x, y)
        slope, intercept, r_squared = float(fit.slope), float(fit.intercept), fit.rvalue ** 2
    ln10 = math.log(10)
    result = ScalingResult(
        fractions=tuple(fractions), mean_logE=tuple(means), std_logE=tuple(stds),
        eta=slope * ln10, intercept=intercept * ln10, r_squared=float(r_squared),
        samples_per_point=min(counts), seed=seed, failures=table.failures)
    _log.info(f"Fitted eta = {result.eta:.4f} (R^2 = {result.r_squared:.4f})")
    return result


@dataclass(frozen=True)
class ChainEtas:
    """Per-step energy ratios along a nested chain P_k ⊂ ... ⊂ P_j.
    """
    sizes: tuple[int, ...]
    steps: tuple  # extended precision eta_p for p = k+1..j
    log_total: object  # sum of ln eta_p
    log_energy_gain: object  # ln E_max(P_j) - ln E_max(P_k)
    telescoping_error: object

    @property
    def geometric_mean(self) -> float:
        return math.exp(float(self.log_total) / len(self.steps)) if self.steps else 1.0


def chain_etas(gram_full: Gramian, chain: Sequence[TargetSet]) -> ChainEtas:
    """Compute eta_p = E_max(P_p) / E_max(P_(p-1)) along a nested chain of target sets.

    The sum of ln eta_p is checked against ln E_max(P_j) - ln E_max(P_k).
    """
    chain = sorted(chain, key=len)
    if len(chain) < 2:
        raise ValueError("A chain needs at least two target sets")
    for small, big in zip(chain, chain[1:]):
        if not small.issubset(big) or len(small) >= len(big):
            raise ValueError(f"Not a nested chain: {small.nodes} vs {big.nodes}")
    ctx = gram_full.prec.ctx
    grams = [reduce(gram_full, targets) for targets in chain]
    steps = tuple(eta_step(parent, child) for child, parent in zip(grams, grams[1:]))
    log_total = sum((ctx.ln(step) for step in steps), ctx.zero)
    gain = ctx.ln(grams[0].mu_min) - ctx.ln(grams[-1].mu_min)
    error = abs(log_total - gain)
    if error > gram_full.prec.interlacing_tolerance * max(ctx.one, abs(gain)):
        _log.warning(f"Telescoping mismatch of {ctx.nstr(error, 5)} along the chain")
    return ChainEtas(tuple(len(t) for t in chain), steps, log_total, gain, error)


def eta_exact_chain(net: Network, inputs: InputSet, chain: Sequence[TargetSet],
                    prec: PrecisionConfig | None = None,
                    horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF)) -> ChainEtas:
    gram = full_gramian(net, inputs, horizon, prec)
    return chain_etas(gram, chain)


@dataclass(frozen=True)
class EtaDefinition:
    eta_mean: float
    eta_std: float
    start: int
    chains: int


def eta_definition(gram_full: Gramian, chains=DEFAULT_SAMPLES, seed: int | None = None,
                   start_fraction=CHAIN_START_FRACTION) -> EtaDefinition:
    """Estimate eta = n * <ln eta_bar(k -> n)> with k = start_fraction * n.

    Only a chain's endpoints matter for its geometric mean, so each chain reduces to a random
    k-subset.
    """
    n = gram_full.p
    k = target_count(start_fraction, n)
    if k >= n:
        raise ValueError(f"Start size {k} leaves no step towards {n}")
    ctx = gram_full.prec.ctx
    top = ctx.ln(worst_case_energy(gram_full).energy)
    values = []
    for idx in range(chains):
        bottom = worst_case_energy(reduce(gram_full, sample_target_set(n, k, derive_rng(
            seed, idx))))
        values.append(float(n * (top - ctx.ln(bottom.energy)) / (n - k)))
    return EtaDefinition(float(np.mean(values)), float(np.std(values)), k, chains)


def energy_savings(result: ScalingResult) -> tuple[float, ...]:
    """Return E_max(n) / E_max(p) per fraction, the gain of controlling only a part of the
    network (from mean log10 energies, the full-target point being the last fraction).
    """
    if result.fractions[-1] != 1.0:
        raise ValueError("Energy savings need the full target set (fraction 1.0)")
    top = result.mean_logE[-1]
    return tuple(10 ** (top - value) for value in result.mean_logE)


@timed("ensemble scaling", precision=1)
def ensemble_scaling(nets: Sequence[tuple[Network, InputSet]],
                     fractions: Sequence[float] = DEFAULT_FRACTIONS, samples=DEFAULT_SAMPLES,
                     horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
                     prec: PrecisionConfig | None = None, seed: int | None = None,
                     error_mode="targets", workers=1) -> EnsembleResult:
    """Fit eta on every network realization and pool the results.

    ``error_mode`` "targets" reports the mean of per-realization standard deviations (target set
    choice only), "realizations" the standard deviation of per-realization means.
    """
    if error_mode not in ("targets", "realizations"):
        raise ValueError(f"Unknown error mode: {error_mode!r}")
    if not nets:
        raise ValueError("No realizations")
    results = []
    for idx, (net, inputs) in enumerate(nets):
        sub_seed = seed if len(nets) == 1 else realization_seed(seed, idx)
        table = sample_energies(net, inputs, fractions, samples, horizon, prec, sub_seed, workers)
        results.append(fit_eta(table, sub_seed))
    common = sorted(set.intersection(*(set(r.fractions) for r in results)))
    means = np.array([[r.mean_logE[r.fractions.index(f)] for f in common] for r in results])
    stds = np.array([[r.std_logE[r.fractions.index(f)] for f in common] for r in results])
    spread = means.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(len(common))
    etas = [r.eta for r in results]
    return EnsembleResult(
        results=tuple(results), eta_mean=float(np.mean(etas)),
        eta_std=float(np.std(etas, ddof=1)) if len(etas) > 1 else 0.0,
        fractions=tuple(common), mean_logE=tuple(means.mean(axis=0).tolist()),
        std_logE=tuple((stds.mean(axis=0) if error_mode == "targets" else spread).tolist()),
        error_mode=error_mode)


def _replica_eta(net: Network, m: int, replica_idx: int, fractions: Sequence[float],
                 samples: int, iterations: int | None, horizon: tuple[float, float],
                 prec: PrecisionConfig | None, seed: int | None,
                 workers: int) -> tuple[float, bool]:
    attempt = itertools.count()

    @backoff.on_exception(backoff.constant, (NotOutputControllableError, DriverSelectionError),
                          max_tries=REPLICA_RETRIES, interval=0)
    def run() -> tuple[float, bool]:
        idx = next(attempt)
        rng = derive_rng(seed, replica_idx, idx)
        replica = degree_preserving_randomize(net, iterations, rng)
        audit = replica.degrees == net.degrees
        inputs = select_drivers(replica, m, rng)
        sub_seed = int(rng.integers(2 ** 63))
        table = sample_energies(replica, inputs, fractions, samples, horizon, prec, sub_seed,
                                workers)
        return fit_eta(table, sub_seed).eta, audit

    return run()


@timed("degree preserving randomization significance", precision=1)
def dpr_significance(net: Network, inputs: InputSet, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                     samples=DEFAULT_SAMPLES, replicas=MIN_REPLICAS, iterations: int | None = None,
                     prec: PrecisionConfig | None = None, seed: int | None = None,
                     horizon: tuple[float, float] = (DEFAULT_T0, DEFAULT_TF),
                     workers=1) -> DprReport:
    """Compare eta of ``net`` against rewired replicas with freshly selected drivers of the same
    count.

    The p-value is the add-one empirical one-sided estimate
    (1 + #{eta_replica >= eta_real}) / (replicas + 1). A replica failing controllability (or
    driver selection) is regenerated up to a retry cap.
    """
    if replicas < MIN_REPLICAS:
        raise ValueError(f"At least {MIN_REPLICAS} replicas are needed, got: {replicas}")
    real_seed = int(derive_rng(seed, replicas).integers(2 ** 63))
    eta_real = fit_eta(sample_energies(
        net, inputs, fractions, samples, horizon, prec, real_seed, workers)).eta
    etas, audits = [], []
    for idx in range(replicas):
        eta, audit = _replica_eta(net, inputs.m, idx, fractions, samples, iterations, horizon,
                                  prec, seed, workers)
        etas.append(eta)
        audits.append(audit)
    exceeding = sum(1 for eta in etas if eta >= eta_real)
    report = DprReport(
        eta_real=eta_real, eta_ensemble=tuple(etas), p_value=(1 + exceeding) / (replicas + 1),
        replicas=replicas, iterations=-1 if iterations is None else iterations,
        degree_audit_passed=all(audits))
    if not report.degree_audit_passed:
        _log.error("Degree sequence audit failed for at least one replica")
    _log.info(f"eta_real = {eta_real:.4f}, p-value = {report.p_value:.4f}")
    return report


def export_scaling_csv(result: ScalingResult | EnsembleResult, path: PathLike) -> Path:
    rows = [[format_number(f), format_number(mean), format_number(std)]
            for f, mean, std in zip(result.fractions, result.mean_logE, result.std_logE)]
    return write_csv(path, ["fraction", "mean_log10_E", "std_log10_E"], rows)


def export_samples_csv(table: EnergySamples, path: PathLike) -> Path:
    rows = [[format_number(f), str(idx), "" if value is None else format_number(value)]
            for f, row in zip(table.fractions, table.samples) for idx, value in enumerate(row)]
    return write_csv(path, ["fraction", "sample", "log10_E"], rows)


def export_dpr_csv(report: DprReport, path: PathLike) -> Path:
    rows = [[str(idx), format_number(eta)] for idx, eta in enumerate(report.eta_ensemble)]
    return write_csv(path, ["replica", "eta"], rows)
