"""

    netctl.cli.py
    ~~~~~~~~~~~~~
    Command-line interface.

    @author: z33k

"""
import json
import logging
import traceback
from functools import wraps
from pathlib import Path
from typing import Any

import click
import numpy as np
import scipy.linalg

from netctl.config import ConfigError, ExperimentConfig, load_config
from netctl.constants import EXIT_CONFIG, EXIT_CONTROLLABILITY, EXIT_GENERATION, EXIT_SOLVER, \
    Function, Json, MIN_REPLICAS, WORKERS_ENV_VAR
from netctl.ctrlcfg import DriverSelectionError, build_input_matrix, build_output_matrix, \
    minimum_driver_count, output_controllability_check, reaches_all, select_drivers
from netctl.data import InputSet, Network
from netctl.gramian import NotOutputControllableError, SpectralError, compute_gramian, \
    eig_decompose, export_spectrum_csv, worst_case_energy
from netctl.lqcontrol import InvalidCostError, RiccatiError, export_zeta_csv, \
    export_zeta_eta_csv, lq_energy, lq_optimal_input, solve_cost, tilde_system, zeta_sweep
from netctl.minenergy import ControlProblem, IntegrationError, energy_bounds, \
    energy_closed_form, energy_quadrature, export_signal_csv, export_trajectory_csv, \
    legendre_gauss, maneuver, min_energy_input, reach_error, simulate, worst_case_maneuver
from netctl.netgen import GenerationError, save_network
from netctl.scaling import dpr_significance, energy_savings, ensemble_scaling, \
    export_dpr_csv, export_samples_csv, export_scaling_csv, fit_eta, sample_energies
from netctl.utils import ParsingError, derive_rng, timed
from netctl.utils.precision import format_number

_log = logging.getLogger(__name__)

# first match wins, so subclasses go before their bases
_EXIT_CODES: tuple[tuple[type[Exception], int], ...] = (
    (ConfigError, EXIT_CONFIG),
    (ParsingError, EXIT_CONFIG),
    (GenerationError, EXIT_GENERATION),
    (NotOutputControllableError, EXIT_CONTROLLABILITY),
    (DriverSelectionError, EXIT_CONTROLLABILITY),
    (SpectralError, EXIT_SOLVER),
    (RiccatiError, EXIT_SOLVER),
    (InvalidCostError, EXIT_SOLVER),
    (IntegrationError, EXIT_SOLVER),
)
_DRIVERS_STREAM = 2  # streams 0 and 1 build the network


def _exit_codes(func: Function) -> Function:
    """Translate known failures into exit codes, log and re-raise anything else.
    """
    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except tuple(cls for cls, _ in _EXIT_CODES) as e:
            code = next(code for cls, code in _EXIT_CODES if isinstance(e, cls))
            _log.error(f"{type(e).__qualname__}: {e}")
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(code)
        except Exception as e:
            _log.critical(f"{type(e).__qualname__}: {e}:\n{traceback.format_exc()}")
            raise
    return wrapper


def _common_options(func: Function) -> Function:
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(), required=True,
                     help="experiment configuration JSON"),
        click.option("--seed", "-s", type=int, help="master seed (overrides config)"),
        click.option("--workers", "-w", type=int, envvar=WORKERS_ENV_VAR,
                     help="parallel workers (default: all cores)"),
        click.option("--out", "-o", type=click.Path(), help="output directory"),
        click.option("--digits", "-d", type=int, help="extended precision digits"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(config_path: str, seed: int | None, workers: int | None, out: str | None,
          digits: int | None) -> ExperimentConfig:
    cfg = load_config(config_path)
    try:
        return cfg.override(seed=seed, workers=workers, output_dir=out, digits=digits)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _workers(cfg: ExperimentConfig) -> int:
    return cfg.workers if cfg.workers is not None else -1


def _outdir(cfg: ExperimentConfig) -> Path:
    path = cfg.output_path
    if path.is_file():
        raise ConfigError(f"Output path is a file: '{path.resolve()}'")
    if not path.exists():
        _log.info(f"Creating output directory at: '{path.resolve()}'")
        path.mkdir(parents=True)
    return path


def _dump(data: Json, path: Path) -> None:
    with path.open("w", encoding="utf8") as f:
        json.dump(data, f, indent=4, ensure_ascii=False)
    _log.info(f"Successfully dumped '{path}'")


def _setup(cfg: ExperimentConfig, realization=0) -> tuple[Network, InputSet]:
    net = cfg.load_network(realization)
    keys = (_DRIVERS_STREAM,) if realization == 0 else (_DRIVERS_STREAM, realization)
    rng = derive_rng(cfg.seed, *keys)
    inputs = select_drivers(net, cfg.driver_count(net.n), rng)
    return net, inputs


def _problem(cfg: ExperimentConfig, net: Network, inputs: InputSet) -> tuple:
    """Return the configured control problem with its decomposition and Gramian.

    A missing (or "worst_case") desired output means the unit worst-case direction on top of
    the free response.
    """
    targets = cfg.target_set(net.n)
    x0 = cfg.initial_state(net.n)
    decomp = eig_decompose(net)
    gram = compute_gramian(decomp, build_input_matrix(inputs, net.n),
                           build_output_matrix(targets, net.n), cfg.t0, cfg.tf, cfg.prec)
    worst_case_energy(gram)  # fails fast on uncontrollable triplets
    free = decomp.exp_action(x0, cfg.tf - cfg.t0)[list(targets.nodes)]
    if cfg.yf is None or cfg.yf == "worst_case":
        yf = free + worst_case_maneuver(gram).beta
    else:
        yf = np.array(cfg.yf, dtype=float)
        if yf.shape != (targets.p,):
            raise ConfigError(f"Desired output needs {targets.p} entries, got: {yf.shape}")
    prob = ControlProblem(net, inputs, targets, x0, yf, cfg.t0, cfg.tf)
    return prob, decomp, gram


@click.group()
def main() -> None:
    """Control energy of complex networks steered on target nodes.
    """


@main.command()
@_common_options
@_exit_codes
@timed("'gen' command", precision=1)
def gen(config_path, seed, workers, out, digits) -> None:
    """Generate (or ingest) a stabilized network and dump it with a summary.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    net = cfg.load_network()
    outdir = _outdir(cfg)
    save_network(net, outdir / "network.json")
    eigenvalues = scipy.linalg.eigvals(net.adjacency)
    summary = {
        "n": net.n,
        "edges": net.edge_count,
        "k_av": net.degrees.average,
        "max_real_eigenvalue": float(np.max(eigenvalues.real)),
        "min_real_eigenvalue": float(np.min(eigenvalues.real)),
        "minimum_driver_count": minimum_driver_count(net),
    }
    _dump(summary, outdir / "network_summary.json")


@main.command()
@_common_options
@_exit_codes
@timed("'energy' command", precision=1)
def energy(config_path, seed, workers, out, digits) -> None:
    """Synthesize the minimum-energy input, simulate it and report its energy.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    net, inputs = _setup(cfg)
    prob, decomp, gram = _problem(cfg, net, inputs)
    u = min_energy_input(prob, gram, decomp)
    traj = simulate(prob, u)
    man = maneuver(prob, decomp)
    closed_form = energy_closed_form(man, gram)
    lower, upper = energy_bounds(man, gram)
    outdir = _outdir(cfg)
    export_signal_csv(u, outdir / "signal.csv")
    export_trajectory_csv(traj, outdir / "trajectory.csv")
    export_spectrum_csv(gram, outdir / "spectrum.csv")
    report = {
        "n": net.n,
        "inputs": list(inputs.nodes),
        "targets": list(prob.targets.nodes),
        "beta_norm": man.magnitude,
        "E_closed_form": format_number(closed_form, cfg.digits),
        "E_quadrature": energy_quadrature(u, legendre_gauss(cfg.quadrature_nodes, cfg.t0,
                                                            cfg.tf)),
        "E_max": format_number(worst_case_energy(gram).energy, cfg.digits),
        "E_bounds": [format_number(lower, cfg.digits), format_number(upper, cfg.digits)],
        "reach_error": reach_error(prob, traj),
    }
    _dump(report, outdir / "energy_report.json")


def _require_fractions(cfg: ExperimentConfig) -> None:
    if len(set(cfg.fractions)) < 3:
        raise ConfigError(f"At least 3 distinct fractions are needed to fit eta, got: "
                          f"{sorted(set(cfg.fractions))}")


@main.command()
@_common_options
@_exit_codes
@timed("'eta' command", precision=1)
def eta(config_path, seed, workers, out, digits) -> None:
    """Sample worst-case energies over target fractions and fit the scaling rate eta.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    _require_fractions(cfg)
    outdir = _outdir(cfg)
    if cfg.realizations == 1:
        net, inputs = _setup(cfg)
        table = sample_energies(net, inputs, cfg.fractions, cfg.samples, cfg.horizon, cfg.prec,
                                cfg.seed, _workers(cfg))
        result = fit_eta(table, cfg.seed)
        export_samples_csv(table, outdir / "energy_samples.csv")
        data = result.json
        if result.fractions[-1] == 1.0:
            data["savings"] = list(energy_savings(result))
    else:
        nets = [_setup(cfg, idx) for idx in range(cfg.realizations)]
        result = ensemble_scaling(nets, cfg.fractions, cfg.samples, cfg.horizon, cfg.prec,
                                  cfg.seed, cfg.error_mode, _workers(cfg))
        data = result.json
    export_scaling_csv(result, outdir / "scaling.csv")
    _dump(data, outdir / "scaling_result.json")


@main.command()
@_common_options
@_exit_codes
@timed("'dpr' command", precision=1)
def dpr(config_path, seed, workers, out, digits) -> None:
    """Test eta against degree preserving randomizations of the network.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    _require_fractions(cfg)
    if cfg.replicas < MIN_REPLICAS:
        raise ConfigError(f"At least {MIN_REPLICAS} replicas are needed, got: {cfg.replicas}")
    net, inputs = _setup(cfg)
    report = dpr_significance(net, inputs, cfg.fractions, cfg.samples, cfg.replicas,
                              cfg.iterations, cfg.prec, cfg.seed, cfg.horizon, _workers(cfg))
    outdir = _outdir(cfg)
    export_dpr_csv(report, outdir / "dpr_etas.csv")
    _dump(report.json, outdir / "dpr_report.json")


@main.command()
@_common_options
@_exit_codes
@timed("'lq' command", precision=1)
def lq(config_path, seed, workers, out, digits) -> None:
    """Sweep the state weight Q = zeta * I and fit eta per zeta.

    With a cost section, the configured problem is also solved and its energy split reported.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    _require_fractions(cfg)
    nets = [_setup(cfg, idx) for idx in range(cfg.realizations)]
    sweep = zeta_sweep(nets, cfg.zetas, cfg.fractions, cfg.samples, cfg.horizon, cfg.prec,
                       cfg.seed, _workers(cfg))
    outdir = _outdir(cfg)
    export_zeta_csv(sweep, outdir / "zeta_sweep.csv")
    export_zeta_eta_csv(sweep, outdir / "zeta_eta.csv")

    if cfg.cost is not None:
        net, inputs = nets[0]
        prob, _, _ = _problem(cfg, net, inputs)
        cost = cfg.quadratic_cost(net.n, inputs)
        riccati = solve_cost(net, prob.b, cost)
        tilde = tilde_system(prob, cost, riccati, cfg.prec)
        control = lq_optimal_input(prob, cost, tilde, riccati)
        split = lq_energy(prob, cost, tilde, riccati,
                          legendre_gauss(cfg.quadrature_nodes, cfg.t0, cfg.tf), control)
        export_signal_csv(control.signal, outdir / "lq_signal.csv")
        export_trajectory_csv(control.trajectory, outdir / "lq_trajectory.csv")
        report = {
            "riccati_residual": riccati.residual,
            "E_total": split.total,
            "E_feedback_terms": split.feedback_terms,
            "E_feedforward": split.feedforward,
            "quadratic_form": split.quadratic_form,
            "reach_error": reach_error(prob, control.trajectory),
        }
        _dump({k: v for k, v in report.items() if v is not None}, outdir / "lq_report.json")


@main.command("simulate")
@_common_options
@click.option("--controlled/--free", default=False, show_default=True,
              help="apply the minimum-energy input or let the network evolve freely")
@_exit_codes
@timed("'simulate' command", precision=1)
def simulate_cmd(config_path, seed, workers, out, digits, controlled) -> None:
    """Integrate the network dynamics from the configured initial state.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    net, inputs = _setup(cfg)
    if controlled:
        prob, decomp, gram = _problem(cfg, net, inputs)
        traj = simulate(prob, min_energy_input(prob, gram, decomp))
    else:
        targets = cfg.target_set(net.n)
        prob = ControlProblem(net, inputs, targets, cfg.initial_state(net.n),
                              np.zeros(targets.p), cfg.t0, cfg.tf)
        traj = simulate(prob)
    outdir = _outdir(cfg)
    export_trajectory_csv(traj, outdir / "trajectory.csv")
    report = {"controlled": controlled, "final_output": traj.final_output.tolist()}
    if controlled:
        report["reach_error"] = reach_error(prob, traj)
    _dump(report, outdir / "simulate_report.json")


@main.command()
@_common_options
@_exit_codes
@timed("'check' command", precision=1)
def check(config_path, seed, workers, out, digits) -> None:
    """Test output controllability of the configured driver and target sets.

    Exits with code 4 when the triplet is not output controllable.
    """
    cfg = _load(config_path, seed, workers, out, digits)
    net, inputs = _setup(cfg)
    targets = cfg.target_set(net.n)
    report = output_controllability_check(net, inputs, targets, cfg.horizon, cfg.prec)
    data = {
        "controllable": report.controllable,
        "mu_min": format_number(report.mu_min, cfg.digits),
        "log10_mu_min": report.log10_mu_min,
        "threshold_log10": -cfg.digits / 2,
        "inputs": list(inputs.nodes),
        "targets": list(targets.nodes),
        "minimum_driver_count": minimum_driver_count(net),
        "drivers_reach_all": reaches_all(net, inputs),
    }
    _dump(data, _outdir(cfg) / "check_report.json")
    if not report.controllable:
        raise SystemExit(EXIT_CONTROLLABILITY)
