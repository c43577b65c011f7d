"""

    netctl.config.py
    ~~~~~~~~~~~~~~~~
    Experiment configuration read from a single JSON document.

    @author: z33k

"""
import json
import logging
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from netctl.constants import DEFAULT_DIGITS, DEFAULT_DRIVER_FRACTION, DEFAULT_FRACTIONS, \
    DEFAULT_SAMPLES, DEFAULT_T0, DEFAULT_TF, DEFAULT_ZETAS, Json, MIN_DIGITS, MIN_REPLICAS, \
    OUTPUT_DIR, PathLike, QUADRATURE_NODES
from netctl.data import InputSet, Network, TargetSet
from netctl.gramian import PrecisionConfig
from netctl.lqcontrol import QuadraticCost
from netctl.netgen import build_network, load_edge_list, load_network
from netctl.scaling import realization_seed
from netctl.utils import getfile
from netctl.utils.check_type import type_checker

_log = logging.getLogger(__name__)

NETWORK_SOURCES = "generate", "edge_list", "file"
ERROR_MODES = "targets", "realizations"


class ConfigError(ValueError):
    """Raised on an invalid experiment configuration.
    """


def _check_generation(params: dict) -> None:
    """Validate static model parameters before any sampling starts.
    """
    if not isinstance(params, dict):
        raise ConfigError(f"Generation parameters must be a JSON object, got: {params!r}")
    missing = {"n", "gamma_in", "gamma_out", "k_av"} - set(params)
    if missing:
        raise ConfigError(f"Missing generation parameter(s): {sorted(missing)}")
    try:
        n, k_av = int(params["n"]), float(params["k_av"])
        gammas = float(params["gamma_in"]), float(params["gamma_out"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid generation parameter: {e}") from e
    if n < 2:
        raise ConfigError(f"Static model needs at least 2 nodes, got: {n}")
    if not 0 < k_av < math.inf:
        raise ConfigError(f"Average degree must be positive and finite, got: {k_av}")
    if not all(gamma > 2 for gamma in gammas):  # inf is the Erdős–Rényi limit
        raise ConfigError(f"Power-law exponents must be greater than 2 or infinite, got: "
                          f"{gammas}")


@dataclass(frozen=True)
class ExperimentConfig:
    network: dict
    drivers: int | None = None
    n_d: float | None = None
    t0: float = DEFAULT_T0
    tf: float = DEFAULT_TF
    digits: int = DEFAULT_DIGITS
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    samples: int = DEFAULT_SAMPLES
    zetas: tuple[float, ...] = DEFAULT_ZETAS
    cost: dict | None = None
    seed: int | None = None
    output_dir: str = str(OUTPUT_DIR)
    targets: tuple[int, ...] | None = None
    x0: tuple[float, ...] | None = None
    yf: tuple[float, ...] | str | None = None
    replicas: int = MIN_REPLICAS
    iterations: int | None = None
    realizations: int = 1
    error_mode: str = "targets"
    quadrature_nodes: int = QUADRATURE_NODES
    workers: int | None = None

    def __post_init__(self) -> None:
        sources = [k for k in NETWORK_SOURCES if k in self.network]
        if len(sources) != 1:
            raise ConfigError(f"Exactly one network source of {NETWORK_SOURCES} expected, got: "
                              f"{sources or 'none'}")
        if sources[0] == "generate":
            _check_generation(self.network["generate"])
        if self.drivers is not None and self.n_d is not None:
            raise ConfigError("Specify either 'drivers' or 'n_d', not both")
        if self.n_d is not None and not 0 < self.n_d <= 1:
            raise ConfigError(f"Driver fraction must be in (0, 1], got: {self.n_d}")
        if self.drivers is not None and self.drivers < 1:
            raise ConfigError(f"Driver count must be positive, got: {self.drivers}")
        if self.digits < MIN_DIGITS:
            raise ConfigError(f"At least {MIN_DIGITS} digits are required, got: {self.digits}")
        if self.tf <= self.t0:
            raise ConfigError(f"Final time must exceed initial time: ({self.t0}, {self.tf})")
        if not self.fractions or not all(0 < f <= 1 for f in self.fractions):
            raise ConfigError(f"Fractions must lie in (0, 1]: {self.fractions}")
        if self.samples < 1 or self.realizations < 1 or self.quadrature_nodes < 1:
            raise ConfigError("Sample, realization and quadrature node counts must be positive")
        if any(z < 0 or not math.isfinite(z) for z in self.zetas):
            raise ConfigError(f"State weights must be finite and non-negative: {self.zetas}")
        if self.error_mode not in ERROR_MODES:
            raise ConfigError(f"Error mode must be one of {ERROR_MODES}, got: {self.error_mode!r}")
        if isinstance(self.yf, str) and self.yf != "worst_case":
            raise ConfigError(f"Unknown desired output: {self.yf!r}")
        if self.cost is not None and set(self.cost) - {"Q", "M", "R"}:
            raise ConfigError(f"Cost keys must be among Q, M, R: {sorted(self.cost)}")

    @classmethod
    def from_json(cls, data: Json) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("Configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        if unknown := set(data) - known:
            raise ConfigError(f"Unknown configuration key(s): {sorted(unknown)}")
        if "network" not in data:
            raise ConfigError("Missing 'network' section")
        data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    def override(self, **kwargs: Any) -> "ExperimentConfig":
        """Return a copy with the non-``None`` keyword values replacing the stored ones.
        """
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    @property
    def prec(self) -> PrecisionConfig:
        return PrecisionConfig(self.digits)

    @property
    def horizon(self) -> tuple[float, float]:
        return self.t0, self.tf

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    @property
    def source(self) -> str:
        return next(k for k in NETWORK_SOURCES if k in self.network)

    def load_network(self, realization=0) -> Network:
        """Build or read the network of the ``realization``-th run.

        Only generated networks differ across realizations.
        """
        seed = self.seed if realization == 0 else realization_seed(self.seed, realization)
        try:
            return self._load_network(seed)
        except OSError as e:
            raise ConfigError(f"Cannot load network: {e}") from e

    def _load_network(self, seed: int | None) -> Network:
        match self.source:
            case "generate":
                params = self.network["generate"]
                return build_network(int(params["n"]), float(params["gamma_in"]),
                                     float(params["gamma_out"]), float(params["k_av"]), seed)
            case "edge_list":
                return load_edge_list(self.network["edge_list"],
                                      directed=bool(self.network.get("directed", True)),
                                      seed=seed)
            case _:
                return load_network(self.network["file"])

    def driver_count(self, n: int) -> int:
        if self.drivers is not None:
            if self.drivers > n:
                raise ConfigError(f"{self.drivers} driver(s) requested for {n} node(s)")
            return self.drivers
        fraction = self.n_d if self.n_d is not None else DEFAULT_DRIVER_FRACTION
        return max(1, int(round(fraction * n)))

    def target_set(self, n: int) -> TargetSet:
        """Return the configured targets (all nodes when unspecified).
        """
        targets = TargetSet(tuple(self.targets)) if self.targets else TargetSet(tuple(range(n)))
        try:
            targets.validate(n)
        except IndexError as e:
            raise ConfigError(str(e)) from e
        return targets

    def initial_state(self, n: int) -> np.ndarray:
        x0 = np.zeros(n) if self.x0 is None else np.array(self.x0, dtype=float)
        if x0.shape != (n,):
            raise ConfigError(f"Initial state needs {n} entries, got: {x0.shape}")
        return x0

    def quadratic_cost(self, n: int, inputs: InputSet, zeta=0.0) -> QuadraticCost:
        """Return the cost read from text matrices (missing ones default to zero Q and M and an
        identity R) or, without a cost section, the Q = zeta * I cost.
        """
        if self.cost is None:
            return QuadraticCost.from_zeta(zeta, n, inputs.m)
        try:
            q = np.loadtxt(self.cost["Q"], ndmin=2) if "Q" in self.cost else np.zeros((n, n))
            m = np.loadtxt(self.cost["M"], ndmin=2) if "M" in self.cost else \
                np.zeros((n, inputs.m))
            r = np.loadtxt(self.cost["R"], ndmin=2) if "R" in self.cost else np.eye(inputs.m)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot read cost matrices: {e}") from e
        return QuadraticCost(q, m, r)


@type_checker(PathLike)
def load_config(path: PathLike) -> ExperimentConfig:
    """Read the experiment configuration JSON at ``path``.
    """
    try:
        file = getfile(path, ext=".json")
        with file.open(encoding="utf8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read configuration at '{path}': {e}") from e
    return ExperimentConfig.from_json(data)
