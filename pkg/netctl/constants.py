"""

    netctl.constants.py
    ~~~~~~~~~~~~~~~~~~~
    Project's constants.

    @author: z33k

"""
import math
import os
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np

# type hints
T = TypeVar("T")
Json = dict[str, Any]
PathLike = str | Path
Seed = int | np.random.Generator | None  # master seed or a ready stream
Function = Callable[[tuple[Any, ...]], Any]  # function with signature def funcname(*args)

OUTPUT_DIR = Path(os.getcwd()) / "var" / "output"
LOG_DIR = Path(os.getcwd()) / "var" / "logs"
LOG_LEVEL_ENV_VAR = "NETCTL_LOG_LEVEL"
WORKERS_ENV_VAR = "NETCTL_WORKERS"

# network model
EDGE_WEIGHT_RANGE = 0.5, 1.5
DIAGONAL_NOISE_RANGE = -1.0, 1.0
TARGET_MAX_REAL_EIGENVALUE = -1.0
SPECTRAL_TOLERANCE = 1e-8
DIAGONAL_RETRIES = 100  # per node
SAMPLING_ATTEMPTS_FACTOR = 100  # rejection sampling budget per requested edge
DPR_ITERATIONS_FACTOR = 10  # accepted swaps per edge
DPR_ATTEMPTS_FACTOR = 100  # swap attempts per requested swap
MAX_NODES = 10_000_000
ER_GAMMA = math.inf  # the uniform-weight (Erdős–Rényi) limit of the static model

# linear algebra
DEFAULT_DIGITS = 100
MIN_DIGITS = 16
MAX_EIGVEC_CONDITION = 1e12
EIG_RESIDUAL_TOLERANCE = 1e-8
JACOBI_SWEEPS = 50
CARE_RESIDUAL_TOLERANCE = 1e-8

# control problem
DEFAULT_T0 = 0.0
DEFAULT_TF = 1.0
DEFAULT_DRIVER_FRACTION = 0.5
QUADRATURE_NODES = 50
REPORT_GRID_POINTS = 1001
ODE_TOLERANCE = 1e-10

# scaling law
DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 11))
DEFAULT_SAMPLES = 50
DEFAULT_ZETAS = 0.0, 1.0, 10.0
MIN_REPLICAS = 20
REPLICA_RETRIES = 5
CHAIN_START_FRACTION = 0.1

# CSV emission
HARDWARE_DIGITS = 17

# exit codes
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_CONTROLLABILITY = 4
EXIT_SOLVER = 5
