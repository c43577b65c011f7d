"""

    netctl.utils.__init__.py
    ~~~~~~~~~~~~~~~~~~~~~~~~
    Project's utilities: timing, seeded random streams, files and logging.

    @author: z33k

"""
import csv
import logging
import os
from functools import wraps
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from contexttimer import Timer

from netctl.constants import LOG_DIR, LOG_LEVEL_ENV_VAR, PathLike, Seed
from netctl.utils.check_type import type_checker

_log = logging.getLogger(__name__)


class ParsingError(ValueError):
    """Raised whenever parser's assumptions are not met.
    """


def timed(operation="", precision=3) -> Callable:
    """Add time measurement to the decorated operation.

    Args:
        operation: name of the time-measured operation (default is function's name)
        precision: decimal places of the logged seconds

    Returns:
        the decorated function
    """
    precision = max(precision, 0)

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            with Timer() as t:
                result = func(*args, **kwargs)
            activity = operation or f"'{func.__name__}()'"
            _log.info(f"Completed {activity} in {t.elapsed:.{precision}f} second(s)")
            return result
        return wrapper
    return decorator


def derive_rng(seed: int | None, *keys: int) -> np.random.Generator:
    """Return an independent random stream derived from master ``seed`` and task ``keys``.

    Identical (seed, keys) always yield the same stream, no matter which process asks.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


def to_rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else derive_rng(seed)


@type_checker(PathLike)
def getfile(path: PathLike, ext="") -> Path:
    """Return an existing file at ``path``.
    """
    f = Path(path)
    if not f.is_file():
        raise FileNotFoundError(f"Not a file: '{f.resolve()}'")
    if ext and not f.suffix.lower() == ext.lower():
        raise ValueError(f"Not a {ext!r} file")
    return f


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    """Write ``rows`` of already formatted cells under ``header`` to a CSV file at ``path``.
    """
    dest = Path(path)
    with dest.open("w", newline="", encoding="utf8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    _log.info(f"Successfully dumped '{dest}'")
    return dest


_logging_initialized = False


def init_log() -> None:
    """Initialize logging: a rotating ``netctl.log`` (in LOG_DIR if it exists) and the console,
    both at the level named by NETCTL_LOG_LEVEL (INFO by default).
    """
    global _logging_initialized

    if not _logging_initialized:
        logfile = LOG_DIR / "netctl.log" if LOG_DIR.exists() else Path("netctl.log")
        level = logging.getLevelName(os.environ.get(LOG_LEVEL_ENV_VAR, "INFO").upper())
        if not isinstance(level, int):
            level = logging.INFO

        root_logger = logging.getLogger()
        root_logger.setLevel(level)
        formatter = logging.Formatter('%(asctime)s [%(name)s] %(levelname)s: %(message)s')
        handler = RotatingFileHandler(logfile, maxBytes=1024*1024*10, backupCount=10)
        stream_handler = logging.StreamHandler()
        for h in handler, stream_handler:
            h.setFormatter(formatter)
            h.setLevel(level)
            root_logger.addHandler(h)

        _logging_initialized = True
