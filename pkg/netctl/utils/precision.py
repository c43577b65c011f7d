"""

    netctl.utils.precision.py
    ~~~~~~~~~~~~~~~~~~~~~~~~~
    Software floating point plumbing.

    Extended precision lives in per-digits `mpmath.MPContext` instances (never in the global
    `mpmath.mp`) and in numpy object arrays holding their numbers.

    @author: z33k

"""
from functools import lru_cache
from typing import Any

import mpmath
import numpy as np
from mpmath.ctx_mp import MPContext

from netctl.constants import HARDWARE_DIGITS


@lru_cache(maxsize=None)
def get_context(digits: int) -> MPContext:
    ctx = MPContext()
    ctx.dps = digits
    return ctx


def promote(arr: Any, ctx: MPContext) -> np.ndarray:
    """Convert a (real or complex) numpy array to an object array of ``ctx`` numbers.
    """
    arr = np.asarray(arr)
    convert = ctx.mpc if np.iscomplexobj(arr) else ctx.mpf
    out = np.empty(arr.shape, dtype=object)
    for idx, value in np.ndenumerate(arr):
        out[idx] = convert(value.item() if hasattr(value, "item") else value)
    return out


def demote(arr: np.ndarray) -> np.ndarray:
    """Convert an object array of mpmath numbers back to hardware floating point.
    """
    flat = list(arr.flat)
    if any(isinstance(x, mpmath.ctx_mp_python._mpc) for x in flat):
        return np.array([complex(x) for x in flat], dtype=complex).reshape(arr.shape)
    return np.array([float(x) for x in flat], dtype=float).reshape(arr.shape)


real_part = np.frompyfunc(lambda z: z.real, 1, 1)
imag_part = np.frompyfunc(lambda z: z.imag, 1, 1)


def to_raw(arr: np.ndarray) -> tuple[tuple[int, ...], tuple]:
    """Return a picklable (shape, raw-tuples) form of a real object array.

    The dynamically created number classes of a `MPContext` do not survive pickling, their
    raw mantissa/exponent tuples do.
    """
    return arr.shape, tuple(x._mpf_ for x in arr.flat)


def from_raw(raw: tuple[tuple[int, ...], tuple], ctx: MPContext) -> np.ndarray:
    shape, data = raw
    out = np.empty(len(data), dtype=object)
    for i, item in enumerate(data):
        out[i] = ctx.make_mpf(item)
    return out.reshape(shape)


def format_number(value: Any, digits: int | None = None) -> str:
    """Format ``value`` as a decimal string: 17 significant digits for hardware floats or
    ``digits`` digits for software floats.
    """
    if isinstance(value, (mpmath.ctx_mp_python._mpf, mpmath.ctx_mp_python._mpc)):
        digits = digits or HARDWARE_DIGITS
        return get_context(digits).nstr(value, digits)
    return f"{float(value):.17g}"
