"""

    netctl.utils.check_type.py
    ~~~~~~~~~~~~~~~~~~~~~~~~~~
    Type checking decorators.

    Validate types of input arguments of decorated functions. Only basic validation based on
    `isinstance()` check is provided.

    @author: z33k

"""
from functools import wraps
from typing import Any, Iterable, Type

from netctl.constants import Function


def fullqualname(class_: Type) -> str:
    """Return fully qualified name of ``class_``, e.g. 'builtins.int'.
    """
    module = getattr(class_, "__module__", None)
    name = getattr(class_, "__name__", None)
    if module is None or name is None:  # unions and other typing constructs
        return str(class_)
    return f"{module}.{name}"


def types_to_namestr(types: Iterable[Type]) -> str:
    """Convert ``types`` to a string of their fully qualified names.
    """
    return ", ".join([fullqualname(t) for t in types])


def _validate_type(value: Any, *types: Type, none_allowed=False) -> None:
    """Validate ``value`` to be of one of ``types`` (or ``None`` if allowed).

    Raises:
        TypeError: on value not being of any of types
    """
    if none_allowed and value is None:
        return
    if not isinstance(value, types):
        suffix = " or None" if none_allowed else ""
        raise TypeError(f"Input value ({value!r}) can only be of [{types_to_namestr(types)}] "
                        f"type(s){suffix}, got: '{type(value)}'.")


def type_checker(*positional_types: Type, none_allowed=False,
                 **keyword_types: Type) -> Function:
    """Validate decorated function's positional arguments to be of ``positional_types``
    (respectively) and its keyword arguments to be of ``keyword_types``.

    If length of ``positional_types`` doesn't match the length of the arguments, the shorter
    range gets validated. ``keyword_types`` that don't match anything in decorated function's
    keyword arguments are ignored.

    Args:
        positional_types: expected types of decorated function's positional arguments
        none_allowed: True, if ``None`` is allowed as a substitute for the given types
        keyword_types: a mapping of keyword argument names to their expected types

    Returns:
        validated function
    """
    def decorate(func: Function) -> Function:
        @wraps(func)
        def wrap(*args: Any, **kwargs: Any) -> Any:
            for arg, et in zip(args, positional_types):
                _validate_type(arg, et, none_allowed=none_allowed)
            for k, v in kwargs.items():
                if et := keyword_types.get(k):
                    _validate_type(v, et, none_allowed=none_allowed)
            return func(*args, **kwargs)
        return wrap
    return decorate
