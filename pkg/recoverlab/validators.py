import functools
import operator
from typing import Callable, TypeAlias

__all__ = ["lt", "le", "ge", "gt"]

Number: TypeAlias = int | float


class _BoundValidator:
    """Checks the value handed to a property setter against a fixed bound."""

    def __init__(self, bound: Number,
                 compare_op: str,
                 compare_fn: Callable[[Number, Number], bool],
                 exc_type: type[Exception] = ValueError,
                 err_msg: str | None = None) -> None:
        self.bound = bound
        self.compare_op = compare_op
        self.compare_fn = compare_fn
        self.exc_type = exc_type
        self.err_msg = err_msg

    def __call__(self, fn):
        @functools.wraps(fn)
        def wrapper(obj, val):
            if not self.compare_fn(val, self.bound):
                if self.err_msg:
                    msg = self.err_msg
                else:
                    msg = (f"{fn.__name__} must be {self.compare_op} "
                           f"{self.bound}, got {val!r}")
                raise self.exc_type(msg)
            return fn(obj, val)

        return wrapper


def lt(val: Number, /, *, exc_type=ValueError, err_msg=None):
    return _BoundValidator(val, "<", operator.lt, exc_type, err_msg)


def le(val: Number, /, *, exc_type=ValueError, err_msg=None):
    return _BoundValidator(val, "<=", operator.le, exc_type, err_msg)


def ge(val: Number, /, *, exc_type=ValueError, err_msg=None):
    return _BoundValidator(val, ">=", operator.ge, exc_type, err_msg)


def gt(val: Number, /, *, exc_type=ValueError, err_msg=None):
    return _BoundValidator(val, ">", operator.gt, exc_type, err_msg)

