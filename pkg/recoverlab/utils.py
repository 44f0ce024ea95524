import math
from math import inf, sqrt

import numpy as np

__all__ = ["inf", "sqrt", "round_half_away", "support",
           "top_k_indices", "keep_top_k"]


def round_half_away(x: float, /) -> int:
    """Round ``x`` to the nearest integer, resolving halves away from zero.

    >>> round_half_away(2.5)
    3
    >>> round_half_away(0.05 * 217)
    11
    >>> round_half_away(-0.5)
    -1
    """
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def support(x: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Return the sorted indices of the entries of ``x`` whose magnitude
    exceeds ``floor``.
    """
    return np.flatnonzero(np.abs(x) > floor)


def top_k_indices(values: np.ndarray, k: int,
                  floor: float = 0.0) -> np.ndarray:
    """Indices of the ``k`` largest magnitudes of ``values`` that are strictly
    above ``floor``, in decreasing magnitude order.

    Ties are broken by the lowest index so that every algorithm selects the
    same entries for the same input.

    :param values: Vector whose entries are ranked by magnitude.
    :type values: np.ndarray

    :param k: Maximum number of indices to return.
    :type k: int

    :param floor: Magnitudes at or below ``floor`` are never selected,
                  defaults to 0.0.
    :type floor: float, optional
    """
    if k <= 0:
        return np.empty(0, dtype=int)
    mags = np.abs(values)
    order = np.argsort(-mags, kind="stable")[:k]
    return order[mags[order] > floor]


def keep_top_k(values: np.ndarray, k: int,
               floor: float = 0.0) -> np.ndarray:
    """Null all entries of ``values`` except the ``k`` largest magnitudes
    above ``floor``.
    """
    out = np.zeros_like(values)
    idx = top_k_indices(values, k, floor)
    out[idx] = values[idx]
    return out
