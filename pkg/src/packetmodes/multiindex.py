"""Multi-index helpers.  A multi-index is a tuple of nonnegative ints."""

from __future__ import annotations

from functools import lru_cache
from math import factorial


def order(alpha) -> int:
    return int(sum(alpha))


def mi_factorial(alpha) -> float:
    out = 1.0
    for a in alpha:
        out *= factorial(int(a))
    return out


@lru_cache(maxsize=None)
def multi_indices(d: int, max_order: int):
    """All multi-indices with |alpha| <= max_order, graded lexicographic."""
    out = []
    for n in range(max_order + 1):
        out.extend(_shell(d, n))
    return tuple(out)


@lru_cache(maxsize=None)
def _shell(d: int, n: int):
    if d == 1:
        return ((n,),)
    out = []
    for head in range(n, -1, -1):
        for tail in _shell(d - 1, n - head):
            out.append((head,) + tail)
    return tuple(out)


def add(alpha, j: int, k: int = 1):
    lst = list(alpha)
    lst[j] += k
    return tuple(lst)


def is_valid(alpha) -> bool:
    return all(a >= 0 for a in alpha)
