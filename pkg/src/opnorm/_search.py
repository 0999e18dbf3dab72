"""One-dimensional search routines used by the bound engine and the oracles."""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = 1e-8,
    max_iter: int = 500,
) -> tuple[float, float]:
    """Minimise a convex function on ``[lo, hi]`` by golden-section search.

    Returns ``(x_best, f_best)`` where ``f_best`` is the smallest value that
    was actually evaluated (endpoints included).  Because every evaluated
    point is a legitimate candidate, the returned value never undershoots
    the true minimum.
    """
    best_x, best_f = lo, f(lo)
    fh = f(hi)
    if fh < best_f:
        best_x, best_f = hi, fh
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        for x, fx in ((c, fc), (d, fd)):
            if fx < best_f:
                best_x, best_f = x, fx
        if b - a <= rtol * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return best_x, best_f


def bisect_decreasing(
    g: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int = 400
) -> float:
    """Locate the sign change of a nonincreasing ``g`` with ``g(lo) > 0 >= g(hi)``.

    Returns the right end of the final bracket, i.e. a point where ``g <= 0``.
    """
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def first_index(pred: Callable[[int], bool], start: int = 1, limit: int = 1 << 62) -> int:
    """Smallest integer ``k >= start`` with ``pred(k)`` true, for monotone ``pred``.

    Exponential search followed by integer bisection.  Raises ``ValueError``
    if the predicate is still false at ``limit``.
    """
    if pred(start):
        return start
    lo, step = start, 1
    while True:
        hi = start + step
        if hi >= limit:
            hi = limit
            if not pred(hi):
                raise ValueError("predicate never satisfied below limit")
            break
        if pred(hi):
            break
        lo = hi
        step *= 2
    # pred(lo) false, pred(hi) true
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
