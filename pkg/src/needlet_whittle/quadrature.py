"""Adaptive Simpson quadrature for smooth scalar integrands."""

from __future__ import annotations

import math
from typing import Callable


class QuadratureError(RuntimeError):
    """Raised when an integral fails to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    max_depth: int = 60,
) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    a, b : float
        Integration limits. ``a > b`` returns the negated integral.
    tol : float
        Absolute error target for the whole interval.
    max_depth : int
        Maximum bisection depth for any subinterval.

    Returns
    -------
    float

    Raises
    ------
    QuadratureError
        If some subinterval hits ``max_depth`` without meeting its share of ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0

    total = 0.0
    worst = 0.0
    # (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - s
        if abs(delta) <= 15.0 * eps or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15.0 * eps:
                worst = max(worst, abs(delta) / 15.0)
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    if worst > tol:
        raise QuadratureError("adaptive Simpson reached max_depth", worst)
    return total


def fixed_simpson(f: Callable[[float], float], a: float, b: float, n: int) -> float:
    """Composite Simpson rule on ``n`` (even) equal panels."""
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    h = (b - a) / n
    acc = f(a) + f(b)
    for i in range(1, n):
        acc += (4.0 if i % 2 else 2.0) * f(a + i * h)
    return acc * h / 3.0


def bump(u: float) -> float:
    """The compactly supported smooth bump ``exp(-1/(1-u^2))`` on (-1, 1)."""
    if u <= -1.0 or u >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - u * u))
