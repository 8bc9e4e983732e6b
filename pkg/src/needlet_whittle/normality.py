"""Shapiro-Wilk W test with Royston's (1995) coefficient and p-value approximations."""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

_N01 = NormalDist()

# Royston's polynomial corrections for the two extreme coefficients (powers of 1/sqrt(n))
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(coefs, x):
    return sum(c * x**k for k, c in enumerate(coefs))


def shapiro_wilk_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights ``a_1..a_n`` applied to the order statistics."""
    if n < 3:
        raise ValueError("need n >= 3")
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    m = np.array([_N01.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    summ2 = float((m**2).sum())
    u = 1.0 / math.sqrt(n)
    a = m / math.sqrt(summ2)
    an = a[-1] + _poly(_C1, u)
    if n > 5:
        an1 = a[-2] + _poly(_C2, u)
        eps = (summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an**2 - 2 * an1**2)
        a = m / math.sqrt(eps)
        a[-1], a[-2] = an, an1
        a[0], a[1] = -an, -an1
    else:
        eps = (summ2 - 2 * m[-1] ** 2) / (1 - 2 * an**2)
        a = m / math.sqrt(eps)
        a[-1], a[0] = an, -an
    return a


def shapiro_wilk(sample) -> tuple[float, float]:
    """Return ``(W, p)`` for the hypothesis that ``sample`` is Gaussian.

    Valid for ``3 <= n <= 5000``. Small p-values reject normality.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if not 3 <= n <= 5000:
        raise ValueError(f"Shapiro-Wilk needs 3 <= n <= 5000, got n = {n}")
    ssq = float(((x - x.mean()) ** 2).sum())
    if ssq <= 0 or x[-1] - x[0] < 1e-19 * max(1.0, abs(x[0])):
        raise ValueError("sample has zero variance")
    a = shapiro_wilk_coefficients(n)
    w = float((a @ x) ** 2 / ssq)
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, max(p, 0.0)

    one_minus_w = 1.0 - w
    if one_minus_w <= 0:
        return w, 1.0
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        mean = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 6.714e-4 * n**3
        sd = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        arg = gamma - math.log(one_minus_w)
        if arg <= 0:
            return w, 0.0
        z = (-math.log(arg) - mean) / sd
    else:
        ln = math.log(n)
        mean = -1.5861 - 0.31082 * ln - 0.083751 * ln**2 + 0.0038915 * ln**3
        sd = math.exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln**2)
        z = (math.log(one_minus_w) - mean) / sd
    return w, _N01.cdf(-z)
