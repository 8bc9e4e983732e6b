"""Needlet-Whittle and Fourier-Whittle estimators of the spectral index.

The scale parameter ``G`` is profiled out in closed form,

    G_hat(alpha) = sum_j T_j / K_j(alpha) / sum_j N_j,

which leaves the one-dimensional objective

    R(alpha) = log sum_j T_j / K_j(alpha) + sum_j N_j log K_j(alpha) / sum_j N_j

minimised over a compact interval of spectral indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .bandsim import BandPowers, EmpiricalSpectrum
from .window import BandDecomposition, EmptyBandError, effective_band_size


class EstimationError(RuntimeError):
    """The objective cannot be evaluated (e.g. all band powers vanish)."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Search intervals and tolerances shared by all estimators.

    ``band_range`` restricts the needlet scales to ``(j_lo, j_hi)``;
    ``baseline_l_range`` restricts the Fourier estimator to ``(l_lo, l_hi)``.
    ``None`` means the full available range.
    """

    alpha_range: tuple = (1.5, 10.0)
    g_range: tuple = (1e-30, 1e30)
    opt_tol: float = 1e-6
    band_range: tuple | None = None
    baseline_l_range: tuple | None = None
    n_scan: int = 64

    def __post_init__(self):
        a1, a2 = self.alpha_range
        if not (0 < a1 < a2 < math.inf):
            raise ValueError(f"alpha_range must satisfy 0 < a1 < a2 < inf, got {self.alpha_range}")
        g1, g2 = self.g_range
        if not (0 < g1 < g2 < math.inf):
            raise ValueError(f"g_range must satisfy 0 < g1 < g2 < inf, got {self.g_range}")
        if not self.opt_tol > 0:
            raise ValueError("opt_tol must be positive")
        if self.n_scan < 3:
            raise ValueError("n_scan must be >= 3")

    def with_bands(self, j_lo: int, j_hi: int) -> "EstimatorConfig":
        return replace(self, band_range=(int(j_lo), int(j_hi)))

    def with_ells(self, l_lo: int, l_hi: int) -> "EstimatorConfig":
        return replace(self, baseline_l_range=(int(l_lo), int(l_hi)))


@dataclass(frozen=True)
class EstimateResult:
    alpha_hat: float
    g_hat: float
    objective_at_min: float
    score_at_min: float
    curvature: float
    j_range_used: tuple
    boundary_flag: bool
    flat_objective: bool = False
    g_out_of_range: bool = False

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "g_hat": self.g_hat,
            "objective_at_min": self.objective_at_min,
            "score_at_min": self.score_at_min,
            "curvature": self.curvature,
            "j_range_used": list(self.j_range_used),
            "boundary_flag": self.boundary_flag,
            "flat_objective": self.flat_objective,
            "g_out_of_range": self.g_out_of_range,
        }


class KCache:
    """Per-band data needed to evaluate ``K_j(alpha)`` and its derivatives.

    Holds ``b^2(l/B^j) (2l+1)`` for the selected scales, ``log l`` and
    ``N_j``. Everything alpha-dependent is recomputed on each call.
    """

    def __init__(self, bands: BandDecomposition, j_range: tuple | None = None, n_scale=1.0):
        scales = bands.scales
        if j_range is not None:
            lo, hi = j_range
            scales = scales[(scales >= lo) & (scales <= hi)]
        if len(scales) == 0:
            raise EmptyBandError(f"no non-empty band in j_range={j_range}")
        rows = np.searchsorted(bands.scales, scales)
        weights = bands.weight_matrix()[rows]
        cols = np.flatnonzero(weights.any(axis=0))
        ells = bands.ells[cols].astype(float)
        self.B = bands.B
        self.scales = scales
        self.ells = ells
        self.log_ells = np.log(ells)
        self.matrix = weights[:, cols] * (2.0 * ells + 1.0)
        # n_scale plays the role of the pixel constant c_B; the estimator is invariant to it
        self.n_j = n_scale * effective_band_size(scales, bands.B)
        self.n_total = float(self.n_j.sum())

    @property
    def j_range(self) -> tuple[int, int]:
        return int(self.scales[0]), int(self.scales[-1])

    def k0(self, alpha) -> np.ndarray:
        """``K_j(alpha)``; shape ``(n_scales,)`` or ``(len(alpha), n_scales)``."""
        alpha = np.asarray(alpha, dtype=float)
        powers = np.exp(-np.multiply.outer(alpha, self.log_ells))
        return (powers @ self.matrix.T) / self.n_j

    def values(self, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(K_j, K_{j,1}, K_{j,2})`` at ``alpha``; the latter are alpha-derivatives."""
        base = self.matrix * np.exp(-alpha * self.log_ells)
        k0 = base.sum(axis=1) / self.n_j
        k1 = -(base @ self.log_ells) / self.n_j
        k2 = (base @ self.log_ells**2) / self.n_j
        return k0, k1, k2


def _aligned(powers: BandPowers, kcache: KCache) -> np.ndarray:
    idx = np.searchsorted(powers.scales, kcache.scales)
    clipped = np.minimum(idx, len(powers.scales) - 1)
    if np.any(idx >= len(powers.scales)) or np.any(powers.scales[clipped] != kcache.scales):
        raise EmptyBandError("band powers do not cover the scales of the K cache")
    T = np.asarray(powers.values, dtype=float)[idx]
    if not np.any(T > 0):
        raise EstimationError("all band powers are zero; objective is undefined")
    return T


def g_hat(alpha: float, powers: BandPowers, kcache: KCache) -> float:
    """Profiled scale ``G_hat(alpha)``."""
    T = _aligned(powers, kcache)
    k0 = kcache.k0(alpha)
    return float((T / k0).sum() / kcache.n_total)


def profile_objective(alpha, powers: BandPowers, kcache: KCache):
    """Profiled Whittle objective ``R(alpha)``; vectorised over ``alpha``."""
    T = _aligned(powers, kcache)
    k0 = kcache.k0(alpha)
    out = np.log((T / k0).sum(axis=-1)) + (kcache.n_j * np.log(k0)).sum(axis=-1) / kcache.n_total
    return float(out) if np.ndim(out) == 0 else out


def score_and_curvature(alpha: float, powers: BandPowers, kcache: KCache) -> tuple[float, float]:
    """First and second alpha-derivatives of :func:`profile_objective`."""
    T = _aligned(powers, kcache)
    k0, k1, k2 = kcache.values(alpha)
    w = kcache.n_j / kcache.n_total
    a = (T / k0).sum()
    da = -(T * k1 / k0**2).sum()
    d2a = (T * (2.0 * k1**2 / k0**3 - k2 / k0**2)).sum()
    r1 = k1 / k0
    score = da / a + (w * r1).sum()
    curvature = d2a / a - (da / a) ** 2 + (w * (k2 / k0 - r1**2)).sum()
    return float(score), float(curvature)


def minimize_bounded(
    fun: Callable, lo: float, hi: float, tol: float, n_scan: int = 64
) -> tuple[float, float, bool]:
    """Minimise a smooth scalar function on ``[lo, hi]``.

    A coarse grid scan (``fun`` must accept an array) picks the bracketing
    cell, then bounded Brent refines inside it. Returns ``(x, f(x), flat)``
    where ``flat`` marks an objective that is constant over the scan.
    """
    grid = np.linspace(lo, hi, n_scan)
    values = np.asarray(fun(grid), dtype=float)
    if not np.any(np.isfinite(values)):
        raise EstimationError("objective is not finite anywhere on the search interval")
    values = np.where(np.isfinite(values), values, np.inf)
    i = int(np.argmin(values))
    finite = values[np.isfinite(values)]
    flat = bool(finite.max() - finite.min() <= 1e-12 * max(1.0, abs(finite.min())))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_scan - 1)]
    res = minimize_scalar(
        lambda x: float(fun(x)), bounds=(a, b), method="bounded", options={"xatol": tol / 4}
    )
    x, fx = float(res.x), float(res.fun)
    # Brent never evaluates the bracket ends; the minimum may sit on the boundary
    for edge in {a, b} & {lo, hi}:
        fe = float(fun(edge))
        if fe <= fx:
            x, fx = float(edge), fe
    return x, fx, flat


def _newton_polish(x: float, derivs: Callable, lo: float, hi: float, steps: int = 4) -> float:
    """Refine an interior minimiser with Newton steps on the analytic score.

    Near the optimum the objective changes by ``O(dx^2)``, so value-based search
    stalls around ``sqrt(eps)``; the score keeps full precision.
    """
    if x <= lo or x >= hi:
        return x
    for _ in range(steps):
        score, curv = derivs(x)
        if not curv > 0:
            break
        step = score / curv
        if not lo < x - step < hi:
            break
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def minimize_profile(
    powers: BandPowers, kcache: KCache, config: EstimatorConfig = EstimatorConfig()
) -> EstimateResult:
    """Needlet-Whittle estimate ``(alpha_hat, G_hat)`` over the scales held by ``kcache``."""
    a1, a2 = config.alpha_range
    T = _aligned(powers, kcache)
    sub = BandPowers(kcache.scales, T, powers.B)
    x, fx, flat = minimize_bounded(
        lambda a: profile_objective(a, sub, kcache), a1, a2, config.opt_tol, config.n_scan
    )
    x = _newton_polish(x, lambda a: score_and_curvature(a, sub, kcache), a1, a2)
    fx = profile_objective(x, sub, kcache)
    score, curv = score_and_curvature(x, sub, kcache)
    g = g_hat(x, sub, kcache)
    return EstimateResult(
        alpha_hat=x,
        g_hat=g,
        objective_at_min=fx,
        score_at_min=score,
        curvature=curv,
        j_range_used=kcache.j_range,
        boundary_flag=bool(x - a1 <= config.opt_tol or a2 - x <= config.opt_tol),
        flat_objective=flat,
        g_out_of_range=not (config.g_range[0] <= g <= config.g_range[1]),
    )


def narrow_band_range(J_L: int, B: float, g) -> int:
    """Lowest scale ``J_1`` of the narrow band, from ``B^{J_1} = B^{J_L}(1 - g(J_L))``.

    ``g`` is a number in (0, 1) or a callable of ``J_L``. The offset
    ``log(1 - g) / log B`` is rounded down, so ``J_1 <= J_L - 1``.
    """
    gv = float(g(J_L)) if callable(g) else float(g)
    if not 0.0 < gv < 1.0:
        raise ValueError(f"narrow-band schedule must lie in (0, 1), got g({J_L}) = {gv}")
    offset = math.log1p(-gv) / math.log(B)
    J1 = J_L + math.floor(offset + 1e-9)
    J1 = min(J1, J_L - 1)
    if J1 >= J_L:
        raise ValueError("narrow band is degenerate (J_1 >= J_L)")
    return int(J1)


def default_schedule(J_L: int) -> float:
    """``g(J_L) = J_L^{-3}``."""
    return float(J_L) ** -3


def scale_for_multipole(l: int, B: float) -> int:
    """Scale whose band tops out at ``l``, i.e. ``B^{j+1} ~ l`` (nearest integer ``j``)."""
    return int(round(math.log(l) / math.log(B))) - 1


def estimate_narrow_band(
    powers: BandPowers,
    bands: BandDecomposition,
    J1: int,
    config: EstimatorConfig = EstimatorConfig(),
    J_L: int | None = None,
) -> EstimateResult:
    """Narrow-band estimate using scales ``J1..J_L`` only."""
    J_L = bands.j_max if J_L is None else J_L
    if J1 >= J_L:
        raise ValueError("narrow band needs J1 < J_L")
    return minimize_profile(powers, KCache(bands, (J1, J_L)), config)


def estimate_needlet(
    spec: EmpiricalSpectrum,
    B: float,
    config: EstimatorConfig = EstimatorConfig(),
    bands: BandDecomposition | None = None,
) -> EstimateResult:
    """Full-band (or ``config.band_range``) needlet estimate from an empirical spectrum."""
    from .bandsim import band_powers

    if bands is None:
        bands = BandDecomposition(B, spec.L, spec.l_min)
    powers = band_powers(spec, bands)
    return minimize_profile(powers, KCache(bands, config.band_range), config)


class FourierCache:
    """Multipole weights for the per-``l`` Whittle baseline on ``l_lo..l_hi``."""

    def __init__(self, l_lo: int, l_hi: int):
        if l_hi <= l_lo:
            raise ValueError("Fourier baseline needs at least two multipoles")
        self.l_range = (int(l_lo), int(l_hi))
        self.ells = np.arange(l_lo, l_hi + 1, dtype=float)
        self.log_ells = np.log(self.ells)
        self.weights = 2.0 * self.ells + 1.0
        self.mean_log = float((self.weights * self.log_ells).sum() / self.weights.sum())
        self.log_wsum = math.log(self.weights.sum())


def _fourier_chat(spec: EmpiricalSpectrum, cache: FourierCache) -> np.ndarray:
    lo, hi = cache.l_range
    if lo < spec.l_min or hi > spec.L:
        raise ValueError(f"Fourier range {cache.l_range} outside spectrum [{spec.l_min}, {spec.L}]")
    chat = spec.values[lo - spec.l_min : hi - spec.l_min + 1]
    if not np.any(chat > 0):
        raise EstimationError("empirical spectrum is identically zero")
    return chat


def fourier_objective(alpha, chat: np.ndarray, cache: FourierCache):
    """``log G_F(alpha) - alpha * mean_w(log l)`` with ``G_F = sum w C_hat l^alpha / sum w``."""
    alpha = np.asarray(alpha, dtype=float)
    expo = np.multiply.outer(alpha, cache.log_ells)
    out = logsumexp(expo, b=cache.weights * chat, axis=-1) - cache.log_wsum - alpha * cache.mean_log
    return float(out) if np.ndim(out) == 0 else out


def fourier_whittle_estimate(
    spec: EmpiricalSpectrum, config: EstimatorConfig = EstimatorConfig()
) -> EstimateResult:
    """Multipole-by-multipole Whittle estimate; ``config.baseline_l_range`` selects a narrow band."""
    lo, hi = config.baseline_l_range or (spec.l_min, spec.L)
    cache = FourierCache(lo, hi)
    chat = _fourier_chat(spec, cache)
    a1, a2 = config.alpha_range
    x, fx, flat = minimize_bounded(
        lambda a: fourier_objective(a, chat, cache), a1, a2, config.opt_tol, config.n_scan
    )

    def moments(a):
        tilt = cache.weights * chat * np.exp(a * (cache.log_ells - cache.log_ells.max()))
        p = tilt / tilt.sum()
        m1 = float((p * cache.log_ells).sum())
        return m1, float((p * cache.log_ells**2).sum()) - m1**2

    x = _newton_polish(x, lambda a: (moments(a)[0] - cache.mean_log, moments(a)[1]), a1, a2)
    fx = fourier_objective(x, chat, cache)
    m1, var = moments(x)
    g = math.exp(fx + x * cache.mean_log)
    return EstimateResult(
        alpha_hat=x,
        g_hat=g,
        objective_at_min=fx,
        score_at_min=m1 - cache.mean_log,
        curvature=var,
        j_range_used=cache.l_range,
        boundary_flag=bool(x - a1 <= config.opt_tol or a2 - x <= config.opt_tol),
        flat_objective=flat,
        g_out_of_range=not (config.g_range[0] <= g <= config.g_range[1]),
    )

