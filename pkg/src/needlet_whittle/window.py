"""Needlet window function, band enumeration and the K_j moment functions.

The squared window ``b^2(x; B)`` is built from the normalised integral of the
smooth bump ``exp(-1/(1-u^2))``; it is supported on ``(1/B, B)`` and its dyadic
translates ``b^2(l / B^j)`` sum to one over ``j`` for every ``l > B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import adaptive_simpson, bump

DEFAULT_QUAD_TOL = 1e-12

# relative guard used when comparing l / B^j with the open support endpoints
_EDGE = 1e-12


class EmptyBandError(ValueError):
    """Raised when a quantity is requested for a band that holds no multipoles."""


class _SmoothStep:
    """Normalised cumulative bump integral on [-1, 1].

    Panel integrals over a fixed node grid are computed once; each evaluation
    then integrates only from the nearest node below ``t``.
    """

    def __init__(self, tol: float, panels: int = 64):
        self.tol = tol
        self.nodes = np.linspace(-1.0, 1.0, panels + 1)
        self.h = 2.0 / panels
        pieces = [
            adaptive_simpson(bump, float(lo), float(hi), tol / panels)
            for lo, hi in zip(self.nodes[:-1], self.nodes[1:])
        ]
        self.cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
        self.norm = float(self.cumulative[-1])

    def __call__(self, t: float) -> float:
        if t <= -1.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        k = min(int((t + 1.0) / self.h), len(self.nodes) - 2)
        start = float(self.nodes[k])
        partial = adaptive_simpson(bump, start, t, self.tol) if t > start else 0.0
        return (float(self.cumulative[k]) + partial) / self.norm


@lru_cache(maxsize=8)
def smooth_step(quad_tol: float = DEFAULT_QUAD_TOL) -> _SmoothStep:
    """Return the cached normalised bump CDF for a given quadrature tolerance."""
    return _SmoothStep(quad_tol)


def _check_B(B: float) -> None:
    if not B > 1.0 or not math.isfinite(B):
        raise ValueError(f"bandwidth parameter B must be a finite real > 1, got {B!r}")


def _window_squared_scalar(x: float, B: float, step: _SmoothStep) -> float:
    if math.isnan(x):
        raise ValueError("window argument is NaN")
    if x <= 1.0 / B or x >= B:
        return 0.0
    scale = 2.0 * B / (B - 1.0)
    if x <= 1.0:
        value = 1.0 - step(1.0 - scale * (x - 1.0 / B))
    else:
        value = step(1.0 - scale * (x / B - 1.0 / B))
    return min(1.0, max(0.0, value))


def window_squared(x, B: float, quad_tol: float = DEFAULT_QUAD_TOL):
    """Squared needlet window ``b^2(x; B)``.

    Zero outside ``(1/B, B)``, rising smoothly to 1 at ``x = 1`` and falling
    back to 0 at ``x = B``. Accepts a scalar or an array of arguments.
    """
    _check_B(B)
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    step = smooth_step(quad_tol)
    if np.ndim(x) == 0:
        return _window_squared_scalar(float(x), B, step)
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    for idx, xi in np.ndenumerate(arr):
        out[idx] = _window_squared_scalar(float(xi), B, step)
    return out


@dataclass(frozen=True)
class WindowParams:
    B: float
    quad_tol: float = DEFAULT_QUAD_TOL

    def __post_init__(self):
        _check_B(self.B)
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")


@dataclass(frozen=True)
class Band:
    """Multipoles ``B^{j-1} < l < B^{j+1}`` of scale ``j`` and their weights ``b^2(l/B^j)``."""

    j: int
    multipoles: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.multipoles)

    @property
    def empty(self) -> bool:
        return len(self.multipoles) == 0


def _band_range(j: int, B: float, l_min: int) -> np.ndarray:
    lo = B ** (j - 1)
    hi = B ** (j + 1)
    start = max(l_min, int(math.floor(lo)))
    stop = int(math.ceil(hi)) + 1
    ells = np.arange(start, stop)
    x = ells / B**j
    keep = (x > (1.0 / B) * (1.0 + _EDGE)) & (x < B * (1.0 - _EDGE))
    return ells[keep]


def band_multipoles(
    j: int, B: float, l_min: int = 1, quad_tol: float = DEFAULT_QUAD_TOL
) -> Band:
    """Enumerate band ``j`` with its squared-window weights.

    Endpoint multipoles, where the window vanishes, are excluded, as are
    multipoles below ``l_min``. The result may be empty for small ``j``.
    """
    if j < 0:
        raise ValueError("scale index j must be >= 0")
    _check_B(B)
    ells = _band_range(int(j), B, l_min)
    weights = window_squared(ells / B**j, B, quad_tol) if len(ells) else np.empty(0)
    return Band(int(j), ells.astype(np.int64), np.asarray(weights, dtype=float))


def partition_residual(
    l: int, B: float, j_max: int, quad_tol: float = DEFAULT_QUAD_TOL
) -> float:
    """``|sum_{j=0}^{j_max} b^2(l/B^j) - 1|``; meaningful for ``l > B``."""
    if l <= B:
        raise ValueError("partition of unity only holds for l > B")
    if B ** (j_max - 1) <= l:
        raise ValueError("j_max too small: need B^(j_max - 1) > l")
    total = sum(window_squared(l / B**j, B, quad_tol) for j in range(j_max + 1))
    return abs(total - 1.0)


@dataclass(frozen=True)
class KValues:
    """``K_j(alpha)`` and its first two alpha-derivatives for one band."""

    k0: float
    k1: float
    k2: float
    n_j: float


def effective_band_size(j, B: float):
    """``N_j = B^{2j}`` (the pixel constant c_B is fixed to one)."""
    return np.power(float(B), 2.0 * np.asarray(j, dtype=float))


@dataclass
class BandDecomposition:
    """All needlet bands of base ``B`` that lie inside ``l_min..l_max``.

    The top scale is the largest ``j`` whose band ends at or below ``l_max``
    (nominally ``floor(log_B l_max) - 1``); empty low bands are dropped, so
    ``j_min`` is the first scale with at least one multipole.
    Window weights are evaluated once, at construction.
    """

    B: float
    l_max: int
    l_min: int = 1
    quad_tol: float = DEFAULT_QUAD_TOL
    j_top: int | None = None
    bands: dict = field(init=False, repr=False)

    def __post_init__(self):
        _check_B(self.B)
        if self.l_min < 1:
            raise ValueError("l_min must be >= 1")
        if self.l_max < self.l_min:
            raise ValueError("l_max must be >= l_min")
        top = self.j_top if self.j_top is not None else top_scale(self.l_max, self.B)
        while top >= 0 and len(_band_range(top, self.B, self.l_min)) and (
            _band_range(top, self.B, self.l_min)[-1] > self.l_max
        ):
            top -= 1
        self.bands = {}
        for j in range(top + 1):
            band = band_multipoles(j, self.B, self.l_min, self.quad_tol)
            if not band.empty:
                self.bands[j] = band
        if not self.bands:
            raise EmptyBandError(
                f"no non-empty band for B={self.B}, l in [{self.l_min}, {self.l_max}]"
            )
        self._matrix = None

    @property
    def scales(self) -> np.ndarray:
        return np.array(sorted(self.bands), dtype=int)

    @property
    def j_min(self) -> int:
        return int(min(self.bands))

    @property
    def j_max(self) -> int:
        return int(max(self.bands))

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.l_min, self.l_max + 1)

    def band(self, j: int) -> Band:
        try:
            return self.bands[j]
        except KeyError:
            raise EmptyBandError(f"band j={j} is empty or outside the decomposition") from None

    def n_j(self, j) -> np.ndarray:
        return effective_band_size(j, self.B)

    def weight_matrix(self) -> np.ndarray:
        """Dense ``(n_scales, n_ells)`` array of ``b^2(l/B^j)``; rows follow ``scales``."""
        if self._matrix is None:
            mat = np.zeros((len(self.bands), self.l_max - self.l_min + 1))
            for row, j in enumerate(self.scales):
                band = self.bands[j]
                mat[row, band.multipoles - self.l_min] = band.weights
            mat.setflags(write=False)
            self._matrix = mat
        return self._matrix


def top_scale(L: int, B: float) -> int:
    """Highest scale ``J_L = floor(log_B L) - 1`` so that ``B^{J_L + 1} <= L``."""
    _check_B(B)
    return int(math.floor(math.log(L) / math.log(B) + 1e-9)) - 1


def k_values(j: int, B: float, alpha: float, bands: BandDecomposition) -> KValues:
    """K_j(alpha), K_{j,1}(alpha), K_{j,2}(alpha) for a single band."""
    if not math.isclose(bands.B, B):
        raise ValueError("B does not match the band decomposition")
    band = bands.band(j)
    if band.empty:
        raise EmptyBandError(f"band j={j} is empty")
    ells = band.multipoles.astype(float)
    logs = np.log(ells)
    terms = band.weights * (2.0 * ells + 1.0) * ells ** (-alpha)
    n_j = float(effective_band_size(j, B))
    return KValues(
        k0=float(terms.sum() / n_j),
        k1=float(-(terms * logs).sum() / n_j),
        k2=float((terms * logs**2).sum() / n_j),
        n_j=n_j,
    )
