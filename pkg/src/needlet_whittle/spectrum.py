"""Parametric angular power spectra ``C_l = l^{-alpha0} G(l)``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """An invalid or unsupported spectrum model."""


class Form(str, enum.Enum):
    PURE = "pure"
    KAPPA = "kappa"
    RATIONAL = "rational"


# smallest spectral index accepted by the models; the experiments use alpha0 = 2
ALPHA0_FLOOR = 2.0


@dataclass(frozen=True)
class SpectrumModel:
    """A power-law spectrum with a slowly varying correction ``G(l)``.

    ``PURE``: ``G(l) = G0``.
    ``KAPPA``: ``G(l) = G0 (1 + kappa / l)``.
    ``RATIONAL``: ``G(l) = G0 (log l)^delta P(l) / Q(l)`` with polynomial
    coefficients given lowest order first.
    """

    alpha0: float
    G0: float = 1.0
    form: Form = Form.PURE
    kappa: float = 0.0
    p: tuple = field(default=())
    q: tuple = field(default=())
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))
        object.__setattr__(self, "p", tuple(float(c) for c in self.p))
        object.__setattr__(self, "q", tuple(float(c) for c in self.q))
        if not math.isfinite(self.alpha0) or self.alpha0 < ALPHA0_FLOOR:
            raise ModelError(f"alpha0 must be >= {ALPHA0_FLOOR}, got {self.alpha0}")
        if not self.G0 > 0:
            raise ModelError("G0 must be positive")
        if self.form is Form.RATIONAL:
            if not self.p or not self.q:
                raise ModelError("RATIONAL form needs both P and Q coefficients")
            if self.p[-1] == 0 or self.q[-1] == 0:
                raise ModelError("leading coefficients of P and Q must be nonzero")

    def correction(self, ells) -> np.ndarray:
        """``G(l)`` evaluated on an array of multipoles."""
        ells = np.asarray(ells, dtype=float)
        if np.any(ells < 1):
            raise ModelError("multipoles must be >= 1")
        if self.form is Form.PURE:
            return np.full_like(ells, self.G0)
        if self.form is Form.KAPPA:
            g = self.G0 * (1.0 + self.kappa / ells)
        else:
            num = np.polynomial.polynomial.polyval(ells, self.p)
            den = np.polynomial.polynomial.polyval(ells, self.q)
            if np.any(den == 0):
                raise ModelError("Q(l) vanishes on the requested multipoles")
            g = self.G0 * num / den
            if self.delta != 0:
                g = g * np.log(ells) ** self.delta
        if np.any(~(g > 0)):
            bad = ells[~(g > 0)]
            raise ModelError(f"G(l) is not positive at l = {bad[:5].astype(int).tolist()}")
        return g

    def cl(self, ells) -> np.ndarray:
        ells = np.asarray(ells, dtype=float)
        return ells ** (-self.alpha0) * self.correction(ells)

    def to_dict(self) -> dict:
        out = {"alpha0": self.alpha0, "G0": self.G0, "form": self.form.value}
        if self.form is Form.KAPPA:
            out["kappa"] = self.kappa
        if self.form is Form.RATIONAL:
            out.update(p=list(self.p), q=list(self.q), delta=self.delta)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SpectrumModel":
        known = {"alpha0", "G0", "form", "kappa", "p", "q", "delta"}
        extra = set(data) - known
        if extra:
            raise ModelError(f"unknown model field(s): {sorted(extra)}")
        if "alpha0" not in data:
            raise ModelError("model.alpha0 is required")
        return cls(**data)


def cl_value(model: SpectrumModel, l: int) -> float:
    """``C_l`` for a single multipole ``l >= 1``."""
    if l < 1:
        raise ModelError("l must be >= 1")
    return float(model.cl(np.array([l]))[0])


def effective_kappa(model: SpectrumModel) -> float:
    """First-order correction ``kappa`` in ``G(l) = G0 (1 + kappa / l + ...)``.

    For rational corrections this is ``p_{m-1}/p_m - q_{m-1}/q_m``; a log
    factor (``delta != 0``) has no such expansion.
    """
    if model.form is Form.PURE:
        return 0.0
    if model.form is Form.KAPPA:
        return float(model.kappa)
    if model.delta != 0:
        raise ModelError("kappa is undefined when G(l) carries a log factor (delta != 0)")
    p, q = model.p, model.q
    if len(p) != len(q):
        raise ModelError("P and Q must have the same degree for G(l) to tend to a constant")
    if len(p) < 2:
        return 0.0
    return p[-2] / p[-1] - q[-2] / q[-1]
