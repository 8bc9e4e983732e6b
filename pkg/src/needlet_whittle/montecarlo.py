"""Monte Carlo replication harness for the needlet and Fourier Whittle estimators."""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .asymptotics import AsymptoticConstants, narrow_band_variance, variance_constants
from .bandsim import band_powers, sample_empirical_spectrum
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    FourierCache,
    KCache,
    default_schedule,
    fourier_whittle_estimate,
    minimize_profile,
    narrow_band_range,
    scale_for_multipole,
)
from .normality import shapiro_wilk
from .spectrum import SpectrumModel
from .window import BandDecomposition


class Estimator(str, enum.Enum):
    NEEDLET_FULL = "needlet_full"
    NEEDLET_NARROW = "needlet_narrow"
    FOURIER_FULL = "fourier_full"
    FOURIER_NARROW = "fourier_narrow"


NARROW = {Estimator.NEEDLET_NARROW, Estimator.FOURIER_NARROW}


@dataclass(frozen=True)
class NarrowSpec:
    """How the narrow band is chosen: a schedule value ``g``, or explicit ``J1`` / ``L1``.

    ``g=None`` with no explicit bound means the default schedule ``g(J_L) = J_L^{-3}``.
    """

    g: float | None = None
    J1: int | None = None
    L1: int | None = None

    def __post_init__(self):
        if sum(v is not None for v in (self.g, self.J1, self.L1)) > 1:
            raise ValueError("give at most one of g, J1 and L1")
        if self.g is not None and not 0 < self.g < 1:
            raise ValueError("narrow.g must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {k: v for k, v in (("g", self.g), ("J1", self.J1), ("L1", self.L1)) if v is not None}


@dataclass(frozen=True)
class ExperimentConfig:
    model: SpectrumModel
    B: float
    L: int
    estimators: tuple = (Estimator.NEEDLET_FULL, Estimator.FOURIER_FULL)
    replications: int = 1000
    seed: int = 0
    narrow: NarrowSpec = field(default_factory=NarrowSpec)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    l_min: int = 1

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(Estimator(e) for e in self.estimators))
        if not self.estimators:
            raise ValueError("at least one estimator is required")
        if self.replications < 2:
            raise ValueError("replications must be >= 2")
        if not self.B > 1:
            raise ValueError("B must be > 1")
        if self.L <= self.l_min:
            raise ValueError("L must exceed l_min")
        bands = _bands(self.B, self.L, self.l_min)
        if bands.j_max < bands.j_min + 2:
            raise ValueError(f"L={self.L} gives too few needlet scales (need J_L >= j_min + 2)")

    @property
    def J_L(self) -> int:
        return _bands(self.B, self.L, self.l_min).j_max

    def narrow_scales(self) -> tuple[int, int]:
        """``(J1, J_L)`` for the needlet narrow band."""
        J_L = self.J_L
        n = self.narrow
        if n.J1 is not None:
            J1 = n.J1
        elif n.L1 is not None:
            J1 = scale_for_multipole(n.L1, self.B)
        else:
            J1 = narrow_band_range(J_L, self.B, n.g if n.g is not None else default_schedule)
        if not _bands(self.B, self.L, self.l_min).j_min <= J1 < J_L:
            raise ValueError(f"narrow band J1={J1} must satisfy j_min <= J1 < J_L={J_L}")
        return J1, J_L

    def narrow_multipoles(self) -> tuple[int, int]:
        """``(L1, L)`` for the Fourier narrow band."""
        n = self.narrow
        if n.L1 is not None:
            L1 = n.L1
        else:
            # matched to the needlet narrow band: centre multipole of band J1 + 1
            L1 = int(round(self.B ** (self.narrow_scales()[0] + 1)))
        L1 = min(max(L1, self.l_min), self.L - 1)
        return L1, self.L

    def schedule_value(self, kind: Estimator) -> float:
        """Effective ``g`` of the narrow band, ``1 - B^{J1 - J_L}`` or ``1 - L1 / L``."""
        if kind is Estimator.NEEDLET_NARROW:
            J1, J_L = self.narrow_scales()
            return 1.0 - self.B ** (J1 - J_L)
        L1, L = self.narrow_multipoles()
        return 1.0 - L1 / L

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "B": self.B,
            "L": self.L,
            "estimators": [e.value for e in self.estimators],
            "replications": self.replications,
            "seed": self.seed,
            "narrow": self.narrow.to_dict(),
            "estimator": {
                "alpha_range": list(self.estimator.alpha_range),
                "g_range": list(self.estimator.g_range),
                "opt_tol": self.estimator.opt_tol,
                "n_scan": self.estimator.n_scan,
            },
            "l_min": self.l_min,
        }


@lru_cache(maxsize=16)
def _bands(B: float, L: int, l_min: int) -> BandDecomposition:
    return BandDecomposition(B, L, l_min)


class _Context:
    """Read-only per-experiment data: bands, K caches and Fourier caches."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.bands = _bands(config.B, config.L, config.l_min)
        self.full = KCache(self.bands)
        est = set(config.estimators)
        self.narrow = KCache(self.bands, config.narrow_scales()) if Estimator.NEEDLET_NARROW in est else None
        self.fourier_cfg = config.estimator.with_ells(config.l_min, config.L)
        if Estimator.FOURIER_NARROW in est:
            self.fourier_narrow_cfg = config.estimator.with_ells(*config.narrow_multipoles())

    def run(self, rep: int) -> list["ReplicationRecord"]:
        cfg = self.config
        spec = sample_empirical_spectrum(cfg.model, cfg.L, cfg.seed, rep, cfg.l_min)
        needlet = {Estimator.NEEDLET_FULL, Estimator.NEEDLET_NARROW} & set(cfg.estimators)
        powers = band_powers(spec, self.bands) if needlet else None
        out = []
        for kind in cfg.estimators:
            try:
                if kind is Estimator.NEEDLET_FULL:
                    res = minimize_profile(powers, self.full, cfg.estimator)
                elif kind is Estimator.NEEDLET_NARROW:
                    res = minimize_profile(powers, self.narrow, cfg.estimator)
                elif kind is Estimator.FOURIER_FULL:
                    res = fourier_whittle_estimate(spec, self.fourier_cfg)
                else:
                    res = fourier_whittle_estimate(spec, self.fourier_narrow_cfg)
                out.append(ReplicationRecord(rep, kind, res))
            except (ArithmeticError, ValueError, RuntimeError) as exc:
                out.append(ReplicationRecord(rep, kind, None, f"{type(exc).__name__}: {exc}"))
        return out


@lru_cache(maxsize=4)
def _context(config: ExperimentConfig) -> _Context:
    return _Context(config)


@dataclass(frozen=True)
class ReplicationRecord:
    rep: int
    estimator: Estimator
    result: EstimateResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None and not self.result.boundary_flag


def _run_chunk(config: ExperimentConfig, reps: list[int]) -> list[ReplicationRecord]:
    ctx = _context(config)
    out = []
    for rep in reps:
        out.extend(ctx.run(rep))
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list[ReplicationRecord]:
    """Run every replication; records are ordered by replication, then estimator.

    Replication ``r`` draws from a stream keyed on ``(seed, r)``, so the output
    does not depend on ``workers``.
    """
    reps = list(range(config.replications))
    if workers <= 1:
        return _run_chunk(config, reps)
    chunks = [reps[i::workers * 4] for i in range(workers * 4)]
    chunks = [c for c in chunks if c]
    records: list[ReplicationRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [config] * len(chunks), chunks):
            records.extend(part)
    order = {e: i for i, e in enumerate(config.estimators)}
    records.sort(key=lambda r: (r.rep, order[r.estimator]))
    return records


@dataclass(frozen=True)
class SummaryRow:
    estimator: Estimator
    n: int
    n_failed: int
    n_boundary: int
    mean: float
    sd: float
    predicted_sd: float
    normalized_ratio: float
    sw_w: float
    sw_p: float

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["estimator"] = self.estimator.value
        return d


def predicted_variance(
    kind: Estimator, config: ExperimentConfig, constants: AsymptoticConstants
) -> float:
    """Asymptotic ``Var(alpha_hat)`` used to normalise each estimator's sample variance.

    Needlet full band: ``D / B^{2 J_L}``. Needlet narrow band:
    ``rho^2 / (Phi g B^{2 J_L})``. Fourier full band: ``8 / L^2``. Fourier narrow
    band: inverse Fisher information ``2 / sum_{l=L1}^{L} (2l+1)(log l - mean)^2``.
    """
    B = config.B
    if kind is Estimator.NEEDLET_FULL:
        return constants.d / B ** (2 * config.J_L)
    if kind is Estimator.NEEDLET_NARROW:
        return narrow_band_variance(constants, config.schedule_value(kind), config.J_L)
    if kind is Estimator.FOURIER_FULL:
        return 8.0 / config.L**2
    cache = FourierCache(*config.narrow_multipoles())
    info = (cache.weights * (cache.log_ells - cache.mean_log) ** 2).sum()
    return float(2.0 / info)


def summarize(
    records: list[ReplicationRecord],
    config: ExperimentConfig,
    constants: AsymptoticConstants | None = None,
) -> list[SummaryRow]:
    """Sample mean, sd (n - 1), normalised variance ratio and Shapiro-Wilk per estimator.

    Failed replications and boundary hits are excluded and counted.
    """
    if constants is None:
        constants = variance_constants(config.B, config.model.alpha0)
    rows = []
    for kind in config.estimators:
        mine = [r for r in records if r.estimator is kind]
        failed = sum(r.result is None for r in mine)
        boundary = sum(r.result is not None and r.result.boundary_flag for r in mine)
        est = np.array([r.result.alpha_hat for r in mine if r.ok])
        if len(est) < 2:
            raise ValueError(f"{kind.value}: fewer than 2 usable replications")
        mean = float(est.mean())
        sd = float(est.std(ddof=1))
        var_pred = predicted_variance(kind, config, constants)
        if sd > 0 and 3 <= len(est) <= 5000:
            w, p = shapiro_wilk(est)
        else:
            w, p = float("nan"), float("nan")
        rows.append(
            SummaryRow(kind, len(est), failed, boundary, mean, sd, math.sqrt(var_pred),
                       sd**2 / var_pred, w, p)
        )
    return rows


def _header_lines(fh, header: dict | None) -> None:
    for key, value in (header or {}).items():
        if not isinstance(value, str):
            value = json.dumps(value, sort_keys=True)
        fh.write(f"# {key}: {value}\n")


def write_replications_csv(groups, path, header: dict | None = None) -> None:
    """One row per (replication, estimator): ``rep, estimator, alpha_hat, g_hat, boundary_flag``.

    ``groups`` is a sequence of ``(extra, records)`` pairs; the keys of ``extra``
    (e.g. ``L`` and ``alpha0`` on a grid) become leading constant columns.
    """
    groups = list(groups)
    lead = list(groups[0][0]) if groups else []
    with Path(path).open("w", newline="") as fh:
        _header_lines(fh, header)
        writer = csv.writer(fh)
        writer.writerow([*lead, "rep", "estimator", "alpha_hat", "g_hat", "boundary_flag", "error"])
        for extra, records in groups:
            for r in records:
                res = r.result
                writer.writerow([
                    *(extra[k] for k in lead),
                    r.rep,
                    r.estimator.value,
                    repr(res.alpha_hat) if res else "",
                    repr(res.g_hat) if res else "",
                    int(res.boundary_flag) if res else "",
                    r.error or "",
                ])


SUMMARY_FIELDS = [
    "estimator", "n", "n_failed", "n_boundary", "mean", "sd",
    "predicted_sd", "normalized_ratio", "sw_w", "sw_p",
]


def write_summary_csv(rows: list[dict], path, header: dict | None = None) -> None:
    """Write summary dicts; keys beyond :data:`SUMMARY_FIELDS` lead the column order."""
    if not rows:
        raise ValueError("no summary rows")
    lead = [k for k in rows[0] if k not in SUMMARY_FIELDS]
    with Path(path).open("w", newline="") as fh:
        _header_lines(fh, header)
        writer = csv.DictWriter(fh, fieldnames=lead + SUMMARY_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
