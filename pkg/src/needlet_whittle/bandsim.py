"""Seeded simulation of empirical angular power spectra and needlet band powers.

For a Gaussian isotropic field ``sum_m |a_lm|^2 ~ C_l chi^2_{2l+1}``, so the
empirical spectrum is drawn directly from that law; the ``a_lm`` themselves are
never generated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectrum import SpectrumModel
from .window import BandDecomposition


class RangeError(ValueError):
    """Band multipoles fall outside the available spectrum."""


def replication_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """Counter-based generator keyed on ``(seed, replication)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replication)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class EmpiricalSpectrum:
    L: int
    values: np.ndarray
    l_min: int = 1
    seed: int | None = None
    cl_true: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.L - self.l_min + 1,):
            raise ValueError(
                f"expected {self.L - self.l_min + 1} values for l={self.l_min}..{self.L}, "
                f"got {vals.shape[0] if vals.ndim else 'scalar'}"
            )
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("empirical spectrum values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.l_min, self.L + 1)


def sample_empirical_spectrum(
    model: SpectrumModel, L: int, seed: int, replication: int = 0, l_min: int = 1
) -> EmpiricalSpectrum:
    """Draw ``C_hat_l = C_l X_l / (2l + 1)``, ``X_l ~ chi^2_{2l+1}``, for ``l = l_min..L``.

    The draw is a pure function of ``(model, L, seed, replication)``. Multipoles
    are drawn in increasing order from one stream, so a spectrum at a larger
    ``L`` shares its low-``l`` prefix.
    """
    if L < l_min:
        raise ValueError("L must be >= l_min")
    ells = np.arange(l_min, L + 1)
    cl = model.cl(ells)
    dof = 2.0 * ells + 1.0
    rng = replication_rng(seed, replication)
    # chi^2_k = 2 * Gamma(k/2, 1); numpy's gamma sampler is Marsaglia-Tsang
    chi2 = 2.0 * rng.standard_gamma(dof / 2.0)
    return EmpiricalSpectrum(L, cl * chi2 / dof, l_min, seed, cl)


def noise_free_spectrum(model: SpectrumModel, L: int, l_min: int = 1) -> EmpiricalSpectrum:
    """The expectation ``C_hat_l = C_l``."""
    ells = np.arange(l_min, L + 1)
    cl = model.cl(ells)
    return EmpiricalSpectrum(L, cl.copy(), l_min, None, cl)


@dataclass(frozen=True)
class BandPowers:
    """Per-scale band powers ``T_j = sum_l b^2(l/B^j) (2l+1) C_hat_l``."""

    scales: np.ndarray
    values: np.ndarray
    B: float

    @property
    def j_range(self) -> tuple[int, int]:
        return int(self.scales[0]), int(self.scales[-1])

    def __getitem__(self, j: int) -> float:
        idx = np.searchsorted(self.scales, j)
        if idx >= len(self.scales) or self.scales[idx] != j:
            raise KeyError(j)
        return float(self.values[idx])

    def restrict(self, j_lo: int, j_hi: int) -> "BandPowers":
        keep = (self.scales >= j_lo) & (self.scales <= j_hi)
        return BandPowers(self.scales[keep], self.values[keep], self.B)


def band_powers(spec: EmpiricalSpectrum, bands: BandDecomposition) -> BandPowers:
    """Band powers from the weighted-sum identity; no spatial coefficients needed."""
    if bands.l_max > spec.L or bands.l_min < spec.l_min:
        raise RangeError(
            f"bands need l in [{bands.l_min}, {bands.l_max}] but spectrum covers "
            f"[{spec.l_min}, {spec.L}]"
        )
    lo = bands.l_min - spec.l_min
    ells = bands.ells.astype(float)
    chat = spec.values[lo : lo + len(ells)]
    values = bands.weight_matrix() @ ((2.0 * ells + 1.0) * chat)
    return BandPowers(bands.scales, values, bands.B)


def band_power_matrix(chat: np.ndarray, bands: BandDecomposition) -> np.ndarray:
    """Band powers for a stack of spectra ``chat`` of shape ``(R, n_ells)`` on ``bands.ells``."""
    ells = bands.ells.astype(float)
    return (np.asarray(chat) * (2.0 * ells + 1.0)) @ bands.weight_matrix().T


def write_spectrum_csv(spec: EmpiricalSpectrum, path, header: dict | None = None) -> None:
    """Write columns ``l, cl_true, cl_hat``; ``header`` lines go first as ``# key: value``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(["l", "cl_true", "cl_hat"])
        truth = spec.cl_true if spec.cl_true is not None else np.full(len(spec.values), np.nan)
        for l, ct, ch in zip(spec.ells, truth, spec.values):
            writer.writerow([int(l), repr(float(ct)), repr(float(ch))])


def read_spectrum_csv(path) -> EmpiricalSpectrum:
    """Read a CSV with at least columns ``l`` and ``cl_hat`` covering a contiguous range."""
    path = Path(path)
    with path.open() as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or not {"l", "cl_hat"} <= set(reader.fieldnames):
        raise ValueError(f"{path}: CSV must have columns 'l' and 'cl_hat'")
    ells, vals, truth = [], [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            ells.append(int(row["l"]))
            vals.append(float(row["cl_hat"]))
            truth.append(float(row["cl_true"]) if row.get("cl_true") not in (None, "") else np.nan)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: malformed data row {lineno}: {exc}") from None
    if not ells:
        raise ValueError(f"{path}: no data rows")
    order = np.argsort(ells)
    ells = np.asarray(ells)[order]
    if len(np.unique(ells)) != len(ells):
        raise ValueError(f"{path}: duplicate multipoles")
    expected = np.arange(ells[0], ells[-1] + 1)
    missing = np.setdiff1d(expected, ells)
    if len(missing):
        raise ValueError(f"{path}: missing multipoles {missing[:20].tolist()}")
    truth = np.asarray(truth)[order]
    return EmpiricalSpectrum(
        int(ells[-1]),
        np.asarray(vals)[order],
        int(ells[0]),
        None,
        None if np.all(np.isnan(truth)) else truth,
    )
