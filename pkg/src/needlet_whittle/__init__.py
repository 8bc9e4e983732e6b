"""Needlet-Whittle estimation of the spectral index of isotropic spherical random fields."""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticConstants,
    geometric_sums,
    narrow_band_variance,
    phi,
    psi,
    variance_constants,
    window_integral,
    z_limit,
    z_statistic,
)
from .bandsim import (
    BandPowers,
    EmpiricalSpectrum,
    band_powers,
    noise_free_spectrum,
    read_spectrum_csv,
    sample_empirical_spectrum,
    write_spectrum_csv,
)
from .estimator import (
    EstimateResult,
    EstimationError,
    EstimatorConfig,
    estimate_narrow_band,
    estimate_needlet,
    fourier_whittle_estimate,
    g_hat,
    profile_objective,
    score_and_curvature,
)
from .montecarlo import Estimator, ExperimentConfig, NarrowSpec, run_experiment, summarize
from .normality import shapiro_wilk
from .quadrature import QuadratureError
from .spectrum import Form, ModelError, SpectrumModel
from .window import BandDecomposition, k_values, partition_residual, window_squared

__all__ = [name for name in dir() if not name.startswith("_")]
