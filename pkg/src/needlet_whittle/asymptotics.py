"""Closed-form asymptotic constants and geometric-sum identities.

All window integrals run over ``[1/B, B]`` split at ``x = 1``, where the
window formula changes branch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from scipy.integrate import IntegrationWarning, quad

from .quadrature import QuadratureError
from .window import window_squared

DEFAULT_INTEGRAL_TOL = 1e-10


def _check_B(B: float) -> None:
    if not B > 1.0:
        raise ValueError(f"B must be > 1, got {B}")


def _integrate(f, a: float, b: float, tol: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, err = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
        except IntegrationWarning as exc:
            _, err = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
            raise QuadratureError(f"window integral on [{a}, {b}] did not converge: {exc}", err)
    return value


def window_integral(
    B: float, alpha: float, log_power: int = 0, quad_tol: float = DEFAULT_INTEGRAL_TOL
) -> float:
    """``2 * int_{1/B}^{B} b^2(u) u^{1-alpha} (log u)^log_power du`` for ``log_power`` in {0, 1, 2}.

    ``log_power = 0`` gives ``I_0(B, alpha)``, 1 and 2 give ``I_1`` and ``I_2``.
    """
    _check_B(B)
    if log_power not in (0, 1, 2):
        raise ValueError("log_power must be 0, 1 or 2")

    def f(u):
        return window_squared(u, B) * u ** (1.0 - alpha) * math.log(u) ** log_power

    return 2.0 * (_integrate(f, 1.0 / B, 1.0, quad_tol) + _integrate(f, 1.0, B, quad_tol))


def sigma2(B: float, alpha0: float, quad_tol: float = DEFAULT_INTEGRAL_TOL) -> float:
    """``4 int b^4(x) x^{1 - 2 alpha0} dx``: limiting normalised variance of a band power."""
    _check_B(B)

    def f(x):
        return window_squared(x, B) ** 2 * x ** (1.0 - 2.0 * alpha0)

    return 4.0 * (_integrate(f, 1.0 / B, 1.0, quad_tol) + _integrate(f, 1.0, B, quad_tol))


def tau_plus2(B: float, alpha0: float, quad_tol: float = DEFAULT_INTEGRAL_TOL) -> float:
    """``4 int_1^B b^2(x) b^2(x/B) x^{1 - 2 alpha0} dx``: adjacent-band covariance limit."""
    _check_B(B)

    def f(x):
        return window_squared(x, B) * window_squared(x / B, B) * x ** (1.0 - 2.0 * alpha0)

    return 4.0 * _integrate(f, 1.0, B, quad_tol)


def psi(B: float) -> float:
    _check_B(B)
    return (B * B - 1.0) ** 3 / (B**4 * math.log(B) ** 2)


def phi(B: float) -> float:
    """Narrow-band information constant; positive for every ``B > 1``."""
    _check_B(B)
    lb = math.log(B)
    b2 = B * B
    return lb**2 * b2 / (b2 - 1.0) ** 2 * (4.0 / (b2 - 1.0) + 2.0 * (lb - 1.0) / lb)


def bias_m(kappa: float, B: float) -> float:
    """Limit ``(B + 1) kappa / B`` of the normalised full-band bias."""
    _check_B(B)
    return (B + 1.0) * kappa / B


def curvature_limit(B: float) -> float:
    """Probability limit ``B^2 log^2 B / (B^2 - 1)^2`` of the objective curvature near alpha0."""
    _check_B(B)
    return B * B * math.log(B) ** 2 / (B * B - 1.0) ** 2


@dataclass(frozen=True)
class AsymptoticConstants:
    B: float
    alpha0: float
    i0: float
    i1: float
    i2: float
    sigma2: float
    tau_plus2: float
    tau_minus2: float
    tau2: float
    rho2: float
    psi: float
    d: float
    b2d: float
    phi: float
    m: float

    def to_dict(self) -> dict:
        return asdict(self)


def variance_constants(
    B: float, alpha0: float, kappa: float = 0.0, quad_tol: float = DEFAULT_INTEGRAL_TOL
) -> AsymptoticConstants:
    """Every asymptotic constant of the estimators for one ``(B, alpha0)``.

    ``d`` is the limiting variance of ``B^{J_L}(alpha_hat - alpha0)``; ``b2d = B^2 d``
    is the same for ``L (alpha_hat - alpha0)`` and compares to 8 for the
    Fourier estimator.
    """
    _check_B(B)
    i0 = window_integral(B, alpha0, 0, quad_tol)
    i1 = window_integral(B, alpha0, 1, quad_tol)
    i2 = window_integral(B, alpha0, 2, quad_tol)
    s2 = sigma2(B, alpha0, quad_tol)
    tp = tau_plus2(B, alpha0, quad_tol)
    tm = tp / B ** (2.0 - 2.0 * alpha0)
    t2 = tp + tm
    rho2 = (s2 + B ** (-alpha0) * t2) / i0**2
    ps = psi(B)
    d = rho2 * ps
    return AsymptoticConstants(
        B=B,
        alpha0=alpha0,
        i0=i0,
        i1=i1,
        i2=i2,
        sigma2=s2,
        tau_plus2=tp,
        tau_minus2=tm,
        tau2=t2,
        rho2=rho2,
        psi=ps,
        d=d,
        b2d=B * B * d,
        phi=phi(B),
        m=bias_m(kappa, B),
    )


def narrow_band_variance(constants: AsymptoticConstants, g: float, J_L: int) -> float:
    """Predicted ``Var(alpha_hat)`` of the narrow-band estimator: ``rho^2 / (Phi g B^{2 J_L})``."""
    if not 0 < g < 1:
        raise ValueError("g must lie in (0, 1)")
    return constants.rho2 / (constants.phi * g * constants.B ** (2 * J_L))


def geometric_sums(J1: int, JL: int, s: float, B: float) -> tuple[float, float, float]:
    """Closed forms of ``sum B^{sj}``, ``sum B^{sj} j log B`` and ``sum B^{sj} j^2 log^2 B``
    over ``j = J1..JL``."""
    if J1 > JL:
        raise ValueError("need J1 <= JL")
    if not s > 0:
        raise ValueError("s must be positive")
    _check_B(B)
    bs = B**s
    c = bs / (bs - 1.0)
    r = 1.0 / (bs - 1.0)
    lb = math.log(B)
    top = B ** (s * JL)
    bot = B ** (s * (J1 - 1))
    sum0 = c * (top - bot)
    sum1 = c * lb * (top * (JL - r) - bot * ((J1 - 1) - r))
    tail = bs * r * r
    sum2 = c * lb**2 * (top * ((JL - r) ** 2 + tail) - bot * (((J1 - 1) - r) ** 2 + tail))
    return sum0, sum1, sum2


def z_statistic(J1: int, JL: int, s: float, B: float) -> float:
    """``Z = (sum B^{sj})(sum B^{sj} j^2 log^2 B) - (sum B^{sj} j log B)^2``, in closed form.

    Nonnegative by Cauchy-Schwarz and zero iff ``J1 == JL``.
    """
    if J1 > JL:
        raise ValueError("need J1 <= JL")
    if not s > 0:
        raise ValueError("s must be positive")
    _check_B(B)
    # Z = log^2 B * (sum w)^2 * Var(j) for the truncated geometric weights w_j = B^{sj};
    # the sinh form of that variance is free of the large-term cancellation
    n = JL - J1 + 1
    t = s * math.log(B)
    half = math.sinh(t / 2.0)
    r = math.sinh(n * t / 2.0) / (n * half)
    return math.log(B) ** 2 * B ** (s * (J1 + JL)) * n * n * (r * r - 1.0) / (4.0 * half * half)


def z_limit(s: float, B: float) -> float:
    """``lim B^{-2 s J_L} Z_{J_L}(s) = log^2 B B^{3s} / (B^s - 1)^4``."""
    _check_B(B)
    bs = B**s
    return math.log(B) ** 2 * bs**3 / (bs - 1.0) ** 4


def k_ratio_limit(B: float, alpha0: float, alpha: float, quad_tol: float = DEFAULT_INTEGRAL_TOL) -> float:
    """``I_0(B, alpha0) / I_0(B, alpha)``, the limit of ``B^{-j(alpha - alpha0)} K_j(alpha0)/K_j(alpha)``."""
    if alpha == alpha0:
        return 1.0
    return window_integral(B, alpha0, 0, quad_tol) / window_integral(B, alpha, 0, quad_tol)
