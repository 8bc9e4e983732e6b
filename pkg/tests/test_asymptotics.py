import math

import numpy as np
import pytest
from scipy.integrate import quad

from needlet_whittle.asymptotics import (
    bias_m,
    curvature_limit,
    geometric_sums,
    k_ratio_limit,
    narrow_band_variance,
    phi,
    psi,
    sigma2,
    tau_plus2,
    variance_constants,
    window_integral,
    z_limit,
    z_statistic,
)
from needlet_whittle.window import BandDecomposition, k_values, window_squared


def brute_sums(J1, JL, s, B):
    j = np.arange(J1, JL + 1, dtype=float)
    w = B ** (s * j)
    lb = math.log(B)
    return w.sum(), (w * j * lb).sum(), (w * (j * lb) ** 2).sum()


def test_geometric_sums_against_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(200):
        B = float(rng.uniform(1.05, 4.0))
        s = float(rng.uniform(0.2, 3.0))
        J1 = int(rng.integers(0, 15))
        JL = J1 + int(rng.integers(0, 20))
        got = geometric_sums(J1, JL, s, B)
        want = brute_sums(J1, JL, s, B)
        for g, w in zip(got, want):
            assert g == pytest.approx(w, rel=1e-9, abs=1e-12)


def test_z_statistic_against_brute_force_and_sign():
    rng = np.random.default_rng(4)
    for _ in range(200):
        B = float(rng.uniform(1.05, 4.0))
        s = float(rng.uniform(0.2, 3.0))
        J1 = int(rng.integers(0, 10))
        JL = J1 + int(rng.integers(0, 12))
        j = np.arange(J1, JL + 1, dtype=float)
        w = B ** (s * j)
        lb = math.log(B)
        # pairwise form is free of cancellation: (1/2) sum_ij w_i w_j (x_i - x_j)^2
        x = j * lb
        want = 0.5 * (np.outer(w, w) * np.subtract.outer(x, x) ** 2).sum()
        z = z_statistic(J1, JL, s, B)
        assert z >= 0
        assert z == pytest.approx(want, rel=1e-9, abs=1e-300)
    assert z_statistic(5, 5, 2.0, 2.0) == pytest.approx(0.0, abs=1e-9)


def test_z_limit():
    z = z_statistic(1, 20, 2.0, 2.0) / 2.0 ** (2 * 2.0 * 20)
    assert z == pytest.approx(z_limit(2.0, 2.0), rel=1e-8)


def test_window_integral_direct():
    for B, a in [(2.0, 3.0), (2 ** 0.25, 2.0)]:
        for k in (0, 1, 2):
            f = lambda u: window_squared(u, B) * u ** (1 - a) * math.log(u) ** k
            ref = 2 * quad(f, 1 / B, B, points=[1.0], epsabs=1e-13, limit=200)[0]
            assert window_integral(B, a, k) == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_i0_at_alpha_two_is_log_B_times_two():
    # with alpha = 2 the integrand is b^2(u)/u and the partition of unity gives 2 log B
    for B in (2 ** 0.125, 2.0, 3.0):
        assert window_integral(B, 2.0) == pytest.approx(2 * math.log(B), rel=1e-9)


def test_k_values_asymptotics():
    # B^{j alpha} K_j(alpha) -> I_0; -k1/k0 - j log B -> I_1/I_0
    bands = BandDecomposition(2.0, 2**16)
    j, a = 14, 3.0
    kv = k_values(j, 2.0, a, bands)
    i0, i1 = window_integral(2.0, a, 0), window_integral(2.0, a, 1)
    assert 2.0 ** (j * a) * kv.k0 == pytest.approx(i0, rel=1e-3)
    assert -kv.k1 / kv.k0 - j * math.log(2.0) == pytest.approx(i1 / i0, abs=1e-3)
    assert k_ratio_limit(2.0, a, a) == 1.0
    assert k_ratio_limit(2.0, a, 3.5) == pytest.approx(i0 / window_integral(2.0, 3.5), rel=1e-12)


def test_tau_ratio_and_sigma_direct():
    c = variance_constants(2.0, 3.0)
    assert c.tau_minus2 == pytest.approx(c.tau_plus2 * 2.0 ** (2 * 3.0 - 2), rel=1e-12)
    f = lambda x: window_squared(x, 2.0) ** 2 * x ** (1 - 6.0)
    assert sigma2(2.0, 3.0) == pytest.approx(4 * quad(f, 0.5, 2.0, points=[1.0], epsabs=1e-13)[0], rel=1e-8)
    g = lambda x: window_squared(x, 2.0) * window_squared(x / 2, 2.0) * x ** (1 - 6.0)
    assert tau_plus2(2.0, 3.0) == pytest.approx(4 * quad(g, 1.0, 2.0, epsabs=1e-13)[0], rel=1e-8)


def test_constants_are_consistent():
    c = variance_constants(2 ** 0.5, 3.0, kappa=1.0)
    assert c.rho2 == pytest.approx((c.sigma2 + 2 ** -1.5 * c.tau2) / c.i0**2, rel=1e-14)
    assert c.d == pytest.approx(c.rho2 * c.psi, rel=1e-14)
    assert c.b2d == pytest.approx(2.0 * c.d, rel=1e-14)
    assert c.m == pytest.approx(bias_m(1.0, 2 ** 0.5))
    assert set(c.to_dict()) >= {"sigma2", "tau2", "i0", "rho2", "psi", "d", "b2d", "phi", "m"}


def test_closed_forms():
    assert psi(2.0) == pytest.approx(27 / (16 * math.log(2) ** 2))
    assert bias_m(1.0, 2.0) == 1.5
    assert curvature_limit(2.0) == pytest.approx(4 * math.log(2) ** 2 / 9)
    for B in (1.001, 1.01, 2 ** 0.125, 2.0, 3.0, 10.0, 100.0):
        assert phi(B) > 0
    with pytest.raises(ValueError):
        psi(1.0)


def test_D_tends_to_eight_as_B_to_one():
    for a in (2.0, 3.0, 4.0):
        c = variance_constants(1.01, a)
        assert abs(0.01 * c.rho2 - 1) < 0.1
        assert abs(c.d - 8) < 0.8


def test_narrow_band_variance():
    c = variance_constants(2.0, 3.0)
    v = narrow_band_variance(c, 0.5, 8)
    assert v == pytest.approx(c.rho2 / (c.phi * 0.5 * 2.0**16))
    with pytest.raises(ValueError):
        narrow_band_variance(c, 1.0, 8)


def test_input_validation():
    with pytest.raises(ValueError):
        geometric_sums(5, 4, 1.0, 2.0)
    with pytest.raises(ValueError):
        z_statistic(1, 4, 0.0, 2.0)
    with pytest.raises(ValueError):
        window_integral(2.0, 3.0, 3)
