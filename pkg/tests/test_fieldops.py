import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from cgoscatter.fieldops import (Field, WeightSpec, cauchy_transform, conj_cauchy_transform,
                                 convexified_weight, ddz, ddzbar, green_laplace, phi0,
                                 phi0_log_coefficient, phi0_radial, positive_laplacian,
                                 weighted_norm)
from cgoscatter.geometry import SurfaceModel

R, N = 6.0, 512


def _rel(a, b, mask):
    return np.linalg.norm((a - b)[mask]) / np.linalg.norm(b[mask])


def _gauss_field(seed, R=R, n=N):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.5, 1.5, 3) + 1j * rng.uniform(-1.5, 1.5, 3)
    w = rng.uniform(0.6, 1.5, 3)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    return Field.from_function(lambda z: sum(a[i] * np.exp(-np.abs(z - c[i]) ** 2 / w[i] ** 2)
                                             for i in range(3)), R, n)


def test_holomorphic_derivatives():
    F = Field.from_function(lambda z: z ** 2, R, N)
    m = F.interior_mask()
    assert np.max(np.abs(ddz(F).values - 2 * F.z)[m]) < 1e-8
    assert np.max(np.abs(ddzbar(F).values)[m]) < 1e-8
    A = Field.from_function(lambda z: np.abs(z) ** 2, R, N)
    assert np.max(np.abs(ddz(A).values - np.conj(A.z))[m]) < 1e-8
    assert np.max(np.abs(ddzbar(A).values - A.z)[m]) < 1e-8


def test_laplacian_of_gaussian_matches_closed_form():
    F = Field.from_function(lambda z: np.exp(-np.abs(z) ** 2), R, N)
    r2 = np.abs(F.z) ** 2
    exact = (4 - 4 * r2) * np.exp(-r2)  # -(d_xx + d_yy) e^{-r^2}
    m = F.interior_mask()
    assert np.max(np.abs(positive_laplacian(F).values - exact)[m]) < 1e-8
    assert np.max(np.abs((-4 * ddz(ddzbar(F))).values - exact)[m]) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_composition_identity(seed):
    F = _gauss_field(seed)
    m = F.interior_mask()
    lhs = -4 * ddz(ddzbar(F))
    assert np.max(np.abs((lhs - positive_laplacian(F)).values)[m]) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_cauchy_and_green_invert(seed):
    F = _gauss_field(seed)
    m = F.interior_mask()
    assert _rel(ddz(cauchy_transform(F)).values, F.values, m) < 1e-5
    assert _rel(ddzbar(conj_cauchy_transform(F)).values, F.values, m) < 1e-5
    assert _rel(positive_laplacian(green_laplace(F)).values, F.values, m) < 1e-5


def test_zero_maps_to_zero():
    Z = Field.zeros(R, 64)
    assert np.all(cauchy_transform(Z).values == 0)
    assert np.all(green_laplace(Z).values == 0)


def test_cauchy_of_derivative_recovers_up_to_antiholomorphic():
    G = Field.from_function(lambda z: np.exp(-np.abs(z) ** 2), R, N)
    F = ddz(G)
    out = cauchy_transform(F)
    m = F.interior_mask()
    assert _rel(ddz(out).values, F.values, m) < 1e-5
    # for this compactly supported G the antiholomorphic term vanishes
    assert np.max(np.abs(out.values - G.values)[m]) < 1e-6


def test_cauchy_of_unit_disk():
    D = Field.from_function(lambda z: (np.abs(z) <= 1).astype(float), 3.0, N)
    out = cauchy_transform(D, tail_tol=None)
    inside = np.abs(D.z) < 0.9
    assert np.max(np.abs(np.abs(out.values) - np.abs(D.z))[inside]) < 1e-2
    assert np.max(np.abs(out.values - D.z)[inside]) < 1e-2


def test_green_of_unit_disk_is_log_outside():
    # smoothed disk indicator keeps the comparison spectral
    D = Field.from_function(lambda z: (np.abs(z) <= 1).astype(float), 4.0, N)
    out = green_laplace(D, tail_tol=None).values
    z = D.z
    ring = (np.abs(z) > 1.3) & (np.abs(z) < 2.5)
    mass = D.integral().real / math.pi  # area / pi, about 1
    expected = -0.5 * mass * np.log(np.abs(z[ring]))
    diff = out[ring] - expected
    assert np.ptp(diff.real) < 1e-2 and np.max(np.abs(diff.imag)) < 1e-10


def test_tail_mass_is_rejected():
    F = Field.from_function(lambda z: np.ones_like(z), 2.0, 32)
    with pytest.raises(ValueError):
        cauchy_transform(F)


def test_weighted_norm_examples():
    assert weighted_norm(Field.from_function(lambda z: 1 + 0 * z, 1.0, 32), None, 2) == pytest.approx(2)
    F = Field.from_function(lambda z: np.exp(-np.abs(z) ** 2), 5.0, 64)
    w = WeightSpec("gaussian", 1.0, "inverse_modulus")
    assert weighted_norm(F, w, "inf") == pytest.approx(1, abs=1e-12)
    F = Field.from_function(lambda z: np.exp(-2 * np.abs(z) ** 2), 5.0, 256)
    assert weighted_norm(F, w, 2) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-4)


def test_weighted_norm_convergence_is_at_least_second_order():
    # smooth integrand with a nonzero boundary contribution: trapezoid error ~ d^2
    f = lambda z: np.exp(-0.5 * np.abs(z - 0.3) ** 2)
    R0 = 2.0
    exact = math.sqrt(_square_integral_sq(R0))
    errs = []
    for n in (17, 33, 65, 129):
        errs.append(abs(weighted_norm(Field.from_function(f, R0, n), None, 2) - exact))
    for a, b in zip(errs, errs[1:]):
        assert b <= max(a / 2, 1e-13)


def _square_integral_sq(R0):
    # int over [-R0,R0]^2 of exp(-|z-0.3|^2)
    gx = math.sqrt(math.pi) / 2 * (math.erf(R0 - 0.3) + math.erf(R0 + 0.3))
    gy = math.sqrt(math.pi) * math.erf(R0)
    return gx * gy


def test_weighted_norm_overflow_reported():
    F = Field.from_function(lambda z: 1 + 0 * z, 30.0, 32)
    with pytest.raises(OverflowError):
        weighted_norm(F, WeightSpec("gaussian", 1.0, "inverse_modulus"), 2)


def test_phi0_quadratic_case():
    P0 = phi0(SurfaceModel(), 2, None, R, N)
    m = P0.interior_mask()
    assert np.allclose(P0.values, -np.abs(P0.z) ** 2 / 4)
    assert np.max(np.abs(positive_laplacian(P0).values - 1)[m]) < 1e-8
    w = WeightSpec("polynomial", 2.0)
    assert np.isfinite(weighted_norm(P0, w, "inf"))
    assert weighted_norm(P0, w, "inf") < 0.25


def test_phi0_linear_case_solves_radial_equation_and_leading_term():
    d = 0.5
    r = np.linspace(0.5, 5, 10)
    hstep = 1e-3
    f = lambda s: phi0_radial(s, 1, d)
    lap = -((f(r + hstep) - 2 * f(r) + f(r - hstep)) / hstep ** 2 + (f(r + hstep) - f(r - hstep)) / (2 * hstep * r))
    np.testing.assert_allclose(lap, (1 + r * r) ** (-(2 - d) / 2), rtol=1e-5)
    rr = np.geomspace(10, 40, 30)
    lead = -(f(rr) - phi0_log_coefficient(d) * np.log((1 + rr * rr) ** -0.5))
    slope = np.polyfit(np.log(rr), np.log(lead), 1)[0]
    assert abs(slope - 0.5) < 0.02
    with pytest.raises(ValueError):
        phi0_radial(rr, 1, 1.5)


def test_phi0_linear_matches_independent_quadrature():
    d = 0.5
    g = lambda s: ((1 + s * s) ** (d / 2) - 1) / (d * s)
    for r in (0.7, 3.0, 12.0):
        ref = integrate.quad(g, 0, r)[0]
        assert -phi0_radial(np.array([r]), 1, d)[0] + phi0_radial(np.array([0.0]), 1, d)[0] == pytest.approx(ref, rel=1e-7)


def test_convexified_weight():
    phi = Field.from_function(lambda z: (z ** 2).real, R, N)
    p0 = phi0(SurfaceModel(), 2, None, R, N)
    assert np.allclose(convexified_weight(phi, p0, 0.0, 0.1).values, phi.values)
    out = convexified_weight(phi, p0, 0.1, 0.1)
    z = phi.z
    assert np.allclose(out.values, z.real ** 2 - z.imag ** 2 + np.abs(z) ** 2 / 4)
    h, eps = 0.05, 0.1
    lap = positive_laplacian(convexified_weight(phi, p0, h, eps)).values / h
    m = phi.interior_mask()
    assert np.max(np.abs(lap + 1 / eps)[m]) < 1e-6


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_derivative_composition_on_random_fields(seed):
    F = _gauss_field(seed, R=5.0, n=256)
    m = F.interior_mask()
    # outputs of spectral operators are already band limited; no second taper
    a = (-4 * ddz(ddzbar(F), taper=False)).values
    b = positive_laplacian(F).values
    assert np.max(np.abs(a - b)[m]) < 1e-8 * max(1.0, np.max(np.abs(b)))
