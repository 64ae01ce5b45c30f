import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgoscatter.fieldops import Field
from cgoscatter.paleywiener import (ComplexFrequencySlice, SphereDivisionError, complex_fourier,
                                    contour_shift_check, decay_rate, fourier_at, gaussian_class_function,
                                    helmholtz_image, sphere_division)

R, N = 10.0, 257


@pytest.fixture(scope="module")
def gauss():
    return Field.from_function(lambda z: np.exp(-np.abs(z) ** 2), R, N)


def test_plancherel_for_gaussian(gauss):
    s = complex_fourier(gauss)
    kx, ky = s.xi
    assert np.max(np.abs(s.values - np.pi * np.exp(-(kx ** 2 + ky ** 2) / 4))) <= 1e-6
    assert s.l2_norm == pytest.approx(2 * np.pi * np.sqrt(np.sum(np.abs(gauss.values) ** 2)) * gauss.spacing,
                                      rel=1e-12)


def test_shifted_gaussian_closed_form(gauss):
    s = complex_fourier(gauss, (1.0, 0.0), gamma=0.5)
    kx, ky = s.xi
    exact = np.pi * np.exp(-((kx + 1j) ** 2 + ky ** 2) / 4)
    assert np.max(np.abs(s.values - exact)) <= 1e-10
    assert s.l2_ratio < 1 and s.sup_ratio < 1


def test_zero_function():
    s = complex_fourier(Field.zeros(R, 65), (0.5, 0.5), gamma=1.0)
    assert np.all(s.values == 0) and s.l2_ratio == 0


def test_direct_sum_matches_fft(gauss):
    s = complex_fourier(gauss, (0.3, -0.7))
    kx, ky = s.xi
    idx = [(0, 0), (3, 250), (17, 9)]
    direct = fourier_at(gauss, [kx[i, 0] for i, _ in idx], [ky[0, j] for _, j in idx], (0.3, -0.7))
    assert np.allclose(direct, [s.values[i, j] for i, j in idx], atol=1e-12)


def test_window_too_small_for_eta(gauss):
    with pytest.raises(ValueError, match="window too small"):
        complex_fourier(Field.from_function(lambda z: np.exp(-0.3 * np.abs(z) ** 2), 6.0, 65), (8.0, 0.0))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), ex=st.floats(-3, 3), ey=st.floats(-3, 3))
def test_bound_ratio_at_most_one(seed, ex, ey):
    if ex * ex + ey * ey > 9:
        ex, ey = ex / 2, ey / 2
    sl = complex_fourier(gaussian_class_function(seed, 1.0, R, 129), (ex, ey), gamma=1.0)
    assert sl.l2_ratio <= 1 and sl.sup_ratio <= 1


def test_analytic_division_recovers_gaussian(gauss):
    F = ComplexFrequencySlice.from_function(lambda kx, ky: (kx ** 2 + ky ** 2 - 1) * np.pi
                                            * np.exp(-(kx ** 2 + ky ** 2) / 4), R, N)
    out = sphere_division(F, 1.0)
    assert np.max(np.abs(out.values - gauss.values)) <= 1e-10
    assert decay_rate(out) == pytest.approx(1.0, rel=1e-2)


@pytest.mark.parametrize("seed", [0, 1])
@pytest.mark.parametrize("lam", [0.7, 1.5])
def test_division_inverts_helmholtz(seed, lam):
    g = gaussian_class_function(seed, 1.0, R, N)
    out = sphere_division(complex_fourier(helmholtz_image(g, lam)), lam)
    assert np.max(np.abs(out.values - g.values)) <= 1e-5 * np.max(np.abs(g.values))
    assert decay_rate(out) >= 0.9


def test_division_rejects_nonvanishing(gauss):
    with pytest.raises(SphereDivisionError):
        sphere_division(complex_fourier(gauss), 1.0)


def test_decay_rate_of_shifted_gaussian():
    g = Field.from_function(lambda z: (1 + z) * np.exp(-2.0 * np.abs(z - 0.5 + 0.3j) ** 2), R, N)
    assert decay_rate(g) == pytest.approx(2.0, rel=0.05)


def test_contour_shift_matches_direct():
    f = helmholtz_image(gaussian_class_function(4, 1.0, R, N), 1.0)
    checks = contour_shift_check(f, 1.0, 1.0, [0.5, 0.3 + 0.7j, -1 + 0.2j, 1.2j, -0.8 - 0.8j])
    assert max(c.rel_error for c in checks) <= 1e-4


def test_contour_shift_needs_nonzero_point():
    f = helmholtz_image(gaussian_class_function(0, 1.0, R, 129), 1.0)
    with pytest.raises(ValueError):
        contour_shift_check(f, 1.0, 1.0, [0.0])
