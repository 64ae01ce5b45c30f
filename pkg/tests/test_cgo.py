import numpy as np
import pytest

from cgoscatter.cgo import (CgoError, CutoffRadii, assemble_cgo, build_b, build_r11, build_r12, choose_grid,
                            conjugation_identity_error, radial_cutoff, slope)
from cgoscatter.fieldops import Field, ddz, evaluate_spectral
from cgoscatter.geometry import RationalFunction, SurfaceModel
from cgoscatter.phase import construct_amplitude, construct_phase
from cgoscatter.potentials import GaussianBump


@pytest.fixture(scope="module")
def quad():
    return construct_phase(0.0, SurfaceModel(), 2)


@pytest.fixture(scope="module")
def linear():
    return construct_phase(0.0, SurfaceModel((1.0,)), 1)


def test_b_vanishes_without_potential_and_energy(quad):
    b, omega, _ = build_b(RationalFunction.constant(1.0), None, 0.0, quad, 2.0, 65)
    assert np.all(b.values == 0)
    assert omega(0.7) == 0


def test_b_vanishes_at_center(quad):
    V = GaussianBump(1.0, 0.3 + 0.2j, 0.5)
    b, _, _ = build_b(RationalFunction.constant(1.0), V, 1.0, quad, 3.0, 257)
    assert abs(evaluate_spectral(b, [0.0])[0]) < 1e-8


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_b_jets_vanish_at_critical_points(linear, lam):
    a = construct_amplitude(0.0, linear.other_critical_points, 3)
    V = GaussianBump(1.0, 0.5 + 0.3j, 0.8)
    b, _, _ = build_b(a, V, lam, linear, 5.0, 513)
    rs = np.geomspace(0.02, 0.2, 8)
    th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    for q, want in ((linear.other_critical_points[0], 2.9), (0.0, 0.95)):
        m = [np.max(np.abs(evaluate_spectral(b, q + r * np.exp(1j * th)))) for r in rs]
        assert np.polyfit(np.log(rs), np.log(m), 1)[0] >= want


def test_r12_is_exact_quotient(quad):
    V = GaussianBump(1.0, 0.3, 0.5)
    b, _, _ = build_b(RationalFunction.constant(1.0), V, 1.0, quad, 3.0, 129)
    z = b.z
    chi1 = radial_cutoff(z, 0.0, 0.25, 0.5)
    dphi = quad.derivative(z)
    r12 = build_r12(b, dphi, chi1)
    assert np.allclose(dphi * r12.values, (1 - chi1) * b.values, atol=1e-13)


def test_r12_blowup_detected():
    b = Field.from_function(lambda z: 1 + 0 * z, 1.0, 33)
    with pytest.raises(CgoError):
        build_r12(b, b.z, None, blowup=10.0)


def test_r11_solves_its_transport_equation(quad):
    R, n, h = 2.0, 385, 0.1
    V = GaussianBump(1.0, 0.2 + 0.1j, 0.5)
    b, _, _ = build_b(RationalFunction.constant(1.0), V, 1.0, quad, R, n)
    cut = CutoffRadii().scaled(0.5)
    z = b.z
    E = np.exp(2j * np.imag(quad.phi(z)) / h)
    chi = radial_cutoff(z, 0.0, cut.r_in, cut.r_out)
    chi1 = radial_cutoff(z, 0.0, cut.r1_in, cut.r1_out)
    r11, eta = build_r11(b, E, chi, chi1)
    lhs = ddz(b.like(E * r11.values), taper=False).values / E
    rhs = eta.values + chi1 * b.values
    m = np.abs(z) < cut.r_out + 0.2
    assert np.linalg.norm((lhs - rhs)[m]) <= 1e-4 * np.linalg.norm(rhs[m])


@pytest.mark.parametrize("h,seed", [(0.2, 0), (0.1, 1), (0.05, 2), (0.025, 3)])
def test_conjugation_identity(quad, h, seed):
    # width tied to h keeps e^{Phi/h} w decaying inside the window
    rng = np.random.default_rng(seed)
    c = complex(*rng.uniform(-0.5, 0.5, 2))
    co = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = Field.from_function(lambda z: np.exp(-np.abs(z - c) ** 2 / (h / 2)) * (co[0] + co[1] * z + co[2] * z * z),
                            2.0, choose_grid(2.0, h, quad))
    assert conjugation_identity_error(w, quad, h) <= 1e-4


def test_trivial_cgo_has_no_correction(quad):
    sol = assemble_cgo(quad, RationalFunction.constant(1.0), None, 0.0, 0.1, 2.0, 129,
                       cutoffs=CutoffRadii().scaled(0.5))
    assert np.all(sol.r1.values == 0)
    assert np.all(sol.r2.values == 0)
    assert sol.norms["pde_residual"] == 0


def test_cgo_small_sweep(quad):
    V = GaussianBump(1.0, 0.2 + 0.1j, 0.5)
    hs = [0.1, 0.05]
    sols = [assemble_cgo(quad, RationalFunction.constant(1.0), V, 1.0, h, 2.0, choose_grid(2.0, h, quad, 4.0),
                         cutoffs=CutoffRadii().scaled(0.5)) for h in hs]
    for s in sols:
        assert s.norms["pde_residual_rel"] < 1e-2
        assert s.norms["gmres_iterations"] < 200
    assert slope(hs, [s.norms["xJ_r1"] for s in sols]) > 0.8
    u = sols[-1].solution()
    assert np.all(np.isfinite(u.values))


def test_slope_helper():
    hs = np.array([0.1, 0.05, 0.025])
    assert slope(hs, 3 * hs ** 2) == pytest.approx(2.0)
    assert slope(hs, hs * np.abs(np.log(hs)), log_divide=True) == pytest.approx(1.0)
