import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgoscatter.geometry import RationalFunction, SurfaceModel, basis_of_space
from cgoscatter.phase import (construct_amplitude, construct_phase, critical_points,
                              hermite_match, taylor_match)


def _pts(crit):
    return sorted((complex(c), m) for c, m in crit)


def test_critical_points_examples():
    assert _pts(critical_points(RationalFunction.monomial(2, 0.5))) == [(0.5, 1)]
    cp = critical_points(RationalFunction.from_roots(zeros=[0, 0], poles=[1]))
    got = sorted(cp, key=lambda t: t[0].real)
    assert got[0][0] == pytest.approx(0, abs=1e-10) and got[1][0] == pytest.approx(2, abs=1e-10)
    assert [m for _, m in got] == [1, 1]
    cp = critical_points(RationalFunction.monomial(3))
    assert len(cp) == 1 and cp[0][1] == 2 and abs(cp[0][0]) < 1e-5


def test_construct_phase_plane():
    ph = construct_phase(0, SurfaceModel(), 2, seed=0)
    assert ph.phi(1.7) == pytest.approx(1.7 ** 2)
    assert len(ph.critical_points) == 1 and ph.hessians[0] == pytest.approx(2)
    assert ph.is_morse()


def test_construct_phase_linear_growth_two_critical_points():
    ph = construct_phase(0, SurfaceModel((1.0,)), 1, seed=0)
    assert ph.phi(0.3) == pytest.approx(0.09 / (0.3 - 1))
    pts = sorted(c.real for c, _ in ph.critical_points)
    assert pts == pytest.approx([0, 2], abs=1e-10)
    assert ph.other_critical_points[0] == pytest.approx(2)
    assert all(abs(h) > 1e-3 for h in ph.hessians)


def test_degenerate_candidate_is_perturbed_into_morse():
    model = SurfaceModel((2.0,))
    ph = construct_phase(0, model, 1, seed=7, max_retries=10,
                         candidate=RationalFunction.constant(1.0))
    assert ph.is_morse()
    assert abs(ph.derivative(0)) < 1e-10
    # stays in the growth space: pole order at most one at 2 and at infinity
    assert ph.phi.den_degree <= 1 and ph.phi.num_degree <= ph.phi.den_degree + 1


def test_construct_phase_rejects_puncture():
    with pytest.raises(ValueError):
        construct_phase(1.0, SurfaceModel((1.0,)), 1)


def test_phase_in_span_of_basis():
    model = SurfaceModel((1.0, -1j))
    ph = construct_phase(0.2 + 0.1j, model, 1, seed=3)
    basis = basis_of_space(model.punctures, 1)
    zs = np.random.default_rng(0).normal(size=12) + 1j * np.random.default_rng(1).normal(size=12)
    A = np.array([[f(z) for f in basis] for z in zs])
    coef, *_ = np.linalg.lstsq(A, ph.phi(zs), rcond=None)
    assert np.linalg.norm(A @ coef - ph.phi(zs)) < 1e-9 * np.linalg.norm(ph.phi(zs))


def test_real_part_is_harmonic():
    ph = construct_phase(0, SurfaceModel((1.0,)), 1, seed=0)
    h = 1e-3
    z = np.array([0.4 + 0.7j, -1.3 + 0.2j, 2.5 - 1j])
    f = lambda w: ph.real(w)
    lap = (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h ** 2
    assert np.max(np.abs(lap)) < 1e-4


@pytest.mark.parametrize("j,punct", [(2, ()), (1, (1.0,))])
def test_phase_growth(j, punct):
    ph = construct_phase(0.1, SurfaceModel(punct), j)
    vals = []
    for R in (20.0, 40.0, 80.0, 160.0):
        th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        vals.append(np.max(np.abs(ph.phi(R * np.exp(1j * th)))) / R ** j)
    assert max(vals) / min(vals) < 1.5


def test_amplitude_examples():
    a = construct_amplitude(0, [2], 3)
    assert a(0) == pytest.approx(-8)
    assert construct_amplitude(0, [], 3)(5.0) == pytest.approx(1)
    a = construct_amplitude(0, [2, -1], 2)
    t = a.taylor(2, 2)
    assert abs(t[0]) < 1e-12 and abs(t[1]) < 1e-10 and abs(t[2]) > 1
    with pytest.raises(ValueError):
        construct_amplitude(0, [0], 1)


def test_taylor_match_examples():
    f = taylor_match([5.0], 0.0)
    assert f(3.3) == pytest.approx(5)
    f = taylor_match([0.0, 1.0], 0.0, [3.0], L=1)
    assert abs(f(0)) < 1e-14 and f.derivative()(0) == pytest.approx(1) and abs(f(3)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=3),
       st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False))
def test_taylor_match_jet_property(jet, p0):
    zero = p0 + 1.5
    f = taylor_match(jet, p0, [zero], L=2)
    np.testing.assert_allclose(f.taylor(p0, len(jet) - 1), jet, atol=1e-9)
    assert np.max(np.abs(f.taylor(zero, 1))) < 1e-8 * max(1, f.coefficient_scale())


def test_hermite_match_several_points():
    jets = {0.0: [1.0], 2.0: [0.5, -1.0, 0.25], -1j: [2j, 0.0, 0.0]}
    f = hermite_match(jets)
    for p, jet in jets.items():
        np.testing.assert_allclose(f.taylor(p, len(jet) - 1), jet, atol=1e-9)
