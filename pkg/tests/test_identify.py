import numpy as np
import pytest

from cgoscatter.geometry import RationalFunction, SurfaceModel
from cgoscatter.identify import (cgo_pairing, pointwise_difference, richardson, saddle_constant,
                                 stationary_phase_constant, stationary_phase_pairing, uniqueness_chain,
                                 write_probe_csv)
from cgoscatter.phase import construct_amplitude, construct_phase
from cgoscatter.potentials import GaussianBump

ONE = RationalFunction.constant(1.0)
V1 = GaussianBump(1.0, 0.3 + 0.2j, 0.8)


def zero(z):
    return 0 * z


@pytest.fixture(scope="module")
def quad():
    return construct_phase(0.0, SurfaceModel(), 2)


@pytest.fixture(scope="module")
def pole():
    ph = construct_phase(0.0, SurfaceModel((1.0,)), 1)
    return ph, construct_amplitude(0.0, ph.other_critical_points, 3)


def test_zero_difference_pairs_to_zero(quad):
    assert stationary_phase_pairing(lambda z: 0 * z + 0j, quad, ONE, 0.1) == 0


def test_constant_of_quadratic_phase(quad):
    assert saddle_constant(quad, ONE) == pytest.approx(np.pi / 2, rel=1e-12)
    assert saddle_constant(quad, RationalFunction.constant(2.0)) == pytest.approx(2 * np.pi, rel=1e-12)


def test_constant_matches_oracle_quadratic(quad):
    chk = stationary_phase_constant(quad, ONE)
    assert chk.rel_diff <= 1e-3 and not chk.flagged


def test_constant_matches_oracle_with_pole(pole):
    ph, a = pole
    chk = stationary_phase_constant(ph, a)
    assert chk.rel_diff <= 1e-2 and not chk.flagged


def test_pairing_is_linear_in_w(quad):
    A, B = GaussianBump(1.0, 0.2, 0.6), GaussianBump(0.5j, -0.3j, 0.9)
    h = 0.1
    ia = stationary_phase_pairing(A, quad, ONE, h)
    ib = stationary_phase_pairing(B, quad, ONE, h)
    iab = stationary_phase_pairing(lambda z: 2 * A(z) - 3 * B(z), quad, ONE, h)
    assert iab == pytest.approx(2 * ia - 3 * ib, rel=1e-10)


def test_amplitude_vanishing_at_center_lowers_order(quad):
    a = RationalFunction.from_roots(zeros=[0.0])
    hs = np.array([0.1, 0.05, 0.025])
    I = [abs(stationary_phase_pairing(V1, quad, a, h)) for h in hs]
    assert np.polyfit(np.log(hs), np.log(I), 1)[0] > 1.5


def test_richardson_recovers_polynomial_limit():
    hs = [0.4, 0.2, 0.1, 0.05]
    vals = [2 - 1j + 3 * h - h ** 2 + 0.5j * h ** 3 for h in hs]
    assert richardson(hs, vals) == pytest.approx(2 - 1j, abs=1e-12)


def test_equal_potentials_give_zero_estimate():
    r = pointwise_difference(V1, V1, 0.2, h_list=(0.16, 0.08))
    assert r.estimate == 0


@pytest.mark.parametrize("p", [0.0, 0.7 - 0.4j])
def test_pointwise_estimate(p):
    r = pointwise_difference(V1, zero, p, h_list=(0.16, 0.08, 0.04))
    assert r.rel_error <= 5e-2


def test_cross_terms_decay_faster():
    r = pointwise_difference(V1, zero, 0.2, h_list=(0.2, 0.1, 0.05), cross_terms=True)
    assert r.cross_slope - r.main_slope >= 0.5


def test_cgo_pairing_approaches_prediction(quad):
    I, pred = cgo_pairing(V1, zero, quad, ONE, 1.0, 0.1)
    assert abs(I / pred - 1) <= 5e-2


def test_uniqueness_chain_and_csv(tmp_path):
    rep = uniqueness_chain(V1, zero, 1.0, [0.0], m_max=2, identity_modes=1, h_cgo=(0.1,),
                           h_probe=(0.16, 0.08, 0.04), V2_is_zero=True)
    assert rep.s_difference > 1e-2
    assert rep.identity_max_error <= 5e-2
    assert rep.probe_max_error <= 5e-2
    write_probe_csv(tmp_path / "p.csv", rep.probes)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "px,py,re_est,im_est,truth,relErr" and len(lines) == 2
