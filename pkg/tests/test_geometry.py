import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgoscatter.geometry import (INF, Divisor, RationalFunction, SurfaceModel, basis_for_divisor,
                                 basis_of_space, divisor_degree, principal_divisor,
                                 riemann_roch_dim)


def test_divisor_degree_examples():
    assert divisor_degree(Divisor({1: -1, 2: -1})) == -2
    f = RationalFunction.from_roots(zeros=[1], poles=[-1])
    assert divisor_degree(principal_divisor(f)) == 0
    assert divisor_degree(Divisor({INF: -2})) == -2


def test_principal_divisor_examples():
    assert principal_divisor(RationalFunction.monomial(2)) == Divisor({0: 2, INF: -2})
    p, e1 = 0.5 + 0.25j, 1.0
    f = RationalFunction.from_roots(zeros=[p, p], poles=[e1])
    D = principal_divisor(f)
    assert D[p] == 2 and D[e1] == -1 and D[INF] == -1
    assert len(principal_divisor(RationalFunction.constant(1.0))) == 0
    with pytest.raises(ValueError):
        principal_divisor(RationalFunction.constant(0.0))


def test_riemann_roch_examples():
    assert riemann_roch_dim(Divisor({INF: 2})) == 3
    assert riemann_roch_dim(Divisor({1: 1, 2j: 1})) == 3
    assert riemann_roch_dim(Divisor({0.3: 1})) == 2
    with pytest.raises(ValueError):
        riemann_roch_dim(Divisor({0: -2}))


def _max_pole_order(f, q):
    D = principal_divisor(f)
    return max(0, -D[q])


def test_basis_of_space_examples():
    b = basis_of_space([INF], 2)
    assert len(b) == 3
    assert all(f.is_polynomial() and f.num_degree <= 2 for f in b)
    b = basis_of_space([0, INF], 1)
    assert len(b) == 3
    assert {_max_pole_order(f, 0) for f in b} == {0, 1}
    b = basis_of_space([0, 1, INF], 1)
    assert len(b) == 4
    for f in b:
        for q in (0, 1, INF):
            assert _max_pole_order(f, q) <= 1
    with pytest.raises(ValueError):
        basis_of_space([INF], 1)


def _rank(funcs, pts):
    M = np.array([[f(z) for z in pts] for f in funcs])
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > 1e-9 * s[0]))


def test_twenty_seeded_divisors_dimension():
    rng = np.random.default_rng(1234)
    for _ in range(20):
        npts = rng.integers(1, 5)
        pts = [INF] + [complex(*rng.uniform(-2, 2, 2)) for _ in range(npts - 1)]
        exps = rng.integers(-2, 4, size=npts)
        if exps.sum() <= 0:
            exps[0] += 1 - exps.sum() + rng.integers(0, 3)
        D = Divisor(dict(zip(pts, exps)))
        assert D.degree > 0
        basis = basis_for_divisor(D)
        assert len(basis) == riemann_roch_dim(D) == D.degree + 1
        # independence checked by sampling
        sample = [complex(*rng.uniform(-3, 3, 2)) for _ in range(len(basis) + 5)]
        assert _rank(basis, sample) == len(basis)
        for f in basis:
            E = principal_divisor(f)
            for q, k in D:
                assert E[q] >= -k


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=0, max_size=3),
       st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=0, max_size=3))
def test_principal_divisor_has_degree_zero(zeros, poles):
    zeros = [z for z in zeros if all(abs(z - p) > 1e-2 for p in poles)]
    f = RationalFunction.from_roots(zeros=zeros, poles=poles)
    assert principal_divisor(f).degree == 0


@pytest.mark.parametrize("punct,j", [([INF], 2), ([0, INF], 1), ([1, -1j, INF], 1), ([2, INF], 2)])
def test_basis_growth_in_the_end(punct, j):
    for f in basis_of_space(punct, j):
        ratios = []
        for R in (50.0, 100.0, 200.0, 400.0):
            th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
            ratios.append(np.max(np.abs(f(R * np.exp(1j * th)))) / R ** j)
        assert ratios[-1] <= 1.05 * ratios[0] + 1e-12


def test_surface_model_metric_is_flat_away_from_punctures():
    m = SurfaceModel((1.0,))
    assert m.end_count == 2 and INF in m.punctures
    r_in, r_out = m.cutoff_radii()
    z = np.array([1 + 1.5 * r_out, 1 + 0.9 * r_in, -3.0])
    s = m.conformal_log(z)
    assert s[0] == 0.0 and s[2] == 0.0
    assert s[1] == pytest.approx(-2 * np.log(0.9 * r_in))
    assert SurfaceModel().conformal_log(np.array([0.3])) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        SurfaceModel((1.0, 1.0))
