"""Pointwise identification of ``V1 - V2`` at critical points by stationary phase.

With ``u1 = e^{Phi/h}(a + ...)`` and ``u2 = e^{-Phi/h}(a + ...)`` one has
``u1 conj(u2) = e^{2i psi/h}|a|^2 + ...`` and

    I(h) = int e^{2i psi/h} |a|^2 W e^{2 sigma} dA = C h W(p) + o(h),
    C = pi |a(p)|^2 e^{2 sigma(p)} / |Phi''(p)|.

The plane chart carries the flat metric, so ``sigma = 0`` unless a conformal
factor is supplied.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cgo import CutoffRadii, assemble_cgo, build_b, slope
from .geometry import RationalFunction, SurfaceModel, _smoothstep
from .phase import MorsePhase, PhaseConstructionError, construct_amplitude, construct_phase

log = logging.getLogger(__name__)


def _support_radius(W: Callable, p: complex, tol: float, r_max: float = 20.0) -> float:
    """Smallest radius around ``p`` beyond which ``|W|`` stays below ``tol`` times its peak."""
    th = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    rs = np.linspace(0, r_max, 801)
    vals = np.abs(W(p + rs[:, None] * np.exp(1j * th[None, :])))
    peak = float(np.max(vals))
    if peak == 0:
        return 0.0
    big = np.nonzero(np.max(vals, axis=1) > tol * peak)[0]
    return float(rs[min(big[-1] + 1, rs.size - 1)])


def stationary_phase_pairing(W: Callable, phase: MorsePhase, a: RationalFunction, h: float,
                             sigma: Callable | None = None, tol: float = 1e-13,
                             points_per_wave: float = 4.0, chunk: int = 512) -> complex:
    """Trapezoid quadrature of ``int e^{2i psi/h} |a|^2 W e^{2 sigma} dA`` on a disk around ``p``.

    The disk is where ``|W|`` exceeds ``tol`` of its peak, kept inside the
    distance to the nearest finite puncture; the spacing resolves the local
    frequency ``2|Phi'|/h`` there.
    """
    p = phase.center
    rho = _support_radius(lambda z: W(z) * np.abs(a(z)) ** 2, p, tol)
    if rho == 0:
        return 0j
    rho = min(rho, 0.95 * phase.model.distance_to_punctures(p))
    # aliasing only matters where the integrand is not negligible
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    rr = np.linspace(0, rho, 128)
    ring = p + rr[:, None] * np.exp(1j * th[None, :])
    amp = np.abs(W(ring)) * np.abs(a(ring)) ** 2
    live = amp > 1e-10 * np.max(amp)
    kmax = 2.0 * float(np.max(np.abs(phase.derivative(ring[live])))) / h
    d = 2 * math.pi / (points_per_wave * max(kmax, 1e-12))
    d = min(d, rho / 16)
    m = int(math.ceil(rho / d))
    if m > 20000:
        raise ValueError(f"quadrature would need {2 * m + 1} points per axis; increase h")
    t = np.arange(-m, m + 1) * d
    total = 0j
    for i in range(0, t.size, chunk):
        z = p + t[i:i + chunk, None] + 1j * t[None, :]
        inside = np.abs(z - p) <= rho
        zi = z[inside]
        g = np.exp(2j * np.imag(phase.phi(zi)) / h) * np.abs(a(zi)) ** 2 * W(zi)
        if sigma is not None:
            g = g * np.exp(2 * sigma(zi))
        total += complex(np.sum(g))
    return total * d * d


def saddle_constant(phase: MorsePhase, a: RationalFunction, sigma: Callable | None = None) -> float:
    p = phase.center
    s = float(np.real(sigma(np.array([p]))[0])) if sigma is not None else 0.0
    hess = abs(complex(phase.hessian_at(p)))
    if hess == 0:
        raise ValueError("degenerate critical point")
    return math.pi * abs(complex(a(p))) ** 2 * math.exp(2 * s) / hess


def richardson(hs: Sequence[float], values: Sequence[complex]) -> complex:
    """Value at ``h = 0`` of the polynomial in ``h`` through all samples."""
    hs = np.asarray(hs, float)
    A = np.vander(hs, len(hs), increasing=True)
    return complex(np.linalg.solve(A, np.asarray(values, complex))[0])


@dataclass
class ConstantCheck:
    oracle: float
    formula: float
    rel_diff: float
    flagged: bool


def stationary_phase_constant(phase: MorsePhase, a: RationalFunction, sigma: Callable | None = None,
                              hs: Sequence[float] = (0.08, 0.04, 0.02, 0.01), width: float | None = None,
                              tol: float = 0.01) -> ConstantCheck:
    """Brute-force ``C`` from a reference Gaussian against the saddle formula."""
    p = phase.center
    dist = [abs(q - p) for q in phase.other_critical_points] + [phase.model.distance_to_punctures(p)]
    rc = min(0.85 * min(dist), 4.0)
    if width is None:
        width = min(0.5, rc / 2)

    def G(z):
        r = np.abs(z - p)
        # smooth cutoff keeps the oscillation near poles out of the quadrature
        return np.exp(-r ** 2 / width ** 2) * (1.0 - _smoothstep((r - 0.55 * rc) / (0.45 * rc)))

    ratios = [stationary_phase_pairing(G, phase, a, h, sigma) / h for h in hs]
    oracle = richardson(hs, ratios)
    formula = saddle_constant(phase, a, sigma)
    rel = abs(oracle - formula) / abs(formula)
    if rel > tol:
        log.warning("stationary phase constant: oracle %.6g vs formula %.6g", abs(oracle), formula)
    return ConstantCheck(float(oracle.real), formula, float(rel), bool(rel > tol))


@dataclass
class IdentificationReport:
    p: complex
    h_values: list
    pairings: list
    constant: float
    estimate: complex
    truth: complex
    rel_error: float
    cross_terms: list = field(default_factory=list)
    cross_slope: float = float("nan")
    main_slope: float = float("nan")
    constant_check: ConstantCheck | None = None


def _snap(p: complex, model: SurfaceModel, j: int, seed: int) -> tuple[complex, MorsePhase]:
    try:
        return p, construct_phase(p, model, j, seed=seed)
    except (PhaseConstructionError, ValueError):
        pass
    for k in range(1, 41):
        q = p + 1e-3 * k * np.exp(2j * np.pi * 0.381966 * k)
        try:
            return complex(q), construct_phase(q, model, j, seed=seed)
        except (PhaseConstructionError, ValueError):
            continue
    raise PhaseConstructionError(f"no constructible probe point near {p}")


def pointwise_difference(V1: Callable, V2: Callable, p: complex, model: SurfaceModel | None = None,
                         j: int = 2, h_list: Sequence[float] = (0.16, 0.08, 0.04, 0.02),
                         lam: float = 1.0, amplitude: RationalFunction | None = None, seed: int = 0,
                         cross_terms: bool = False, check_constant: bool = False,
                         cross_window: float = 4.0, cross_n: int = 257) -> IdentificationReport:
    """Richardson-extrapolated ``I(h)/(C h)`` as an estimate of ``(V1 - V2)(p)``."""
    model = model or SurfaceModel()
    p, phase = _snap(complex(p), model, j, seed)
    a = amplitude if amplitude is not None else construct_amplitude(p, phase.other_critical_points, 3)
    W = lambda z: V1(z) - V2(z)
    C = saddle_constant(phase, a)
    pair = [stationary_phase_pairing(W, phase, a, h) for h in h_list]
    est = richardson(h_list, [I / (C * h) for I, h in zip(pair, h_list)])
    truth = complex(W(np.array([p]))[0])
    scale = max(abs(truth), 1e-12)
    rep = IdentificationReport(p, list(h_list), pair, C, est, truth, abs(est - truth) / scale)
    if check_constant:
        rep.constant_check = stationary_phase_constant(phase, a, hs=h_list)
    if cross_terms:
        rep.cross_terms = cross_term_integrals(phase, a, V1, V2, lam, h_list, cross_window, cross_n)
        hs = np.asarray(h_list)
        rep.cross_slope = slope(hs, [abs(h * x) for h, x in zip(hs, rep.cross_terms)])
        rep.main_slope = slope(hs, [abs(x) for x in pair])
    return rep


def cross_term_integrals(phase: MorsePhase, a: RationalFunction, V1: Callable, V2: Callable, lam: float,
                         h_list: Sequence[float], R: float = 4.0, n: int = 257) -> list:
    """``int e^{2i psi/h}(conj(a) rt1 + a conj(rt2)) W dA`` with ``rt_i = b_i / Phi'``.

    ``b_1`` is built for ``(Phi, V1)`` and ``b_2`` for ``(-Phi, V2)``; both vanish
    at ``p`` so the quotients stay bounded.
    """
    b1, _, _ = build_b(a, V1, lam, phase, R, n)
    b2, _, _ = build_b(a, V2, lam, phase.negated(), R, n)
    W = lambda z: V1(z) - V2(z)
    z = b1.z
    dphi = phase.derivative(z)
    small = np.abs(dphi) < 1e-12
    safe = np.where(small, 1.0, dphi)
    rt1 = np.where(small, 0.0, b1.values / safe)
    rt2 = np.where(small, 0.0, b2.values / -safe)
    g = (np.conj(a(z)) * rt1 + a(z) * np.conj(rt2)) * W(z)
    return [_oscillatory_on_window(g, z, phase, h, b1.spacing) for h in h_list]


def _refine_periodic(g: np.ndarray, m: int) -> np.ndarray:
    """Trigonometric interpolation of an odd-sized periodic sample array onto ``m`` points per axis."""
    n = g.shape[0]
    G = np.fft.fft2(g)
    k = n // 2
    pad = np.zeros((m, m), complex)
    for src, dst in ((slice(0, k + 1), slice(0, k + 1)), (slice(n - k, n), slice(m - k, m))):
        for src2, dst2 in ((slice(0, k + 1), slice(0, k + 1)), (slice(n - k, n), slice(m - k, m))):
            pad[dst, dst2] = G[src, src2]
    return np.fft.ifft2(pad) * (m * m) / (n * n)


def _oscillatory_on_window(g: np.ndarray, z: np.ndarray, phase: MorsePhase, h: float, d: float,
                           points_per_wave: float = 4.0) -> complex:
    """Sum of ``e^{2i psi/h} g`` over the window, refining ``g`` until the phase is resolved.

    ``g`` must be negligible at the window edge so that it is effectively periodic.
    """
    n = z.shape[0]
    R = float(np.max(np.abs(z.real)))
    live = np.abs(g) > 1e-14 * np.max(np.abs(g))
    kmax = 2.0 * float(np.max(np.abs(phase.derivative(z[live])))) / h
    period = 2 * R + d
    m = int(math.ceil(period * points_per_wave * kmax / (2 * math.pi)))
    if m <= n:
        return complex(np.sum(np.exp(2j * np.imag(phase.phi(z)) / h) * g) * d * d)
    m += (m % 2 == 0)
    dd = period / m
    t = -R + np.arange(m) * dd
    zz = t[:, None] + 1j * t[None, :]
    gf = _refine_periodic(g, m)
    return complex(np.sum(np.exp(2j * np.imag(phase.phi(zz)) / h) * gf) * dd * dd)


def write_probe_csv(path, reports: Sequence[IdentificationReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["px", "py", "re_est", "im_est", "truth", "relErr"])
        for r in reports:
            w.writerow([f"{r.p.real:.12e}", f"{r.p.imag:.12e}", f"{r.estimate.real:.12e}",
                        f"{r.estimate.imag:.12e}", f"{r.truth.real:.12e}", f"{r.rel_error:.12e}"])


@dataclass
class UniquenessReport:
    s_difference: float
    identity: list  # (m1, m2, lhs, rhs)
    cgo_pairings: list  # (h, integral, predicted)
    probes: list
    lam: float

    @property
    def identity_max_error(self) -> float:
        scale = max([max(abs(l), abs(r)) for _, _, l, r in self.identity] + [1e-300])
        return max(abs(l - r) for _, _, l, r in self.identity) / scale

    @property
    def probe_max_error(self) -> float:
        return max(r.rel_error for r in self.probes) if self.probes else float("nan")


def cgo_pairing(V1: Callable, V2: Callable, phase: MorsePhase, a: RationalFunction, lam: float, h: float,
                R: float = 2.0, cutoff_scale: float = 0.5) -> tuple[complex, complex]:
    """``int T (V1 - V2) u1 conj(u2)`` with CGO solutions for ``(Phi, V1)`` and ``(-Phi, V2)``.

    ``u1 conj(u2) = e^{2i psi/h} A1 conj(A2)`` with the amplitude fields ``A_i``,
    so no exponential growth is formed. Both potentials are cut off smoothly
    to a disk around ``p`` inside the window, which keeps the integrand smooth
    and compactly supported. Returns ``(integral, C h W(p))``.
    """
    cut = CutoffRadii().scaled(cutoff_scale)
    c = phase.center

    def local(V):
        # restrict to a disk around p so the potentials fit the CGO window
        return lambda z: V(z) * (1.0 - _smoothstep((np.abs(z - c) - 0.45 * R) / (0.3 * R)))

    L1, L2 = local(V1), local(V2)
    s1 = assemble_cgo(phase, a, L1, lam, h, R, cutoffs=cut)
    s2 = assemble_cgo(phase.negated(), a, L2, lam, h, R, n=s1.b.n, cutoffs=cut)
    z = s1.b.z
    W = L1(z) - L2(z)
    g = (W * np.exp(2j * np.imag(phase.phi(z)) / h)
         * s1.amplitude_field().values * np.conj(s2.amplitude_field().values))
    integral = s1.b.like(g).integral()
    pred = saddle_constant(phase, a) * h * complex(V1(np.array([phase.center]))[0] - V2(np.array([phase.center]))[0])
    return integral, pred


def uniqueness_chain(V1: Callable, V2: Callable, lam: float, probe_points: Sequence[complex],
                     m_max: int = 4, identity_modes: int = 2, h_cgo: Sequence[float] = (0.1, 0.05),
                     h_probe: Sequence[float] = (0.16, 0.08, 0.04, 0.02), scattering_kw: dict | None = None,
                     V2_is_zero: bool = False) -> UniquenessReport:
    """S-matrices, the scattering-difference identity, CGO pairings and a probe map, in that order."""
    from .scattering import ScatteringProblem, mode_vector, scattering_difference_identity

    kw = dict(scattering_kw or {})
    p1 = ScatteringProblem(V1, lam, m_max, **kw)
    p2 = ScatteringProblem(None if V2_is_zero else V2, lam, m_max, **kw)
    S1, S2 = p1.s_matrix().entries, p2.s_matrix().entries
    ident = []
    for m1 in range(-identity_modes, identity_modes + 1):
        for m2 in range(-identity_modes, identity_modes + 1):
            lhs, rhs = scattering_difference_identity(p1, p2, mode_vector(m_max, {m1: 1.0}),
                                                      mode_vector(m_max, {m2: 1.0}))
            ident.append((m1, m2, lhs, rhs))
    pairings = []
    if probe_points:
        p0, phase = _snap(complex(probe_points[0]), SurfaceModel(), 2, 0)
        a = RationalFunction.constant(1.0)
        for h in h_cgo:
            I, pred = cgo_pairing(V1, V2, phase, a, lam, h)
            pairings.append((h, I, pred))
    probes = [pointwise_difference(V1, V2, p, h_list=h_probe) for p in probe_points]
    return UniquenessReport(float(np.linalg.norm(S1 - S2, 2)), ident, pairings, probes, lam)
