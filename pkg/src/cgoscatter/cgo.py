"""Complex geometrical optics solutions ``u = e^{Phi/h}(a + r1 + r2)`` on the plane chart.

Conventions (flat metric, positive Laplacian ``Delta = -4 d_z d_zbar``):

* ``e^{-Phi/h} Delta e^{Phi/h} w = -4 d_zbar[e^{-2i psi/h} d_z(e^{2i psi/h} w)]``.
* ``c = -d_z G(a(V - lam^2)) = Rbar(aV)/4 - lam^2 conj(z) a/4`` solves
  ``d_zbar c = a(V - lam^2)/4``; the polynomial part is taken in closed form.
* ``b = c + omega`` with ``omega`` a polynomial cancelling the 2-jet of ``c``
  at the other critical points and its value at ``p``.
* ``r11 = chi e^{-2i psi/h} R(e^{2i psi/h} chi1 b)``, ``eta = e^{-2i psi/h} R(...) d_z chi``,
  ``r12 = (1 - chi1) b / Phi'``, ``r1 = r11 + h r12``.
* ``r2`` solves ``r2 + K(T q r2) = -K(T res)`` with ``q = V - lam^2``, ``T`` the
  window taper and ``K g = e^{-2i psi/h} R(T e^{2i psi/h}(-Rbar(T g)/4))`` a right
  inverse of the conjugated Laplacian on the taper core.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .fieldops import (Field, cauchy_transform, conj_cauchy_transform, ddz, ddzbar, evaluate_spectral,
                       gradient, phi0_radial, positive_laplacian, smooth_odd_size, x_function)
from .geometry import RationalFunction, _smoothstep
from .phase import MorsePhase, hermite_match

log = logging.getLogger(__name__)

JET_ORDER = 2


class CgoError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Cutoffs and grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffRadii:
    """``chi1 = 1`` on ``|z-p| <= r1_in``, supported in ``r1_out``; same for ``chi``."""

    r1_in: float = 0.5
    r1_out: float = 1.0
    r_in: float = 1.5
    r_out: float = 2.0

    def scaled(self, s: float) -> "CutoffRadii":
        return CutoffRadii(self.r1_in * s, self.r1_out * s, self.r_in * s, self.r_out * s)

    @classmethod
    def for_phase(cls, phase: MorsePhase, scale: float = 1.0) -> "CutoffRadii":
        """Default radii, shrunk when other critical points or punctures are within 4 units."""
        base = cls().scaled(scale)
        near = [abs(c - phase.center) for c in phase.other_critical_points]
        near += [phase.model.distance_to_punctures(phase.center)]
        dmin = min(near) if near else math.inf
        if dmin < 2 * base.r_out:
            base = base.scaled(0.5 * dmin / base.r_out)
        return base


def radial_cutoff(z, center: complex, r_in: float, r_out: float) -> np.ndarray:
    t = (np.abs(np.asarray(z) - center) - r_in) / (r_out - r_in)
    return 1.0 - _smoothstep(t)


def choose_grid(R: float, h: float, phase: MorsePhase, points_per_wave: float = 2.5,
                n_min: int = 129, n_max: int = 4097) -> int:
    """Odd sample count resolving ``e^{2i psi/h}`` over the window."""
    t = np.linspace(-R, R, 81)
    zz = t[:, None] + 1j * t[None, :]
    kmax = 2.0 * float(np.nanmax(np.abs(phase.derivative(zz)))) / h
    d = 2 * math.pi / (points_per_wave * kmax)
    n = smooth_odd_size(max(n_min, int(math.ceil(2 * R / d)) + 1))
    if n > n_max:
        log.warning("grid capped at n=%d (wanted %d)", n_max, n)
        n = smooth_odd_size(n_max - 2) if smooth_odd_size(n_max - 2) <= n_max else n_max
    return n


def weight_order(a: RationalFunction, omega: RationalFunction, lam: float, phase: MorsePhase) -> float:
    """Non-integer J with ``a`` in ``x^{-J+1}L^2`` and ``x^J r1`` square integrable."""
    deg_a = a.num_degree - a.den_degree
    deg_b = max(omega.num_degree - omega.den_degree, deg_a + 1 if lam else deg_a - 1)
    deg_dphi = phase.derivative.num_degree - phase.derivative.den_degree
    m_r1 = deg_b - deg_dphi
    return float(max(deg_a + 2, m_r1 + 1)) + 0.5


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def _jets_of_c(c_field: Field, aV: Field, a: RationalFunction, lam: float, pts, order: int):
    """Taylor coefficients ``d_z^k c(p)/k!`` of ``c = Rbar(aV)/4 - lam^2 conj(z) a/4``."""
    jets = {}
    for q in pts:
        coeffs = []
        at = a.taylor(q, order)
        for k in range(order + 1):
            val = evaluate_spectral(c_field, [q], dz_order=k)[0] / math.factorial(k)
            val -= lam * lam * np.conj(q) * at[k] / 4.0
            coeffs.append(complex(val))
        jets[q] = coeffs
    return jets


def build_b(a: RationalFunction, V: Callable | None, lam: float, phase: MorsePhase, R: float, n: int,
            match_center: bool = True, jet_order: int = JET_ORDER):
    """Return ``(b, omega, c_jets)``; ``b`` and ``c`` as fields on the window.

    ``omega`` cancels the ``jet_order``-jet of ``c`` at each other critical point
    and, when ``match_center``, the value of ``c`` at ``p`` so that ``b(p) = 0``.
    """
    z = Field.zeros(R, n).z
    aV = Field(R, n, a(z) * V(z)) if V is not None else Field.zeros(R, n)
    if np.any(aV.values != 0):
        rb = conj_cauchy_transform(aV)
    else:
        rb = Field.zeros(R, n)
    c_smooth = 0.25 * rb  # holomorphic-jet carrier, lam part handled analytically
    c_vals = c_smooth.values - lam * lam * np.conj(z) * a(z) / 4.0
    others = phase.other_critical_points
    targets = {q: None for q in others}
    if match_center:
        targets[phase.center] = None
    jets = {}
    if targets:
        jets = _jets_of_c(c_smooth, aV, a, lam, list(targets), jet_order)
        if match_center:
            jets[phase.center] = jets[phase.center][:1]
    if any(np.any(np.abs(v) > 0) for v in jets.values()):
        omega = -1.0 * hermite_match(jets)
    else:
        omega = RationalFunction.constant(0.0)
    b = Field(R, n, c_vals + omega(z))
    return b, omega, jets


def build_r11(b: Field, E: np.ndarray, chi: np.ndarray, chi1: np.ndarray, support: float | None = None):
    """``r11 = chi E^{-1} R(E chi1 b)`` and ``eta = E^{-1} R(E chi1 b) d_z chi`` with ``E = e^{2i psi/h}``."""
    src = b.like(E * chi1 * b.values)
    if not np.any(src.values):
        zero = b.like(np.zeros_like(b.values))
        return zero, zero
    Rf = cauchy_transform(src, support=support, tail_tol=None).values
    inner = Rf / E
    dchi = ddz(b.like(chi), taper=False).values
    return b.like(chi * inner), b.like(inner * dchi)


def build_r12(b: Field, dphi: np.ndarray, chi1: np.ndarray | None = None, blowup: float = 1e8) -> Field:
    """``(1 - chi1) b / Phi'`` with the removable singularities at critical points filled by 0."""
    num = b.values if chi1 is None else (1.0 - chi1) * b.values
    small = np.abs(dphi) < 1e-12 * max(1.0, np.max(np.abs(dphi)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 0.0, num / np.where(small, 1.0, dphi))
    scale = max(np.max(np.abs(b.values)), 1e-300)
    if np.max(np.abs(out)) > blowup * scale:
        raise CgoError("r12 quotient blows up: b does not vanish at a critical point")
    return b.like(out)


def conjugated_laplacian(w: Field, E: np.ndarray) -> Field:
    """``-4 d_zbar[E^{-1} d_z(E w)]`` evaluated spectrally (no taper on the outer step)."""
    inner = ddz(w.like(E * w.values)).values / E
    return -4.0 * ddzbar(w.like(inner), taper=False)


def _apply_K(g: np.ndarray, R: float, n: int, E: np.ndarray, T: np.ndarray) -> np.ndarray:
    F = Field(R, n, T * g)
    s = -0.25 * conj_cauchy_transform(F, tail_tol=None).values
    t = cauchy_transform(Field(R, n, T * E * s), tail_tol=None).values
    return t / E


def build_r2(res: Field, q: np.ndarray, E: np.ndarray, tol: float = 1e-10, maxiter: int = 200):
    """Solve ``r2 + K(T q r2) = -K(T res)`` by GMRES; returns ``(r2, info)``."""
    R, n = res.R, res.n
    T = np.asarray(res.taper)
    rhs = -_apply_K(res.values, R, n, E, T).ravel()
    if not np.any(rhs):
        return res.like(np.zeros((n, n), complex)), dict(iterations=0, residual=0.0)

    def mv(x):
        x = x.reshape(n, n)
        return (x + _apply_K(q * x, R, n, E, T)).ravel()

    A = LinearOperator((n * n, n * n), matvec=mv, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(A, rhs, rtol=tol, atol=0.0, restart=40, maxiter=maxiter, callback=cb,
                    callback_type="pr_norm")
    if info != 0:
        raise CgoError(f"GMRES did not converge (info={info})")
    rel = float(np.linalg.norm(mv(x) - rhs) / np.linalg.norm(rhs))
    return res.like(x.reshape(n, n)), dict(iterations=count[0], residual=rel)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


@dataclass
class CgoSolution:
    h: float
    phase: MorsePhase
    a: RationalFunction
    omega: RationalFunction
    b: Field
    r11: Field
    r12: Field
    r12_tilde: Field
    eta: Field
    r2: Field | None
    chi: np.ndarray
    chi1: np.ndarray
    J: float
    lam: float
    eps: float
    norms: dict = field(default_factory=dict)
    residual: Field | None = None

    @property
    def r1(self) -> Field:
        return self.r11 + self.h * self.r12

    def amplitude_field(self) -> Field:
        """``a + r1 + r2`` (the factor multiplying ``e^{Phi/h}``)."""
        out = self.a(self.b.z) + self.r1.values
        if self.r2 is not None:
            out = out + self.r2.values
        return self.b.like(out)

    def solution(self) -> Field:
        """``u`` itself; only meaningful where ``Re Phi/h`` stays moderate."""
        return self.b.like(np.exp(self.phase.phi(self.b.z) / self.h) * self.amplitude_field().values)


def _l2(v: np.ndarray, d: float, mask: np.ndarray | None = None) -> float:
    w = np.ones(v.shape[0])
    w[0] = w[-1] = 0.5
    a = np.abs(v) ** 2
    if mask is not None:
        a = np.where(mask, a, 0.0)
    return float(math.sqrt(d * d * np.einsum("i,ij,j->", w, a, w)))


def assemble_cgo(phase: MorsePhase, a: RationalFunction, V: Callable | None, lam: float, h: float,
                 R: float, n: int | None = None, eps: float = 0.1, cutoffs: CutoffRadii | None = None,
                 J: float | None = None, with_r2: bool = True, gmres_tol: float = 1e-10) -> CgoSolution:
    """Build every piece for one ``h`` and record the norms checked by the h-sweeps."""
    if n is None:
        n = choose_grid(R, h, phase)
    cut = cutoffs or CutoffRadii.for_phase(phase)
    p = phase.center
    b, omega, _ = build_b(a, V, lam, phase, R, n)
    z = b.z
    Phi = phase.phi(z)
    E = np.exp(2j * np.imag(Phi) / h)
    dphi = phase.derivative(z)
    chi = radial_cutoff(z, p, cut.r_in, cut.r_out)
    chi1 = radial_cutoff(z, p, cut.r1_in, cut.r1_out)
    r11, eta = build_r11(b, E, chi, chi1, support=abs(p) + cut.r1_out)
    r12 = build_r12(b, dphi, chi1)
    r12t = build_r12(b, dphi, None, blowup=math.inf)
    if J is None:
        J = weight_order(a, omega, lam, phase)
    Vz = V(z) if V is not None else np.zeros(z.shape)
    q = Vz - lam * lam
    r1 = r11 + h * r12
    # conjugated residual of a + r1
    res = (-4.0 * ddzbar(eta).values - 4.0 * h * ddzbar(ddz(r12), taper=False).values
           + q * r1.values)
    res_f = b.like(res)
    xJ = x_function(z) ** J
    core = b.interior_mask()
    d = b.spacing
    gx, gy = gradient(eta)
    norms = dict(
        xJ_r1=_l2(xJ * r1.values, d, core),
        xJ_r1_minus_h_r12t=_l2(xJ * (r1.values - h * r12t.values), d, core),
        eta_H1=math.sqrt(_l2(eta.values, d) ** 2 + _l2(gx.values, d) ** 2 + _l2(gy.values, d) ** 2),
        eta_H2_proxy=_l2(ddzbar(ddz(eta), taper=False).values, d),
        conj_residual=_l2(xJ * res, d, core),
        J=J, n=n, R=R,
    )
    r2 = None
    if with_r2:
        r2, info = build_r2(res_f, q, E, tol=gmres_tol)
        w0 = np.exp(-np.abs(z) ** 2 / (4 * eps)) if phase.growth_class == 2 else None
        if w0 is None:
            w0 = np.exp(phi0_radial(np.abs(z), 1, 0.5) / eps)
        norms["weighted_r2"] = _l2(w0 * r2.values, d, core)
        norms["gmres_iterations"] = info["iterations"]
        full = res + conjugated_laplacian(r2, E).values + q * r2.values
        amp = a(z) + r1.values + r2.values
        norms["pde_residual"] = _l2(xJ * full, d, core)
        norms["pde_residual_rel"] = norms["pde_residual"] / _l2(xJ * amp, d, core)
    sol = CgoSolution(h, phase, a, omega, b, r11, r12, r12t, eta, r2, chi, chi1, J, lam, eps, norms, res_f)
    return sol


def conjugation_identity_error(w: Field, phase: MorsePhase, h: float) -> float:
    """Relative mismatch of ``Delta(e^{Phi/h} w)`` against ``e^{Phi/h}`` times the d_zbar/d_z form.

    The comparison is made before dividing by ``e^{Phi/h}`` and only where ``w``
    is above ``1e-8`` of its peak; elsewhere round-off times the weight dominates.
    """
    z = w.z
    Phi = phase.phi(z)
    G = np.exp((Phi - Phi[w.n // 2, w.n // 2]) / h)
    lhs = positive_laplacian(w.like(G * w.values)).values
    rhs = G * conjugated_laplacian(w, np.exp(2j * np.imag(Phi) / h)).values
    m = w.interior_mask() & (np.abs(w.values) > 1e-8 * np.max(np.abs(w.values)))
    return float(np.linalg.norm((lhs - rhs)[m]) / np.linalg.norm(lhs[m]))


def slope(hs, values, log_divide: bool = False) -> float:
    """Least-squares slope of ``log(value)`` against ``log(h)``; optionally value/|log h| first."""
    hs = np.asarray(hs, float)
    v = np.asarray(values, float)
    if log_divide:
        v = v / np.abs(np.log(hs))
    return float(np.polyfit(np.log(hs), np.log(v), 1)[0])
