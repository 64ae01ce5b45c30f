"""Fixed-energy scattering on the plane.

Conventions: ``Delta = -(d_xx + d_yy)``; solutions of ``(Delta + V - lam^2) u = 0``
behave at infinity like ``r^{-1/2}(e^{i lam r} f_+(theta) + e^{-i lam r} f_-(theta))``
and ``S(lam) f_+ = f_-``. Mode coefficients refer to the basis ``e^{i m theta}``.

Exterior fields are written ``sum_m (alpha_m H^(1)_m(lam r) + beta_m H^(2)_m(lam r)) e^{i m theta}``.
The large-argument forms ``H^(1,2)_m(rho) ~ sqrt(2/(pi rho)) e^{+-i(rho - m pi/2 - pi/4)}`` give

    f_+,m = alpha_m kappa_m^+,   f_-,m = beta_m kappa_m^-,
    kappa_m^{+-} = sqrt(2/(pi lam)) e^{-+i(m pi/2 + pi/4)},

so for ``V = 0`` the regular mode ``J_m e^{i m theta}`` yields ``S_mm = i(-1)^m``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special
from scipy.sparse.linalg import LinearOperator, gmres

from .fieldops import Field, _convolve, _trapz2, evaluate_spectral

log = logging.getLogger(__name__)


class ScatteringError(RuntimeError):
    pass


def kappa(m, lam: float, sign: int) -> np.ndarray:
    """Conversion from Hankel coefficients to ``r^{-1/2} e^{+- i lam r}`` coefficients."""
    m = np.asarray(m)
    return math.sqrt(2.0 / (math.pi * lam)) * np.exp(-1j * sign * (m * math.pi / 2 + math.pi / 4))


def free_s_matrix(m_max: int) -> np.ndarray:
    m = np.arange(-m_max, m_max + 1)
    return np.diag(1j * (-1.0) ** m)


# ---------------------------------------------------------------------------
# Free resolvent
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _helmholtz_hat(lam: float, outgoing: bool) -> Callable:
    """Fourier symbol of ``(i/4) H0^(1)(lam |z|)`` cut off at ``|z| = L`` (conjugate for incoming)."""

    def numerator(s, L):
        x = lam * L
        return 1.0 + 0.5j * math.pi * L * (s * special.j1(s * L) * special.hankel1(0, x)
                                            - lam * special.j0(s * L) * special.hankel1(1, x))

    def hat(kx, ky, L):
        s = np.sqrt(kx * kx + ky * ky)
        step = 1e-5 * lam
        near = np.abs(s - lam) < step
        with np.errstate(divide="ignore", invalid="ignore"):
            out = numerator(s, L) / (s * s - lam * lam)
        if np.any(near):
            lo = numerator(lam - step, L) / ((lam - step) ** 2 - lam * lam)
            hi = numerator(lam + step, L) / ((lam + step) ** 2 - lam * lam)
            t = (s[near] - lam + step) / (2 * step)
            out[near] = (1 - t) * lo + t * hi
        return out if outgoing else np.conj(out)

    return hat


def free_resolvent(F: Field, lam: float, outgoing: bool = True, support: float | None = None,
                   tail_tol: float | None = 1e-6) -> Field:
    """``(Delta - lam^2)^{-1} F``: convolution with ``(i/4) H0^(1)(lam|z|)`` (``H0^(2)``, conjugated, if incoming)."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return _convolve(F, _helmholtz_hat(float(lam), bool(outgoing)), support, tail_tol)


def free_resolvent_at(sources: Field | Sequence[Field], lam: float, points, outgoing: bool = True,
                      chunk: int = 1024) -> np.ndarray:
    """Direct quadrature of the resolvent at points away from the support of the sources.

    Several sources on the same window share one Hankel table; the result has
    shape ``(len(sources), len(points))`` (or ``(len(points),)`` for one Field).
    """
    single = isinstance(sources, Field)
    srcs = [sources] if single else list(sources)
    pts = np.atleast_1d(np.asarray(points, complex)).ravel()
    F0 = srcs[0]
    V = np.stack([F.values for F in srcs])
    peak = np.max(np.abs(V))
    keep = np.any(np.abs(V) > 1e-15 * peak, axis=0) if peak > 0 else np.zeros(F0.values.shape, bool)
    out = np.zeros((len(srcs), pts.size), complex)
    if np.any(keep):
        w = np.ones(F0.n)
        w[0] = w[-1] = 0.5
        q = (V * np.outer(w, w))[:, keep] * F0.spacing ** 2
        zs = F0.z[keep]
        pref = 0.25j if outgoing else -0.25j
        for i in range(0, pts.size, chunk):
            dist = np.abs(pts[i:i + chunk, None] - zs[None, :])
            H = special.hankel1(0, lam * dist) if outgoing else special.hankel2(0, lam * dist)
            out[:, i:i + chunk] = pref * (q @ H.T)
    return out[0] if single else out


def bessel_modes(coeffs: dict, lam: float, z) -> np.ndarray:
    """``sum_m c_m J_m(lam r) e^{i m theta}``."""
    z = np.asarray(z, complex)
    r, th = np.abs(z), np.angle(z)
    out = np.zeros(z.shape, complex)
    for m, c in coeffs.items():
        if c != 0:
            out += c * special.jv(m, lam * r) * np.exp(1j * m * th)
    return out


# ---------------------------------------------------------------------------
# Wave fields and far-field decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaveField:
    """``u = sum_m c_m J_m(lam r) e^{i m theta} + R0(lam) g`` with ``g`` sampled on a window."""

    lam: float
    incident: dict
    source: Field
    outgoing: bool = True

    @property
    def scattered(self) -> Field:
        if not np.any(self.source.values):
            return self.source.like(np.zeros_like(self.source.values))
        return free_resolvent(self.source, self.lam, self.outgoing, tail_tol=None)

    @property
    def grid_values(self) -> Field:
        return self.scattered + bessel_modes(self.incident, self.lam, self.source.z)

    def far_values(self, points) -> np.ndarray:
        pts = np.asarray(points, complex)
        return bessel_modes(self.incident, self.lam, pts) + \
            free_resolvent_at(self.source, self.lam, pts, self.outgoing).reshape(pts.shape)

    def near_values(self, points) -> np.ndarray:
        """Values inside the taper core by trigonometric interpolation of the scattered part."""
        pts = np.atleast_1d(np.asarray(points, complex))
        return bessel_modes(self.incident, self.lam, pts) + evaluate_spectral(self.scattered, pts)

    def combine(self, weights: Sequence[complex], others: Sequence["WaveField"]) -> "WaveField":
        inc: dict = {}
        src = np.zeros_like(self.source.values)
        for w, o in zip(weights, others):
            for m, c in o.incident.items():
                inc[m] = inc.get(m, 0) + w * c
            src = src + w * o.source.values
        return WaveField(self.lam, inc, self.source.like(src), self.outgoing)


@dataclass
class FarFieldDecomposition:
    match_radius: float
    dr: float
    modes: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    fit_residual: np.ndarray  # per mode, relative
    lam: float

    @property
    def f_plus(self) -> np.ndarray:
        return self.alpha * kappa(self.modes, self.lam, +1)

    @property
    def f_minus(self) -> np.ndarray:
        return self.beta * kappa(self.modes, self.lam, -1)

    def restrict(self, m_max: int, which: str) -> np.ndarray:
        sel = np.abs(self.modes) <= m_max
        return (self.f_plus if which == "+" else self.f_minus)[sel]


def decompose_many(fields: Sequence[WaveField], match_radius: float, dr: float = 1.0, m_fit: int = 24,
                   n_radii: int = 4, n_angles: int = 128) -> list[FarFieldDecomposition]:
    """Least-squares Hankel-pair fit, mode by mode, on circles in ``[Rm, Rm + dr]``.

    All fields must share energy, direction and window.
    """
    lam = fields[0].lam
    radii = match_radius + dr * np.linspace(0, 1, n_radii)
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    pts = (radii[:, None] * np.exp(1j * th[None, :])).ravel()
    scat = free_resolvent_at([u.source for u in fields], lam, pts, fields[0].outgoing)
    modes = np.arange(-m_fit, m_fit + 1)
    A = [np.stack([special.hankel1(m, lam * radii), special.hankel2(m, lam * radii)], axis=1) for m in modes]
    out = []
    for u, sc in zip(fields, scat):
        vals = (bessel_modes(u.incident, lam, pts) + sc).reshape(n_radii, n_angles)
        coef = np.fft.fft(vals, axis=1) / n_angles  # c_m(r) at index m mod n_angles
        alpha = np.empty(modes.size, complex)
        beta = np.empty(modes.size, complex)
        res = np.empty(modes.size)
        scale = float(np.max(np.abs(coef))) or 1.0
        for i, m in enumerate(modes):
            c = coef[:, m % n_angles]
            sol, *_ = np.linalg.lstsq(A[i], c, rcond=None)
            alpha[i], beta[i] = sol
            res[i] = np.linalg.norm(A[i] @ sol - c) / max(np.linalg.norm(c), 1e-6 * scale)
        out.append(FarFieldDecomposition(match_radius, dr, modes, alpha, beta, res, lam))
    return out


def decompose(u: WaveField, match_radius: float, dr: float = 1.0, m_fit: int = 24,
              n_radii: int = 4, n_angles: int = 128) -> FarFieldDecomposition:
    return decompose_many([u], match_radius, dr, m_fit, n_radii, n_angles)[0]


# ---------------------------------------------------------------------------
# Lippmann-Schwinger solves and the scattering matrix
# ---------------------------------------------------------------------------


@dataclass
class ScatteringMatrix:
    lam: float
    m_max: int
    entries: np.ndarray
    match_radius: float
    R: float
    n: int
    fit_residual: float
    tail_norm: float

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    def unitarity_defect(self) -> float:
        S = self.entries
        return float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0]), 2))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# lambda={self.lam!r} mMax={self.m_max} matchRadius={self.match_radius!r} "
                  f"R={self.R!r} n={self.n}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "mp", "re", "im"])
        for i, m in enumerate(self.modes):
            for k, mp in enumerate(self.modes):
                v = self.entries[i, k]
                w.writerow([int(m), int(mp), f"{v.real:.15e}", f"{v.imag:.15e}"])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())


class ScatteringProblem:
    """Outgoing Lippmann-Schwinger basis ``u_m = J_m e^{i m theta} - R0(V u_m)`` on one window.

    Every regular solution with ``|m| <= m_max`` incoming content is a combination
    of the basis; ``S(lam)`` and ``S(-lam)`` both come from it.
    """

    def __init__(self, V: Callable | None, lam: float, m_max: int = 8, R: float = 8.0, n: int = 241,
                 match_radius: float = 12.0, dr: float = 1.0, m_fit: int | None = None,
                 gmres_tol: float = 1e-12, maxiter: int = 500, fit_tol: float = 1e-6):
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.V, self.lam, self.m_max = V, float(lam), int(m_max)
        self.R, self.n = float(R), int(n)
        self.match_radius, self.dr = float(match_radius), float(dr)
        self.m_fit = int(m_fit) if m_fit is not None else self.m_max + 12
        self.gmres_tol, self.maxiter, self.fit_tol = gmres_tol, maxiter, fit_tol
        z = Field.zeros(self.R, self.n).z
        self.Vz = np.asarray(V(z), complex) if V is not None else np.zeros(z.shape, complex)
        edge = np.concatenate([self.Vz[0], self.Vz[-1], self.Vz[:, 0], self.Vz[:, -1]])
        if np.max(np.abs(edge)) > 1e-10 * max(np.max(np.abs(self.Vz)), 1e-300):
            log.warning("potential is not negligible at the window edge (R=%g)", self.R)
        self._basis: list[WaveField] | None = None
        self._dec: list[FarFieldDecomposition] | None = None
        self.solve_info: list[dict] = []

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    def solve_incident(self, incident: dict) -> WaveField:
        """Solve ``u + R0(V u) = u_inc`` by GMRES; returns the total field as a :class:`WaveField`."""
        R, n, lam = self.R, self.n, self.lam
        z = Field.zeros(R, n).z
        u0 = bessel_modes(incident, lam, z)
        if not np.any(self.Vz):
            self.solve_info.append(dict(iterations=0, residual=0.0))
            return WaveField(lam, dict(incident), Field.zeros(R, n))
        Vz = self.Vz

        def mv(x):
            x = x.reshape(n, n)
            return (x + free_resolvent(Field(R, n, Vz * x), lam, tail_tol=None).values).ravel()

        A = LinearOperator((n * n, n * n), matvec=mv, dtype=complex)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = gmres(A, u0.ravel(), rtol=self.gmres_tol, atol=0.0, restart=60, maxiter=self.maxiter,
                        callback=cb, callback_type="pr_norm")
        rel = float(np.linalg.norm(mv(x) - u0.ravel()) / max(np.linalg.norm(u0), 1e-300))
        self.solve_info.append(dict(iterations=count[0], residual=rel))
        if info != 0 or rel > 1e3 * self.gmres_tol:
            raise ScatteringError(f"Lippmann-Schwinger solve did not converge (residual {rel:.2e}); "
                                  f"lam={lam} may be close to a resonance")
        u = x.reshape(n, n)
        return WaveField(lam, dict(incident), Field(R, n, -Vz * u))

    def basis(self) -> list[WaveField]:
        if self._basis is None:
            self._basis = [self.solve_incident({int(m): 1.0}) for m in self.modes]
        return self._basis

    def decompositions(self) -> list[FarFieldDecomposition]:
        if self._dec is None:
            self._dec = decompose_many(self.basis(), self.match_radius, self.dr, self.m_fit)
            worst = max(float(np.max(d.fit_residual)) for d in self._dec)
            if worst > self.fit_tol:
                raise ScatteringError(f"far-field fit residual {worst:.2e} exceeds {self.fit_tol:.1e}")
        return self._dec

    def _coefficient_matrices(self):
        dec = self.decompositions()
        Fp = np.stack([d.restrict(self.m_max, "+") for d in dec], axis=1)
        Fm = np.stack([d.restrict(self.m_max, "-") for d in dec], axis=1)
        return Fp, Fm

    def s_matrix(self, sign: int = 1) -> ScatteringMatrix:
        """``S(lam)`` (``sign=1``) or ``S(-lam)``, the inverse map (``sign=-1``)."""
        Fp, Fm = self._coefficient_matrices()
        S = np.linalg.solve(Fp.T, Fm.T).T if sign > 0 else np.linalg.solve(Fm.T, Fp.T).T
        dec = self.decompositions()
        # outgoing mass that leaks beyond the retained modes
        tail = max(float(np.linalg.norm(d.f_plus[np.abs(d.modes) > self.m_max])
                         / max(np.linalg.norm(d.f_plus), 1e-300)) for d in dec)
        fit = max(float(np.max(d.fit_residual)) for d in dec)
        return ScatteringMatrix(self.lam if sign > 0 else -self.lam, self.m_max, S, self.match_radius,
                                self.R, self.n, fit, tail)

    def poisson(self, f: Sequence[complex], sign: int = 1) -> WaveField:
        """``P_V(sign lam) f``: the solution whose ``r^{-1/2} e^{sign i lam r}`` coefficients are ``f``."""
        f = np.asarray(f, complex)
        if f.shape != (self.modes.size,):
            raise ValueError(f"mode vector must have length {self.modes.size}")
        Fp, Fm = self._coefficient_matrices()
        c = np.linalg.solve(Fp if sign > 0 else Fm, f)
        basis = self.basis()
        return basis[0].combine(c, basis)

    def apply_operator(self, u: WaveField) -> Field:
        """``(Delta + V - lam^2) u = g + V u`` for ``u = u_inc + R0 g``; exact, no differentiation."""
        return u.source + self.Vz * u.grid_values.values


def mode_vector(m_max: int, coeffs: dict) -> np.ndarray:
    v = np.zeros(2 * m_max + 1, complex)
    for m, c in coeffs.items():
        v[m + m_max] = c
    return v


def extract_s_matrix(V: Callable | None, lam: float, m_max: int = 8, match_radius: float = 12.0,
                     **kw) -> ScatteringMatrix:
    return ScatteringProblem(V, lam, m_max, match_radius=match_radius, **kw).s_matrix()


# ---------------------------------------------------------------------------
# Pairings and identities
# ---------------------------------------------------------------------------


def _disk_integral(vals: np.ndarray, F: Field, radius: float) -> complex:
    return complex(_trapz2(np.where(np.abs(F.z) <= radius, vals, 0.0), F.spacing))


def boundary_pairing(u_plus: WaveField, u_minus: WaveField, problem: ScatteringProblem,
                     radius: float, dr: float = 1.0, m_fit: int | None = None) -> dict:
    """Volume form ``<u+, P u->  - <P u+, u->`` on the disk against ``2i lam oint (f++ conj f-+ - f+- conj f--)``."""
    lam = problem.lam
    Pp = problem.apply_operator(u_plus).values
    Pm = problem.apply_operator(u_minus).values
    up, um = u_plus.grid_values.values, u_minus.grid_values.values
    vol = _disk_integral(up * np.conj(Pm) - Pp * np.conj(um), u_plus.source, radius)
    mf = m_fit if m_fit is not None else problem.m_fit
    dp, dm = decompose_many([u_plus, u_minus], radius, dr, mf)
    circ = 2j * lam * 2 * math.pi * complex(np.sum(dp.f_plus * np.conj(dm.f_plus))
                                            - np.sum(dp.f_minus * np.conj(dm.f_minus)))
    return dict(volume=vol, circle=circ, difference=abs(vol - circ),
                plus=(dp.f_plus, dp.f_minus), minus=(dm.f_plus, dm.f_minus))


def scattering_difference_identity(p1: ScatteringProblem, p2: ScatteringProblem,
                                   f1: Sequence[complex], f2: Sequence[complex]) -> tuple[complex, complex]:
    """``lhs = int (V1 - V2) u1 conj(u2)`` with ``u1 = P_V1(lam) f1``, ``u2 = P_V2(-lam) f2``;
    ``rhs = -2i lam <(S1(lam) - S2(lam)) f1, f2>`` on the unit circle."""
    if p1.R != p2.R or p1.n != p2.n or p1.lam != p2.lam or p1.m_max != p2.m_max:
        raise ValueError("problems must share window, energy and mode cutoff")
    u1 = p1.poisson(f1, +1).grid_values.values
    u2 = p2.poisson(f2, -1).grid_values.values
    lhs = complex(_trapz2((p1.Vz - p2.Vz) * u1 * np.conj(u2), 2 * p1.R / (p1.n - 1)))
    dS = p1.s_matrix().entries - p2.s_matrix().entries
    rhs = -2j * p1.lam * 2 * math.pi * complex(np.vdot(np.asarray(f2, complex), dS @ np.asarray(f1, complex)))
    return lhs, rhs


def born_approximation(problem: ScatteringProblem, incident: dict) -> WaveField:
    """``u0 - R0(V u0)``."""
    z = Field.zeros(problem.R, problem.n).z
    u0 = bessel_modes(incident, problem.lam, z)
    return WaveField(problem.lam, dict(incident), Field(problem.R, problem.n, -problem.Vz * u0))


# ---------------------------------------------------------------------------
# Radial oracle
# ---------------------------------------------------------------------------


def radial_s_entry(V_radial: Callable, lam: float, m: int, support: float, r0: float = 1e-3) -> complex:
    """``S_mm`` of a radial potential supported in ``r <= support`` from the radial ODE.

    ``u'' + u'/r - m^2 u / r^2 = (V - lam^2) u`` is integrated from the regular
    series ``r^|m| (1 + c r^2)`` and matched to ``A J_m + B Y_m`` at ``support``.
    """
    k = abs(int(m))
    c = (float(V_radial(np.array([0.0]))[0]) - lam * lam) / (4 * (k + 1))

    def rhs(r, y):
        u, du = y
        return [du, -du / r + (k * k / (r * r) + V_radial(np.array([r]))[0] - lam * lam) * u]

    y0 = [r0 ** k * (1 + c * r0 ** 2), k * r0 ** (k - 1) * (1 + c * r0 ** 2) + 2 * c * r0 ** (k + 1)]
    sol = integrate.solve_ivp(rhs, (r0, support), y0, method="DOP853", rtol=1e-12, atol=1e-14 * abs(y0[0]))
    u, du = sol.y[0, -1], sol.y[1, -1]
    x = lam * support
    J, Y = special.jv(k, x), special.yv(k, x)
    dJ, dY = lam * special.jvp(k, x), lam * special.yvp(k, x)
    A, B = np.linalg.solve([[J, Y], [dJ, dY]], [u, du])
    return complex((A + 1j * B) / (A - 1j * B) * 1j * (-1) ** k)


# ---------------------------------------------------------------------------
# Density proxy
# ---------------------------------------------------------------------------


@dataclass
class DensityFit:
    m_values: list
    residuals: list
    rcond: float
    ranks: list = field(default_factory=list)


def density_proxy_fit(target: np.ndarray, points: np.ndarray, problem: ScatteringProblem,
                      m_values: Sequence[int], rcond: float = 1e-12) -> DensityFit:
    """Relative least-squares residual of ``target`` by ``span{P_V(lam) e_m : |m| <= M}`` at ``points``.

    The span of ``P_V(lam) e_m`` for ``|m| <= M`` equals that of the basis
    solutions ``u_m`` with ``|m| <= M`` up to the small coupling to higher modes;
    the basis solutions are used directly.
    """
    target = np.asarray(target, complex).ravel()
    pts = np.asarray(points, complex).ravel()
    basis = problem.basis()
    cols = {int(m): u.near_values(pts) for m, u in zip(problem.modes, basis)}
    res, ranks = [], []
    tn = np.linalg.norm(target)
    for M in m_values:
        if M > problem.m_max:
            raise ValueError("mMax exceeds the problem's mode cutoff")
        A = np.stack([cols[m] for m in range(-M, M + 1)], axis=1)
        A = A / np.linalg.norm(A, axis=0)  # high modes are tiny near the origin
        c, _, rank, _ = np.linalg.lstsq(A, target, rcond=rcond)
        res.append(float(np.linalg.norm(A @ c - target) / tn))
        ranks.append(int(rank))
    return DensityFit(list(m_values), res, rcond, ranks)
