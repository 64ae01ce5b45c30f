"""Fourier transforms of Gaussian-decaying functions at complex frequencies.

Convention: ``F(xi) = int e^{-i xi.z} f(z) dA`` with ``xi.z = xi_x x + xi_y y``, so
``F(xi + i eta)`` is the transform of ``e^{eta.z} f``. On the sample grid this is a
plain Riemann sum evaluated by FFT; the discrete Plancherel identity is exact.

If ``|f| <= C e^{-gamma |z|^2}`` then ``e^{eta.z} <= e^{|eta|^2/4gamma} e^{gamma |z|^2}``
pointwise, which gives

    ||F(. + i eta)||_2 <= 2 pi e^{|eta|^2/4gamma} ||e^{gamma|z|^2} f||_2
    sup |F(. + i eta)| <= e^{|eta|^2/4gamma} ||e^{gamma|z|^2} f||_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

from .fieldops import Field, _check_tail, fft_workers, positive_laplacian


class SphereDivisionError(ValueError):
    """The transform does not vanish on the circle ``|xi| = lambda``."""


def _xi(n: int, d: float) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, d)


def fourier_at(f: Field, kx, ky, eta: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    """Direct sum ``d^2 sum e^{-i (k + i eta).z} f`` at arbitrary (complex) frequency pairs."""
    kx = np.asarray(kx, dtype=complex) + 1j * eta[0]
    ky = np.asarray(ky, dtype=complex) + 1j * eta[1]
    shape = np.broadcast(kx, ky).shape
    kx, ky = np.broadcast_to(kx, shape).ravel(), np.broadcast_to(ky, shape).ravel()
    t = -f.R + np.arange(f.n) * f.spacing
    out = np.empty(kx.size, complex)
    for s in range(0, kx.size, 512):
        ex = np.exp(-1j * np.outer(kx[s:s + 512], t))
        ey = np.exp(-1j * np.outer(ky[s:s + 512], t))
        out[s:s + 512] = np.sum((ex @ f.values) * ey, axis=1)
    return (out * f.spacing ** 2).reshape(shape)


@dataclass
class ComplexFrequencySlice:
    """``F(xi + i eta)`` on the real FFT frequency grid (FFT ordering)."""

    eta: tuple
    R: float
    n: int
    values: np.ndarray
    gamma: float | None = None
    evaluator: Callable | None = None  # (kx, ky) -> F(kx + i eta_x, ky + i eta_y)
    l2_ratio: float | None = None
    sup_ratio: float | None = None

    @property
    def spacing(self) -> float:
        return 2.0 * self.R / (self.n - 1)

    @property
    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        k = _xi(self.n, self.spacing)
        return k[:, None], k[None, :]

    @property
    def dxi(self) -> float:
        return 2 * np.pi / (self.n * self.spacing)

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.dxi)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def from_function(cls, func: Callable, R: float, n: int, gamma: float | None = None) -> "ComplexFrequencySlice":
        """Slice at ``eta = 0`` from a closed-form transform ``func(kx, ky)``."""
        k = _xi(n, 2.0 * R / (n - 1))
        vals = np.asarray(func(k[:, None], k[None, :]), dtype=complex) * np.ones((n, n))
        return cls((0.0, 0.0), R, n, vals, gamma, func)


def complex_fourier(f: Field, eta: Sequence[float] = (0.0, 0.0), gamma: float | None = None,
                    tail_tol: float = 1e-10) -> ComplexFrequencySlice:
    """FFT of ``e^{eta.z} f``; with ``gamma`` the two bound ratios are filled in.

    Raises ``ValueError`` when ``e^{eta.z} f`` has more than ``tail_tol`` of its
    squared mass in the window's edge band.
    """
    eta = (float(eta[0]), float(eta[1]))
    z = f.z
    g = f.like(np.exp(eta[0] * z.real + eta[1] * z.imag) * f.values)
    try:
        _check_tail(g, tail_tol)
    except ValueError as exc:
        raise ValueError(f"window too small for eta={eta}: {exc}") from None
    d = f.spacing
    k = _xi(f.n, d)
    shift = np.exp(1j * k * f.R)
    F = sfft.fft2(g.values, workers=fft_workers()) * (shift[:, None] * shift[None, :]) * d * d
    sl = ComplexFrequencySlice(eta, f.R, f.n, F, gamma, lambda kx, ky: fourier_at(f, kx, ky, eta))
    if gamma is not None:
        logw = gamma * np.abs(z) ** 2
        with np.errstate(divide="ignore"):
            lf = np.log(np.abs(f.values)) + logw
        m = float(np.max(lf))
        if np.isfinite(m):
            w = np.exp(lf - m)
            grow = (eta[0] ** 2 + eta[1] ** 2) / (4 * gamma)
            l2w = math.exp(m) * math.sqrt(float(np.sum(w ** 2))) * d
            l1w = math.exp(m) * float(np.sum(w)) * d * d
            sl.l2_ratio = sl.l2_norm / (2 * np.pi * math.exp(grow) * l2w)
            sl.sup_ratio = sl.sup_norm / (math.exp(grow) * l1w)
        else:
            sl.l2_ratio = sl.sup_ratio = 0.0
    return sl


def inverse_transform(values: np.ndarray, R: float, n: int) -> Field:
    """Inverse of the forward Riemann-sum transform on the same grid."""
    d = 2.0 * R / (n - 1)
    k = _xi(n, d)
    shift = np.exp(-1j * k * R)
    g = sfft.ifft2(values * (shift[:, None] * shift[None, :]), workers=fft_workers()) / (d * d)
    return Field(R, n, g)


def sphere_values(F: ComplexFrequencySlice, lam: float, count: int = 256) -> np.ndarray:
    th = np.linspace(0, 2 * np.pi, count, endpoint=False)
    return F.evaluator(lam * np.cos(th), lam * np.sin(th))


def divide_by_sphere(F: ComplexFrequencySlice, lam: float, tol: float = 1e-8, band: float = 3.0) -> np.ndarray:
    """``F / (|xi|^2 - lambda^2)`` on the grid, with a radial difference quotient near the circle."""
    if F.eta != (0.0, 0.0):
        raise ValueError("sphere division needs a real-frequency slice")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if F.evaluator is None:
        raise ValueError("slice carries no evaluator for the band around the circle")
    scale = max(F.sup_norm, 1e-300)
    on = float(np.max(np.abs(sphere_values(F, lam))))
    if on > tol * scale:
        raise SphereDivisionError(f"transform is {on / scale:.2e} (relative) on |xi| = {lam}")
    kx, ky = F.xi
    kx, ky = np.broadcast_arrays(kx, ky)
    r = np.hypot(kx, ky)
    Q = r * r - lam * lam
    near = np.abs(r - lam) < band * F.dxi
    G = np.where(near, 0.0, F.values / np.where(near, 1.0, Q))
    rn = r[near]
    ux = np.where(rn > 0, kx[near] / np.where(rn > 0, rn, 1.0), 1.0)
    uy = np.where(rn > 0, ky[near] / np.where(rn > 0, rn, 1.0), 0.0)
    F0 = F.evaluator(lam * ux, lam * uy)
    delta = 1e-6 * max(lam, F.dxi)
    tiny = np.abs(rn - lam) < delta
    # (F(r) - F(lambda)) / (r^2 - lambda^2), or a centred difference when r sits on the circle
    rr = np.where(tiny, lam + delta, rn)
    Fr = F.evaluator(rr * ux, rr * uy)
    Fm = F.evaluator((lam - delta) * ux, (lam - delta) * uy)
    quot = (Fr - F0) / (rr * rr - lam * lam)
    central = (Fr - Fm) / (4 * lam * delta)
    G[near] = np.where(tiny, central, quot)
    return G


def sphere_division(F: ComplexFrequencySlice, lam: float, tol: float = 1e-8, band: float = 3.0) -> Field:
    """Inverse transform of ``F / (|xi|^2 - lambda^2)``.

    Raises ``SphereDivisionError`` if ``F`` does not vanish on ``|xi| = lambda``.
    """
    return inverse_transform(divide_by_sphere(F, lam, tol, band), F.R, F.n)


def decay_rate(g: Field, floor: float = 1e-10, r_min: float = 1.0) -> float:
    """Gaussian rate ``s`` from ``log max_{|z|~r}|g| = c0 + c1 r - s r^2``.

    Only shells inside the window where the maximum is above ``floor`` times the
    global maximum are used. The linear term absorbs centre offsets and
    polynomial prefactors.
    """
    a = np.abs(g.values)
    top = float(np.max(a))
    if top == 0:
        return math.inf
    r = np.abs(g.z)
    d = g.spacing
    edges = np.arange(r_min, g.R * 0.95, d)
    idx = np.digitize(r.ravel(), edges)
    M = np.zeros(len(edges) + 1)
    np.maximum.at(M, idx, a.ravel())
    M = M[1:len(edges)]
    rc = 0.5 * (edges[:-1] + edges[1:])
    keep = M > floor * top
    if keep.sum() < 4:
        raise ValueError("too few shells above the noise floor for a decay fit")
    c = np.polyfit(rc[keep], np.log(M[keep]), 2)
    return float(-c[0])


def gaussian_class_function(seed: int, gamma: float, R: float = 10.0, n: int = 257, count: int = 3) -> Field:
    """Seeded ``sum c_k (1 + b_k (z - z_k)) e^{-g_k |z - z_k|^2}`` with ``g_k`` in ``[1.5, 3] gamma``."""
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(count):
        c, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2)) * 0.5
        zk = complex(*rng.uniform(-1, 1, 2))
        gk = gamma * rng.uniform(1.5, 3.0)
        terms.append((c, b, zk, gk))

    def f(z):
        return sum(c * (1 + b * (z - zk)) * np.exp(-gk * np.abs(z - zk) ** 2) for c, b, zk, gk in terms)

    return Field.from_function(f, R, n)


def helmholtz_image(g: Field, lam: float) -> Field:
    """``(Delta - lambda^2) g`` with the positive Laplacian; its transform vanishes on ``|xi| = lambda``."""
    v = (positive_laplacian(g, taper=False) - g * (lam * lam)).values
    # FFT roundoff floor would be amplified by e^{eta.z} on shifted contours
    return g.like(np.where(np.abs(v) < 1e-14 * np.max(np.abs(v)), 0.0, v))


@dataclass
class ContourShift:
    z: complex
    shifted: complex
    direct: complex

    @property
    def rel_error(self) -> float:
        return abs(self.shifted - self.direct) / max(abs(self.direct), 1e-300)


def contour_shift_check(f: Field, lam: float, gamma: float, points: Sequence[complex],
                        tol: float = 1e-8) -> list[ContourShift]:
    """Evaluate the sphere-divided inverse transform at ``z0`` on the real contour and on ``xi + 2i gamma z0``.

    On the shifted contour ``(xi + i eta).(xi + i eta) = lambda^2`` only at two
    points; grid samples too close to them are replaced by the mean of four
    nearby exact evaluations.
    """
    base = complex_fourier(f)
    G0 = divide_by_sphere(base, lam, tol)
    kx, ky = base.xi
    kx, ky = np.broadcast_arrays(kx, ky)
    dxi = base.dxi
    out = []
    for z0 in points:
        z0 = complex(z0)
        if abs(z0) < 1e-9:
            raise ValueError("the contour shift needs z0 != 0")
        eta = (2 * gamma * z0.real, 2 * gamma * z0.imag)
        sl = complex_fourier(f, eta)
        qx, qy = kx + 1j * eta[0], ky + 1j * eta[1]
        Q = qx * qx + qy * qy - lam * lam
        scale = lam * lam + eta[0] ** 2 + eta[1] ** 2
        bad = np.abs(Q) < 1e-6 * scale
        G = sl.values / np.where(bad, 1.0, Q)
        if bad.any():
            dl = 1e-2 * dxi
            acc = 0.0
            for ox, oy in ((dl, 0), (-dl, 0), (0, dl), (0, -dl)):
                px, py = kx[bad] + ox, ky[bad] + oy
                acc = acc + sl.evaluator(px, py) / ((px + 1j * eta[0]) ** 2 + (py + 1j * eta[1]) ** 2 - lam * lam)
            G[bad] = acc / 4
        wave = np.exp(1j * (kx * z0.real + ky * z0.imag))
        norm = dxi * dxi / (4 * np.pi ** 2)
        shifted = np.exp(-(eta[0] * z0.real + eta[1] * z0.imag)) * np.sum(wave * G) * norm
        direct = np.sum(wave * G0) * norm
        out.append(ContourShift(z0, complex(shifted), complex(direct)))
    return out
