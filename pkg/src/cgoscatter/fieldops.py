"""Grid calculus on a square window of the plane chart.

Samples live at ``z = x + i y`` with ``x = -R + i*d``, ``y = -R + k*d`` and
``d = 2R/(n-1)``; axis 0 is ``x`` and axis 1 is ``y``. The Laplacian is the
positive one, ``Delta = -(d_x^2 + d_y^2) = -4 d_z d_zbar``.

Derivatives are spectral on the tapered field. Convolutions with the Cauchy
and logarithmic kernels use kernels truncated at a radius covering every
source/target pair, whose Fourier transforms are known in closed form; the
zero-padded FFT product is then exact up to spectral resolution of the data.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy import special

from .geometry import SurfaceModel

TAPER_CORE = 0.8  # taper equals 1 on |x|, |y| <= TAPER_CORE * R
TAPER_STEEPNESS = 6.5


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("CGOSCATTER_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Field
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _grid(R: float, n: int) -> np.ndarray:
    t = np.linspace(-R, R, n)
    z = t[:, None] + 1j * t[None, :]
    z.setflags(write=False)
    return z


@lru_cache(maxsize=16)
def _taper(R: float, n: int) -> np.ndarray:
    # erfc profile: 1 - 1e-19 at the core edge, 1e-19 at the window edge, and a
    # Gaussian spectrum so the tapered field stays band limited on fine grids
    t = np.abs(np.linspace(-R, R, n)) / R
    mid = 0.5 * (TAPER_CORE + 1.0)
    w = (1.0 - TAPER_CORE) / 2 / TAPER_STEEPNESS
    prof = 0.5 * special.erfc((t - mid) / w)
    out = prof[:, None] * prof[None, :]
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable complex samples on the ``n x n`` window ``[-R, R]^2``."""

    R: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("n must be at least 16")
        if self.R <= 0:
            raise ValueError("R must be positive")
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.n, self.n):
            raise ValueError(f"values must have shape {(self.n, self.n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "values", v)

    # construction ---------------------------------------------------------
    @classmethod
    def from_function(cls, f: Callable, R: float, n: int) -> "Field":
        z = _grid(float(R), int(n))
        return cls(R, n, np.broadcast_to(np.asarray(f(z), dtype=complex), z.shape))

    @classmethod
    def zeros(cls, R: float, n: int) -> "Field":
        return cls(R, n, np.zeros((n, n), complex))

    def like(self, values) -> "Field":
        return Field(self.R, self.n, values)

    # geometry -------------------------------------------------------------
    @property
    def spacing(self) -> float:
        return 2.0 * self.R / (self.n - 1)

    @property
    def z(self) -> np.ndarray:
        return _grid(self.R, self.n)

    @property
    def taper(self) -> np.ndarray:
        return _taper(self.R, self.n)

    def interior_mask(self, margin: float = 0.1) -> np.ndarray:
        """Samples at distance at least ``margin * 2R`` from the window edge."""
        lim = self.R * (1.0 - 2.0 * margin) + 1e-12 * self.R
        z = self.z
        return (np.abs(z.real) <= lim) & (np.abs(z.imag) <= lim)

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "Field"):
        if self.n != other.n or abs(self.R - other.R) > 1e-12 * self.R:
            raise ValueError("fields live on different windows")

    def _val(self, other):
        if isinstance(other, Field):
            self._check(other)
            return other.values
        return other

    def __add__(self, other):
        return self.like(self.values + self._val(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.like(self.values - self._val(other))

    def __rsub__(self, other):
        return self.like(self._val(other) - self.values)

    def __mul__(self, other):
        return self.like(self.values * self._val(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.like(self.values / self._val(other))

    def __neg__(self):
        return self.like(-self.values)

    def conj(self) -> "Field":
        return self.like(np.conj(self.values))

    def abs(self) -> "Field":
        return self.like(np.abs(self.values))

    def tapered(self) -> "Field":
        return self.like(self.values * self.taper)

    def integral(self) -> complex:
        """Trapezoid-rule integral over the window."""
        return complex(_trapz2(self.values, self.spacing))


def _trapz_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _trapz2(v: np.ndarray, d: float):
    w = _trapz_weights(v.shape[0])
    return d * d * np.einsum("i,ij,j->", w, v, w)


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


def _wavenumbers(n: int, d: float):
    k = 2 * np.pi * sfft.fftfreq(n, d)
    return k[:, None], k[None, :]


def _spectral(F: Field, symbol: Callable, taper: bool) -> Field:
    v = F.values * F.taper if taper else F.values
    kx, ky = _wavenumbers(F.n, F.spacing)
    w = fft_workers()
    out = sfft.ifft2(sfft.fft2(v, workers=w) * symbol(kx, ky), workers=w)
    return F.like(out)


def ddz(F: Field, taper: bool = True) -> Field:
    """``d_z = (d_x - i d_y)/2``."""
    return _spectral(F, lambda kx, ky: 0.5 * (1j * kx + ky), taper)


def ddzbar(F: Field, taper: bool = True) -> Field:
    """``d_zbar = (d_x + i d_y)/2``."""
    return _spectral(F, lambda kx, ky: 0.5 * (1j * kx - ky), taper)


def positive_laplacian(F: Field, taper: bool = True) -> Field:
    return _spectral(F, lambda kx, ky: kx * kx + ky * ky + 0 * kx, taper)


def gradient(F: Field, taper: bool = True) -> tuple[Field, Field]:
    return (_spectral(F, lambda kx, ky: 1j * kx + 0 * ky, taper),
            _spectral(F, lambda kx, ky: 1j * ky + 0 * kx, taper))


# ---------------------------------------------------------------------------
# Convolutions with truncated kernels
# ---------------------------------------------------------------------------


def _conv_setup(F: Field, support: float | None):
    d = F.spacing
    s = math.sqrt(2.0) * F.R if support is None else min(float(support), math.sqrt(2.0) * F.R)
    L = math.sqrt(2.0) * F.R + s + 2 * d
    span = F.R + min(s, F.R) + L + 2 * d
    N = sfft.next_fast_len(int(math.ceil(span / d)) + 1)
    return d, L, N


def _convolve(F: Field, khat: Callable, support: float | None, tail_tol: float | None) -> Field:
    if tail_tol is not None:
        _check_tail(F, tail_tol)
    d, L, N = _conv_setup(F, support)
    w = fft_workers()
    pad = np.zeros((N, N), complex)
    pad[: F.n, : F.n] = F.values
    spec = sfft.fft2(pad, workers=w, overwrite_x=True)
    spec *= _kernel_table(khat, N, d, L)
    out = sfft.ifft2(spec, workers=w, overwrite_x=True)
    return F.like(out[: F.n, : F.n])


@lru_cache(maxsize=3)
def _kernel_table(khat: Callable, N: int, d: float, L: float) -> np.ndarray:
    k = 2 * np.pi * sfft.fftfreq(N, d)
    return khat(k[:, None], k[None, :], L)


def _check_tail(F: Field, tol: float):
    a = np.abs(F.values) ** 2
    total = a.sum()
    if total == 0:
        return
    outer = (a * (1.0 - F.taper)).sum()
    if outer > tol * total:
        raise ValueError(f"field has unsupported tail mass {outer / total:.2e} > {tol:.1e}")


def _radial_factor(kx, ky, L):
    """(1 - J0(|k| L)) / |k|^2 with its k -> 0 limit L^2/4."""
    k2 = kx * kx + ky * ky
    kk = np.sqrt(k2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (1.0 - special.j0(kk * L)) / k2
    small = kk * L < 1e-4
    return np.where(small, L * L / 4.0 * (1 - (kk * L) ** 2 / 16.0), f)


def _cauchy_hat(kx, ky, L):
    return -2j * (kx + 1j * ky) * _radial_factor(kx, ky, L)


def _conj_cauchy_hat(kx, ky, L):
    return -2j * (kx - 1j * ky) * _radial_factor(kx, ky, L)


def _log_hat(kx, ky, L):
    kk = np.sqrt(kx * kx + ky * ky)
    with np.errstate(divide="ignore", invalid="ignore"):
        j1k = np.where(kk * L < 1e-8, L / 2.0, special.j1(kk * L) / np.where(kk > 0, kk, 1.0))
    return _radial_factor(kx, ky, L) - L * math.log(L) * j1k


def cauchy_transform(F: Field, support: float | None = None, tail_tol: float | None = 1e-6) -> Field:
    """``R f = (1/pi) int f(xi) / conj(z - xi) dA(xi)``, so that ``d_z R f = f``."""
    return _convolve(F, _cauchy_hat, support, tail_tol)


def conj_cauchy_transform(F: Field, support: float | None = None,
                          tail_tol: float | None = 1e-6) -> Field:
    """``Rbar f = (1/pi) int f(xi) / (z - xi) dA(xi)``, so that ``d_zbar Rbar f = f``."""
    return _convolve(F, _conj_cauchy_hat, support, tail_tol)


def green_laplace(F: Field, support: float | None = None, tail_tol: float | None = 1e-6) -> Field:
    """``G f = -(1/2pi) int log|z - xi| f(xi) dA(xi)``; positive Laplacian of ``G f`` is ``f``."""
    return _convolve(F, _log_hat, support, tail_tol)


def dz_green(F: Field, support: float | None = None, tail_tol: float | None = 1e-6) -> Field:
    """``d_z G f = -Rbar f / 4`` without differentiating numerically."""
    return -0.25 * conj_cauchy_transform(F, support, tail_tol)


# ---------------------------------------------------------------------------
# Weights and norms
# ---------------------------------------------------------------------------


def x_function(z, kind: str = "smooth") -> np.ndarray:
    """Boundary defining function of the plane end: ``(1+|z|^2)^(-1/2)`` or ``1/|z|``."""
    r2 = np.abs(np.asarray(z)) ** 2
    if kind == "smooth":
        return 1.0 / np.sqrt(1.0 + r2)
    if kind == "inverse_modulus":
        with np.errstate(divide="ignore"):
            return 1.0 / np.sqrt(r2)
    raise ValueError(f"unknown x function {kind!r}")


@dataclass(frozen=True)
class WeightSpec:
    """``polynomial``: x^J; ``exponential``: e^(gamma/x); ``gaussian``: e^(gamma/x^2)."""

    kind: str = "none"
    param: float = 0.0
    x_kind: str = "smooth"

    def __post_init__(self):
        if self.kind not in ("none", "polynomial", "exponential", "gaussian"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def log_weight(self, z) -> np.ndarray:
        z = np.asarray(z)
        if self.kind == "none":
            return np.zeros(z.shape)
        x = x_function(z, self.x_kind)
        with np.errstate(divide="ignore"):
            if self.kind == "polynomial":
                return self.param * np.log(x)
            if self.kind == "exponential":
                return self.param / x
            return self.param / x ** 2

    def __call__(self, z) -> np.ndarray:
        return np.exp(self.log_weight(z))


def weighted_norm(F: Field, w: WeightSpec | Callable | np.ndarray | None = None, p=2) -> float:
    """``(int |w F|^p)^(1/p)`` by the trapezoid rule on the window; ``p='inf'`` gives the max.

    Weights are combined in log space so ``e^{g} * e^{-g}`` style products do not overflow.
    """
    v = F.values
    if w is None:
        lw = np.zeros(v.shape)
    elif isinstance(w, WeightSpec):
        lw = w.log_weight(F.z)
    elif callable(w):
        with np.errstate(divide="ignore"):
            lw = np.log(np.abs(w(F.z)))
    else:
        with np.errstate(divide="ignore"):
            lw = np.log(np.abs(np.asarray(w)))
    with np.errstate(divide="ignore"):
        lg = lw + np.log(np.abs(v))
    lg = np.where(np.abs(v) == 0, -np.inf, lg)
    if np.any(np.isnan(lg)) or np.any(lg == np.inf):
        raise OverflowError("weight times field is not finite")
    if p in (np.inf, "inf", math.inf):
        m = float(np.max(lg))
        if m > 700:
            raise OverflowError("weighted sup norm overflows")
        return math.exp(m) if np.isfinite(m) else 0.0
    p = float(p)
    m = float(np.max(lg))
    if not np.isfinite(m):
        return 0.0
    scaled = np.exp(p * (lg - m))
    val = float(np.real(_trapz2(scaled, F.spacing))) ** (1.0 / p)
    res = math.exp(m) * val if m < 700 else math.inf
    if not np.isfinite(res):
        raise OverflowError("weighted norm overflows")
    return res


# ---------------------------------------------------------------------------
# Carleman weights
# ---------------------------------------------------------------------------


def phi0_radial(r, j: int, delta: float | None = None) -> np.ndarray:
    """Radial profile of phi0 solving ``Delta phi0 = x^(2 + j... )`` on the plane.

    ``j = 2``: ``-r^2/4`` (so Delta phi0 = 1). ``j = 1``: solution of
    ``Delta phi0 = x^(2 - delta)`` with ``x = (1+r^2)^(-1/2)``, normalised so
    that ``phi0 = -r^delta/delta^2 + (1/delta) log r + o(1)`` as r grows.
    """
    r = np.asarray(r, dtype=float)
    if j == 2:
        return -0.25 * r * r
    if j != 1:
        raise ValueError("growth class must be 1 or 2")
    if delta is None or not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    return -_phi0_linear_neg(r, float(delta))


def phi0_log_coefficient(delta: float) -> float:
    """Coefficient c of ``c log x`` in the expansion of phi0 for linear growth."""
    return -1.0 / delta


@lru_cache(maxsize=8)
def _phi0_linear_table(delta: float):
    # -phi0(r) = int_0^r ((1+s^2)^(d/2) - 1)/(d s) ds - C, tabulated in log r.
    from scipy.integrate import quad

    f = lambda s: ((1 + s * s) ** (delta / 2) - 1) / (delta * s) if s > 0 else 0.0
    rmax = 1e6
    big = quad(f, 0, 1, limit=200)[0] + quad(f, 1, rmax, limit=400)[0]
    # asymptotic constant: integral - (r^d/d^2 - log r/d) -> C as r -> inf
    tail = _tail_correction(rmax, delta)
    C = big - (rmax ** delta / delta ** 2 - math.log(rmax) / delta) + tail
    return C


def _tail_correction(r: float, d: float) -> float:
    # int_r^inf [((1+s^2)^(d/2)-1)/(d s) - s^(d-1)/d + 1/(d s)] ds ~ int (d/2) s^(d-3)/d ds
    return 0.5 * r ** (d - 2) / (2 - d)


def _phi0_linear_neg(r: np.ndarray, delta: float) -> np.ndarray:
    from scipy.interpolate import CubicSpline

    C = _phi0_linear_table(delta)
    flat = r.ravel()
    rmax = float(flat.max()) if flat.size else 0.0
    # spline in u = asinh(r) resolves both the core and the far end
    u = np.linspace(0.0, math.asinh(max(rmax, 1.0)) + 1e-6, 4001)
    s = np.sinh(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(s > 0, ((1 + s * s) ** (delta / 2) - 1) / (delta * s), 0.0) * np.cosh(u)
    prim = CubicSpline(u, g).antiderivative()
    return (prim(np.arcsinh(flat)) - C).reshape(r.shape)


def phi0(model: SurfaceModel, j: int, delta: float | None, R: float, n: int) -> Field:
    """Correction weight phi0 sampled on the plane chart (end at infinity)."""
    del model  # the plane chart is used for all models; see README
    z = _grid(float(R), int(n))
    return Field(R, n, phi0_radial(np.abs(z), j, delta).astype(complex))


def convexified_weight(phi: Field, phi0_field: Field, h: float, eps: float) -> Field:
    """``phi - (h/eps) phi0``."""
    if h < 0 or eps <= 0:
        raise ValueError("need h >= 0 and eps > 0")
    return phi - (h / eps) * phi0_field


# ---------------------------------------------------------------------------
# Off-grid evaluation
# ---------------------------------------------------------------------------


def evaluate_spectral(F: Field, points, dz_order: int = 0, taper: bool = True) -> np.ndarray:
    """Trigonometric interpolant of the (tapered) field, or its ``d_z^k``, at arbitrary points."""
    v = F.values * F.taper if taper else F.values
    C = sfft.fft2(v, workers=fft_workers()) / (F.n * F.n)
    kx, ky = _wavenumbers(F.n, F.spacing)
    if dz_order:
        C = C * (0.5 * (1j * kx + ky)) ** dz_order
    out = []
    for p in np.atleast_1d(np.asarray(points, dtype=complex)):
        ex = np.exp(1j * kx[:, 0] * (p.real + F.R))
        ey = np.exp(1j * ky[0, :] * (p.imag + F.R))
        out.append(ex @ C @ ey)
    return np.array(out)


def smooth_odd_size(target: int) -> int:
    """Smallest odd integer >= target whose prime factors are at most 11 (fast FFT sizes)."""
    m = max(17, int(target) | 1)
    while True:
        k = m
        for p in (3, 5, 7, 11):
            while k % p == 0:
                k //= p
        if k == 1:
            return m
        m += 2
