"""Genus-zero surfaces with Euclidean ends, divisors and Riemann-Roch bookkeeping.

A surface is the Riemann sphere with finitely many punctures; the point at
infinity is always one of them, so the plane coordinate ``z`` is the chart of
one Euclidean end. Finite punctures are the other ends, reached through the
end coordinate ``w = 1/(z - e)``.

Points of the extended plane are represented by Python complex numbers, with
the float ``math.inf`` (exported as :data:`INF`) standing for the point at
infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

INF = math.inf
GENUS = 0


def is_inf(p) -> bool:
    return isinstance(p, float) and math.isinf(p)


def _norm_point(p):
    if is_inf(p):
        return INF
    return complex(p)


# ---------------------------------------------------------------------------
# Divisors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Divisor:
    """Finite formal product of points with integer exponents."""

    entries: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, k in dict(self.entries).items():
            k = int(k)
            if k != 0:
                p = _norm_point(p)
                clean[p] = clean.get(p, 0) + k
        clean = {p: k for p, k in clean.items() if k != 0}
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, p) -> int:
        """Exponent at ``p``; finite points match within ``1e-6`` relative distance."""
        p = _norm_point(p)
        if is_inf(p):
            return self.entries.get(INF, 0)
        return sum(k for q, k in self.entries.items()
                   if not is_inf(q) and abs(q - p) <= 1e-6 * max(1.0, abs(p)))

    def __iter__(self):
        return iter(self.entries.items())

    def __len__(self):
        return len(self.entries)

    def __mul__(self, other: "Divisor") -> "Divisor":
        out = dict(self.entries)
        for p, k in other.entries.items():
            out[p] = out.get(p, 0) + k
        return Divisor(out)

    def inverse(self) -> "Divisor":
        return Divisor({p: -k for p, k in self.entries.items()})

    def __ge__(self, other: "Divisor") -> bool:
        pts = set(self.entries) | set(other.entries)
        return all(self[p] >= other[p] for p in pts)

    @property
    def degree(self) -> int:
        return divisor_degree(self)

    def __repr__(self) -> str:
        parts = []
        for p, k in sorted(self.entries.items(), key=lambda t: (is_inf(t[0]), str(t[0]))):
            name = "inf" if is_inf(p) else f"{p:g}"
            parts.append(f"{name}^{k}")
        return "Divisor(" + " ".join(parts) + ")"


def divisor_degree(D: Divisor) -> int:
    return int(sum(D.entries.values()))


# ---------------------------------------------------------------------------
# Rational functions on the sphere
# ---------------------------------------------------------------------------


def _trim(c: np.ndarray, tol: float = 0.0) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    k = c.size
    while k > 1 and abs(c[k - 1]) <= tol * scale:
        k -= 1
    return c[:k].copy()


def cluster_roots(roots: Iterable[complex], tol: float) -> list[tuple[complex, int]]:
    """Group numerically coincident roots; returns (mean root, multiplicity)."""
    roots = list(roots)
    groups: list[list[complex]] = []
    for r in roots:
        for g in groups:
            if abs(r - np.mean(g)) <= tol * max(1.0, abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


@dataclass(frozen=True)
class RationalFunction:
    """Quotient of complex polynomials with monic denominator.

    Coefficients are stored in ascending order (``c[k]`` multiplies ``z**k``).
    Common factors are cancelled numerically on construction.
    """

    numerator: np.ndarray
    denominator: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))

    def __post_init__(self):
        num = _trim(self.numerator, 1e-14)
        den = _trim(self.denominator, 1e-14)
        if np.all(den == 0):
            raise ValueError("zero denominator")
        num, den = _cancel(num, den)
        lead = den[-1]
        object.__setattr__(self, "numerator", num / lead)
        object.__setattr__(self, "denominator", den / lead)

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, c: complex) -> "RationalFunction":
        return cls(np.array([c], dtype=complex))

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> "RationalFunction":
        return cls(np.asarray(coeffs, dtype=complex))

    @classmethod
    def from_roots(cls, zeros: Iterable[complex] = (), poles: Iterable[complex] = (),
                   scale: complex = 1.0) -> "RationalFunction":
        num = P.polyfromroots(list(zeros)) if list(zeros) else np.ones(1)
        den = P.polyfromroots(list(poles)) if list(poles) else np.ones(1)
        return cls(scale * np.asarray(num, dtype=complex), np.asarray(den, dtype=complex))

    @classmethod
    def monomial(cls, k: int, center: complex = 0.0) -> "RationalFunction":
        """``(z - center)**k`` for any integer ``k``."""
        if k >= 0:
            return cls.from_roots(zeros=[center] * k)
        return cls.from_roots(poles=[center] * (-k))

    # basic properties -----------------------------------------------------
    @property
    def num_degree(self) -> int:
        return len(self.numerator) - 1

    @property
    def den_degree(self) -> int:
        return len(self.denominator) - 1

    def is_zero(self) -> bool:
        return bool(np.all(self.numerator == 0))

    def is_polynomial(self) -> bool:
        return self.den_degree == 0

    def poles(self) -> list[tuple[complex, int]]:
        if self.den_degree == 0:
            return []
        return cluster_roots(P.polyroots(self.denominator), 1e-7)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return P.polyval(z, self.numerator) / P.polyval(z, self.denominator)

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        return RationalFunction.constant(complex(other))

    def __add__(self, other):
        o = self._coerce(other)
        if len(o.denominator) == len(self.denominator) and np.allclose(
                o.denominator, self.denominator, rtol=1e-13, atol=1e-13):
            return RationalFunction(P.polyadd(self.numerator, o.numerator), self.denominator)
        num = P.polyadd(P.polymul(self.numerator, o.denominator), P.polymul(o.numerator, self.denominator))
        return RationalFunction(num, P.polymul(self.denominator, o.denominator))

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RationalFunction(P.polymul(self.numerator, o.numerator), P.polymul(self.denominator, o.denominator))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return RationalFunction(P.polymul(self.numerator, o.denominator), P.polymul(self.denominator, o.numerator))

    def __pow__(self, k: int):
        out = RationalFunction.constant(1.0)
        base = self if k >= 0 else RationalFunction.constant(1.0) / self
        for _ in range(abs(int(k))):
            out = out * base
        return out

    def derivative(self, order: int = 1) -> "RationalFunction":
        f = self
        for _ in range(order):
            n, d = f.numerator, f.denominator
            num = P.polysub(P.polymul(P.polyder(n) if len(n) > 1 else [0], d),
                            P.polymul(n, P.polyder(d) if len(d) > 1 else [0]))
            f = RationalFunction(num, P.polymul(d, d))
        return f

    def derivative_numerator(self) -> np.ndarray:
        """Numerator ``N'D - ND'`` of the derivative before any cancellation."""
        n, d = self.numerator, self.denominator
        dn = P.polyder(n) if len(n) > 1 else np.zeros(1)
        dd = P.polyder(d) if len(d) > 1 else np.zeros(1)
        return _trim(P.polysub(P.polymul(dn, d), P.polymul(n, dd)), 1e-14)

    def taylor(self, center: complex, order: int) -> np.ndarray:
        """Taylor coefficients ``c_0..c_order`` at a finite regular point."""
        num = _shift(self.numerator, center)
        den = _shift(self.denominator, center)
        return _series_divide(num, den, order)

    def coefficient_scale(self) -> float:
        return float(max(np.max(np.abs(self.numerator)), 1e-300))

    def __repr__(self):
        return f"RationalFunction(num={np.round(self.numerator, 12)}, den={np.round(self.denominator, 12)})"


def _shift(c: np.ndarray, a: complex) -> np.ndarray:
    """Coefficients of p(a + t) in t."""
    n = len(c)
    out = np.zeros(n, dtype=complex)
    for k, ck in enumerate(c):
        for j in range(k + 1):
            out[j] += ck * comb(k, j) * a ** (k - j)
    return out


def _series_divide(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    if abs(den[0]) == 0:
        raise ValueError("series expansion at a pole")
    num = np.concatenate([num, np.zeros(max(0, order + 1 - len(num)))])
    den = np.concatenate([den, np.zeros(max(0, order + 1 - len(den)))])
    out = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        s = num[k] - sum(out[j] * den[k - j] for j in range(k))
        out[k] = s / den[0]
    return out


def _cancel(num: np.ndarray, den: np.ndarray, tol: float = 1e-8):
    """Remove numerically common roots of ``num`` and ``den``."""
    if len(den) <= 1 or len(num) <= 1 or np.all(num == 0):
        if np.all(num == 0):
            return np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
        return num, den
    rn = list(P.polyroots(num))
    rd = list(P.polyroots(den))
    common = []
    for r in list(rd):
        for i, s in enumerate(rn):
            if abs(r - s) <= tol * max(1.0, abs(r)):
                common.append(r)
                rn.pop(i)
                rd.remove(r)
                break
    if not common:
        return num, den
    num_new = num[-1] * (P.polyfromroots(rn) if rn else np.ones(1))
    den_new = den[-1] * (P.polyfromroots(rd) if rd else np.ones(1))
    return np.asarray(num_new, dtype=complex), np.asarray(den_new, dtype=complex)


def principal_divisor(f: RationalFunction) -> Divisor:
    """Zeros and poles of ``f`` with multiplicity, the point at infinity included."""
    if f.is_zero():
        raise ValueError("the zero function has no divisor")
    entries: dict = {}
    if f.num_degree > 0:
        for r, m in cluster_roots(P.polyroots(f.numerator), 1e-7):
            entries[r] = entries.get(r, 0) + m
    for r, m in f.poles():
        entries[r] = entries.get(r, 0) - m
    at_inf = f.den_degree - f.num_degree
    if at_inf:
        entries[INF] = at_inf
    return Divisor(entries)


# ---------------------------------------------------------------------------
# Riemann-Roch on the sphere
# ---------------------------------------------------------------------------


def riemann_roch_dim(D: Divisor) -> int:
    """Dimension of ``{f : (f) >= D^{-1}}`` for genus zero.

    Valid when ``deg D > 2(g - 1) = -2``, where the index of specialty vanishes.
    """
    d = divisor_degree(D)
    if d <= 2 * (GENUS - 1):
        raise ValueError(f"riemann_roch_dim needs deg(D) > {2 * (GENUS - 1)}, got {d}")
    return d - GENUS + 1


def _pole_part_basis(D: Divisor) -> list[RationalFunction]:
    basis = [RationalFunction.constant(1.0)]
    for p, k in D:
        if k <= 0:
            continue
        for m in range(1, k + 1):
            basis.append(RationalFunction.monomial(m) if is_inf(p) else RationalFunction.monomial(-m, p))
    return basis


def _local_coefficients(f: RationalFunction, q, count: int) -> np.ndarray:
    """First ``count`` expansion coefficients of ``f`` at ``q`` in its local coordinate."""
    if not is_inf(q):
        return f.taylor(q, count - 1)
    # w = 1/z: f(1/w) = w^(dn - nn) * N~(w) / D~(w) with reversed coefficient lists
    num_r = f.numerator[::-1]
    den_r = f.denominator[::-1]
    shift = f.den_degree - f.num_degree
    if shift < 0:
        raise ValueError("pole at infinity where a zero is required")
    series = _series_divide(num_r, den_r, count)
    out = np.zeros(count, dtype=complex)
    for j in range(count):
        if j - shift >= 0:
            out[j] = series[j - shift]
    return out


def basis_for_divisor(D: Divisor, tol: float = 1e-9) -> list[RationalFunction]:
    """Basis of ``{f : (f) >= D^{-1}}``: poles bounded by the positive part of ``D``,
    zeros forced by the negative part."""
    cand = _pole_part_basis(D)
    rows = []
    for q, k in D:
        if k >= 0:
            continue
        coeffs = np.array([_local_coefficients(f, q, -k) for f in cand])  # (ncand, -k)
        rows.append(coeffs.T)
    if not rows:
        return cand
    A = np.vstack(rows)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    null = vh[rank:].conj().T  # (ncand, dim)
    out = []
    for col in null.T:
        f = RationalFunction.constant(0.0)
        for c, g in zip(col, cand):
            if abs(c) > 1e-13:
                f = f + c * g
        out.append(f)
    return out


def basis_of_space(punctures: Sequence, pole_order: int) -> list[RationalFunction]:
    """Basis of functions with poles only at ``punctures`` of order at most ``pole_order``."""
    pts = [_norm_point(p) for p in punctures]
    if INF not in pts:
        raise ValueError("the point at infinity must be a puncture")
    if pole_order not in (1, 2):
        raise ValueError("pole_order must be 1 or 2")
    if pole_order == 1 and len(pts) < 2:
        raise ValueError("linear growth needs at least two ends")
    return _pole_part_basis(Divisor({p: pole_order for p in pts}))


# ---------------------------------------------------------------------------
# Surface model
# ---------------------------------------------------------------------------


def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SurfaceModel:
    """Riemann sphere minus ``punctures``; each puncture is a Euclidean end.

    ``conformal_log`` gives sigma with metric ``exp(2 sigma)|dz|^2``. Near a finite
    puncture ``e`` it equals ``-2 log|z - e|`` inside radius ``r_in`` and is cut off
    smoothly to zero at ``r_out``; so the end is flat for ``|w| >= 1/r_in``.
    """

    punctures: tuple = (INF,)
    genus: int = 0

    def __post_init__(self):
        pts = tuple(_norm_point(p) for p in self.punctures)
        if INF not in pts:
            pts = pts + (INF,)
        if len(set(pts)) != len(pts):
            raise ValueError("punctures must be distinct")
        if self.genus != 0:
            raise ValueError("only genus zero surfaces are supported")
        object.__setattr__(self, "punctures", pts)

    @property
    def end_count(self) -> int:
        return len(self.punctures)

    @property
    def finite_punctures(self) -> list[complex]:
        return [p for p in self.punctures if not is_inf(p)]

    def supports_growth(self, j: int) -> bool:
        if j == 1:
            return self.end_count >= max(2 * self.genus + 1, 2)
        if j == 2:
            return self.end_count >= self.genus + 1
        return False

    def cutoff_radii(self) -> tuple[float, float]:
        fin = self.finite_punctures
        r_out = 1.0
        for i, a in enumerate(fin):
            for b in fin[i + 1:]:
                r_out = min(r_out, abs(a - b) / 2)
        return 0.5 * r_out, r_out

    def conformal_log(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        sigma = np.zeros(z.shape)
        r_in, r_out = self.cutoff_radii()
        for e in self.finite_punctures:
            d = np.abs(z - e)
            beta = 1.0 - _smoothstep((d - r_in) / (r_out - r_in))
            with np.errstate(divide="ignore"):
                sigma = sigma + np.where(beta > 0, -2.0 * np.log(np.where(d > 0, d, 1.0)) * beta, 0.0)
            sigma = np.where(d == 0, np.inf, sigma)
        return sigma

    def distance_to_punctures(self, z: complex) -> float:
        fin = self.finite_punctures
        return min((abs(z - e) for e in fin), default=math.inf)
