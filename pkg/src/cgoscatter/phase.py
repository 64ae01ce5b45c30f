"""Morse holomorphic phases, amplitudes and Taylor-matching correctors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .geometry import (RationalFunction, SurfaceModel, basis_of_space, cluster_roots,
                       is_inf, _series_divide, _shift)

log = logging.getLogger(__name__)

MORSE_TOL = 1e-6


class PhaseConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class MorsePhase:
    """Holomorphic phase ``Phi = phi + i psi`` with its critical-point data."""

    phi: RationalFunction
    center: complex
    critical_points: list = field(default_factory=list)  # [(point, multiplicity)]
    hessians: list = field(default_factory=list)  # Phi''(c) for each critical point
    growth_class: int = 2
    model: SurfaceModel = field(default_factory=SurfaceModel)

    def __call__(self, z):
        return self.phi(z)

    @property
    def derivative(self) -> RationalFunction:
        return self.phi.derivative()

    @property
    def second_derivative(self) -> RationalFunction:
        return self.phi.derivative(2)

    def real(self, z):
        return np.real(self.phi(z))

    def imag(self, z):
        return np.imag(self.phi(z))

    @property
    def other_critical_points(self) -> list[complex]:
        return [c for c, _ in self.critical_points if abs(c - self.center) > 1e-9 * max(1, abs(c))]

    def hessian_at(self, c: complex) -> complex:
        return complex(self.second_derivative(c))

    def is_morse(self) -> bool:
        return _is_morse(self.phi, self.critical_points)

    def negated(self) -> "MorsePhase":
        return MorsePhase(-self.phi, self.center, list(self.critical_points),
                          [-h for h in self.hessians], self.growth_class, self.model)


def critical_points(phi: RationalFunction, tol: float = 1e-7) -> list[tuple[complex, int]]:
    """Zeros of ``phi'`` off the poles of ``phi``, with multiplicity.

    Raises ``PhaseConstructionError`` if a returned root has a large residual.
    """
    if phi.num_degree == 0 and phi.den_degree == 0:
        raise ValueError("constant function: every point is critical")
    num = phi.derivative_numerator()
    if len(num) <= 1:
        return []
    roots = P.polyroots(num)
    poles = [p for p, _ in phi.poles()]
    roots = [r for r in roots if all(abs(r - q) > 1e-6 * max(1, abs(q)) for q in poles)]
    out = cluster_roots(roots, tol)
    dphi = phi.derivative()
    scale = max(1.0, max((abs(r) for r, _ in out), default=1.0))
    for r, m in out:
        res = abs(P.polyval(r, num)) / (np.max(np.abs(num)) * scale ** (len(num) - 1))
        if not np.isfinite(dphi(r)) or res > 1e-6:
            raise PhaseConstructionError(f"root finder did not converge at {r} (residual {res:.2e})")
    return out


def _is_morse(phi: RationalFunction, crit: Sequence) -> bool:
    if not crit:
        return True
    scale = phi.coefficient_scale()
    d2 = phi.derivative(2)
    for c, m in crit:
        if m != 1 or abs(d2(c)) < MORSE_TOL * scale:
            return False
    return True


def _constraint_nullspace(basis: Sequence[RationalFunction], p: complex) -> list[RationalFunction]:
    row = np.array([f.derivative()(p) for f in basis])
    _, s, vh = np.linalg.svd(row[None, :])
    null = (vh[1:] if s[0] > 1e-14 else vh).conj()
    out = []
    for v in null:
        f = RationalFunction.constant(0.0)
        for c, g in zip(v, basis):
            if abs(c) > 1e-14:
                f = f + c * g
        out.append(f)
    return out


def construct_phase(p: complex, model: SurfaceModel, j: int = 2, seed: int = 0,
                    max_retries: int = 10, eps: float = 0.1,
                    candidate: RationalFunction | None = None) -> MorsePhase:
    """Morse phase in the growth-``j`` space with a critical point exactly at ``p``.

    Starts from ``(z-p)^2`` (``j=2``) or ``(z-p)^2/(z-e1)`` (``j=1``). When the
    candidate is not Morse it is perturbed inside the subspace of the growth
    space whose derivative vanishes at ``p``, with seeded random coefficients
    and a geometrically shrinking size.
    """
    p = complex(p)
    if any(not is_inf(e) and abs(p - e) < 1e-12 for e in model.punctures):
        raise ValueError("the critical point cannot be a puncture")
    if not model.supports_growth(j):
        raise ValueError(f"growth class {j} needs more ends than {model.end_count}")
    if candidate is None:
        if j == 2:
            candidate = RationalFunction.monomial(2, p)
        else:
            e1 = model.finite_punctures[0]
            candidate = RationalFunction.from_roots(zeros=[p, p], poles=[e1])
    basis = basis_of_space(model.punctures, j)
    phi = candidate
    rng = np.random.default_rng(seed)
    directions = _constraint_nullspace(basis, p)
    for attempt in range(max_retries + 1):
        try:
            crit = critical_points(phi) if (phi.num_degree + phi.den_degree) > 0 else None
        except (ValueError, PhaseConstructionError):
            crit = None
        if crit is not None:
            on_p = any(abs(c - p) < 1e-7 * max(1, abs(p)) for c, _ in crit)
            off_punct = all(model.distance_to_punctures(c) > 1e-9 for c, _ in crit)
            if on_p and off_punct and _is_morse(phi, crit):
                crit = [(p if abs(c - p) < 1e-7 * max(1, abs(p)) else c, m) for c, m in crit]
                hess = [complex(phi.derivative(2)(c)) for c, _ in crit]
                if attempt:
                    log.info("construct_phase: Morse after %d perturbation(s)", attempt)
                return MorsePhase(phi, p, crit, hess, j, model)
        if attempt == max_retries:
            break
        size = eps * max(1.0, candidate.coefficient_scale()) * 0.7 ** attempt
        coeffs = rng.standard_normal(len(directions)) + 1j * rng.standard_normal(len(directions))
        pert = RationalFunction.constant(0.0)
        for c, g in zip(coeffs, directions):
            pert = pert + c * g
        phi = candidate + size * pert
    raise PhaseConstructionError(f"no Morse phase at {p} after {max_retries} retries")


def construct_amplitude(p: complex, others: Sequence[complex], L: int = 3) -> RationalFunction:
    """Polynomial nonvanishing at ``p`` with zeros of order ``L`` at each of ``others``."""
    for q in others:
        if abs(q - p) < 1e-12:
            raise ValueError("p must differ from the points where the amplitude vanishes")
    zeros = [q for q in others for _ in range(L)]
    return RationalFunction.from_roots(zeros=zeros)


def taylor_match(jet: Sequence[complex], p0: complex, zero_points: Sequence[complex] = (),
                 L: int = 3) -> RationalFunction:
    """Polynomial with Taylor jet ``jet`` at ``p0`` vanishing to order ``L`` at ``zero_points``.

    Built as ``q(z) * prod (z - p_j)^L`` with ``q`` of degree ``len(jet) - 1``.
    """
    jet = np.asarray(jet, dtype=complex)
    K = len(jet) - 1
    w = construct_amplitude(p0, zero_points, L) if len(zero_points) else RationalFunction.constant(1.0)
    wt = w.taylor(p0, K)
    q_local = _series_divide(jet, wt, K)  # coefficients in (z - p0)
    q = np.zeros(K + 1, dtype=complex)
    for k, c in enumerate(q_local):
        q[: k + 1] += c * P.polyfromroots([p0] * k) if k else c
    return RationalFunction.polynomial(q) * w


def hermite_match(jets: Mapping[complex, Sequence[complex]]) -> RationalFunction:
    """Polynomial whose Taylor jet at each key point equals the given coefficients."""
    pts = list(jets)
    order = max(len(v) for v in jets.values())
    f = RationalFunction.constant(0.0)
    for i, pt in enumerate(pts):
        others = pts[:i] + pts[i + 1:]
        # jets of already built terms at pt are zero because of the vanishing factor
        f = f + taylor_match(jets[pt], pt, others, L=order)
    return f


def shift_polynomial(c: np.ndarray, a: complex) -> np.ndarray:
    return _shift(c, a)
