"""Test potentials: Gaussian bumps and mixtures, compact Hölder bumps, smooth radial wells.

Each potential is a callable ``V(z)`` on complex arrays and carries a decay
class tag: ``"gaussian"`` (decays like e^{-gamma |z|^2}) or ``"compact"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaussianBump:
    amplitude: complex = 1.0
    center: complex = 0.0
    width: float = 1.0
    decay_class: str = field(default="gaussian", init=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.amplitude * np.exp(-np.abs(z - self.center) ** 2 / self.width ** 2)

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class GaussianMixture:
    bumps: tuple = ()
    decay_class: str = field(default="gaussian", init=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for b in self.bumps:
            out = out + b(z)
        return out

    @property
    def sup_norm(self) -> float:
        return float(sum(b.sup_norm for b in self.bumps))


@dataclass(frozen=True)
class CompactBump:
    """``A (1 - |z-c|^2/rho^2)_+^(1+alpha)``: C^{1,alpha} with support in a disk."""

    amplitude: complex = 1.0
    center: complex = 0.0
    radius: float = 1.0
    alpha: float = 0.5
    decay_class: str = field(default="compact", init=False)

    def __call__(self, z):
        t = 1.0 - np.abs(np.asarray(z, dtype=complex) - self.center) ** 2 / self.radius ** 2
        return self.amplitude * np.clip(t, 0.0, None) ** (1.0 + self.alpha)


@dataclass(frozen=True)
class RadialWell:
    """Smooth compactly supported radial potential ``A exp(1 - 1/(1 - (r/rho)^2))``."""

    amplitude: float = -1.0
    radius: float = 1.5
    decay_class: str = field(default="compact", init=False)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        t = (r / self.radius) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            v = np.where(t < 1.0, np.exp(1.0 - 1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
        return self.amplitude * v

    def __call__(self, z):
        return self.radial(np.abs(np.asarray(z, dtype=complex))).astype(complex)


def random_gaussian_potential(seed: int, count: int = 2, max_sup: float = 1.0,
                              spread: float = 1.0, width_range=(0.6, 1.2)) -> GaussianMixture:
    """Real Gaussian mixture with sup norm at most ``max_sup``."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-1, 1, count)
    amps = amps * max_sup / max(np.sum(np.abs(amps)), 1e-12) * rng.uniform(0.5, 1.0)
    bumps = tuple(GaussianBump(float(a), complex(*rng.uniform(-spread, spread, 2)),
                               float(rng.uniform(*width_range))) for a in amps)
    return GaussianMixture(bumps)


def potential_from_config(cfg: dict):
    """Build a potential from a plain mapping (``kind`` plus parameters)."""
    kind = cfg.get("kind", "gaussianBump")
    c = cfg.get("center", [0.0, 0.0])
    center = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
    if kind == "gaussianBump":
        return GaussianBump(cfg.get("amplitude", 1.0), center, cfg.get("width", 1.0))
    if kind == "gaussianMixture":
        return GaussianMixture(tuple(potential_from_config(dict(b, kind="gaussianBump"))
                                     for b in cfg.get("bumps", [])))
    if kind in ("compactBump", "compactBumpC1a"):
        return CompactBump(cfg.get("amplitude", 1.0), center, cfg.get("radius", 1.0), cfg.get("alpha", 0.5))
    if kind == "radialWell":
        return RadialWell(cfg.get("amplitude", -1.0), cfg.get("radius", 1.5))
    if kind == "zero":
        return GaussianBump(0.0, 0.0, 1.0)
    raise ValueError(f"unknown potential kind {kind!r}")


@dataclass(frozen=True)
class PotentialFamily:
    name: str
    params: tuple
    decay_classes: tuple  # subset of ("j=1", "j=2", "compact")
    note: str = ""


def list_potential_families() -> list[PotentialFamily]:
    both = ("j=1", "j=2", "compact")
    return [
        PotentialFamily("gaussianBump", ("center", "width", "amplitude"), ("j=1", "j=2"),
                        "in e^{-gamma|z|^2} L^inf for every gamma < 1/width^2"),
        PotentialFamily("gaussianMixture", ("bumps",), ("j=1", "j=2"), "gamma limited by the widest bump"),
        PotentialFamily("compactBumpC1a", ("center", "radius", "alpha", "amplitude"), both,
                        "C^{1,alpha} but not C^2 at the rim"),
        PotentialFamily("radialWell", ("radius", "amplitude"), both, "smooth, compact support"),
    ]


def gaussian_rate_bound(V) -> float:
    """Supremum of the admissible ``gamma`` in ``V in e^{-gamma |z|^2} L^inf`` (not attained for bumps)."""
    if getattr(V, "decay_class", None) == "compact":
        return math.inf
    if isinstance(V, GaussianBump):
        return math.inf if V.amplitude == 0 else 1.0 / V.width ** 2
    if isinstance(V, GaussianMixture):
        live = [b for b in V.bumps if b.amplitude != 0]
        return min((1.0 / b.width ** 2 for b in live), default=math.inf)
    raise ValueError(f"no decay information for {type(V).__name__}")


def holder_exponent(V: CompactBump, samples: int = 12) -> float:
    """Finite-difference estimate of the Hölder exponent of ``grad V`` at the rim.

    Fits ``log |V'(rho - s) - V'(rho)|`` against ``log s`` with centred radial
    differences; ``V'(rho) = 0`` for this family.
    """
    s = np.geomspace(1e-5, 1e-2, samples) * V.radius
    eps = 1e-3 * s
    r = V.radius - s
    vp = lambda x: V(V.center + x)
    d = np.abs((vp(r + eps) - vp(r - eps)) / (2 * eps))
    return float(np.polyfit(np.log(s), np.log(d), 1)[0])
