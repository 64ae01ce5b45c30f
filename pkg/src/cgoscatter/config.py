"""Experiment configuration: INI text with fixed sections.

Grammar (``;`` or ``#`` start comments, lists are comma separated, complex
numbers use Python syntax such as ``0.3+0.2j``)::

    [experiment]  kind (required), seed, out
    [grid]        R, n
    [model]       punctures, j, delta
    [potential]   family, amplitude, center, width, radius, alpha, bumps, count, gamma
    [potential2]  same keys; absent means V2 = 0
    [physics]     lambda (required), h, eps, m_max, match_radius
    [probes]      points
    [run]         count, cutoff_scale, points_per_wave, check_constant, identity_modes

``bumps`` for a ``gaussianMixture`` reads ``amp cx cy width; amp cx cy width``.
Family ``random`` draws a seeded real Gaussian mixture. Unknown sections or
keys are schema errors.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .potentials import (GaussianBump, GaussianMixture, potential_from_config, random_gaussian_potential)

KINDS = ("direct", "cgo", "carleman", "identify", "paleywiener", "uniqueness")
FAMILIES = ("zero", "gaussianBump", "gaussianMixture", "compactBump", "compactBumpC1a", "radialWell", "random")

SCHEMA = {
    "experiment": {"kind", "seed", "out"},
    "grid": {"r", "n"},
    "model": {"punctures", "j", "delta"},
    "potential": {"family", "amplitude", "center", "width", "radius", "alpha", "bumps", "count", "gamma"},
    "potential2": {"family", "amplitude", "center", "width", "radius", "alpha", "bumps", "count", "gamma"},
    "physics": {"lambda", "h", "eps", "m_max", "match_radius"},
    "probes": {"points"},
    "run": {"count", "cutoff_scale", "points_per_wave", "check_constant", "identity_modes"},
}


class ConfigError(ValueError):
    pass


@dataclass
class PotentialSpec:
    family: str = "zero"
    amplitude: complex = 1.0
    center: complex = 0.0
    width: float = 1.0
    radius: float = 1.0
    alpha: float = 0.5
    bumps: tuple = ()
    count: int = 2
    gamma: float | None = None

    def build(self, seed: int):
        if self.family == "random":
            return random_gaussian_potential(seed, self.count)
        if self.family == "gaussianMixture":
            return GaussianMixture(tuple(GaussianBump(a, complex(x, y), w) for a, x, y, w in self.bumps))
        amp = self.amplitude.real if complex(self.amplitude).imag == 0 else self.amplitude
        return potential_from_config(dict(kind=self.family, amplitude=amp, center=self.center,
                                          width=self.width, radius=self.radius, alpha=self.alpha))

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or (self.family != "random" and self.family != "gaussianMixture"
                                         and self.amplitude == 0)


@dataclass
class ExperimentConfig:
    kind: str
    lam: float
    seed: int = 0
    out: str | None = None
    R: float = 8.0
    n: int = 241
    punctures: tuple = ()
    j: int = 2
    delta: float | None = None
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    potential2: PotentialSpec = field(default_factory=PotentialSpec)
    h: tuple = (0.1, 0.05)
    eps: float = 0.1
    m_max: int = 4
    match_radius: float = 12.0
    probes: tuple = (0j,)
    count: int = 10
    cutoff_scale: float = 0.5
    points_per_wave: float = 2.5
    check_constant: bool = False
    identity_modes: int = 2

    def to_ini(self) -> str:
        def c(z):
            return repr(complex(z))

        def pot(p: PotentialSpec):
            d = {"family": p.family, "amplitude": c(p.amplitude), "center": c(p.center), "width": repr(p.width),
                 "radius": repr(p.radius), "alpha": repr(p.alpha), "count": str(p.count),
                 "bumps": "; ".join(" ".join(repr(float(v)) for v in b) for b in p.bumps)}
            if p.gamma is not None:
                d["gamma"] = repr(p.gamma)
            return d

        cp = configparser.ConfigParser(interpolation=None)
        cp["experiment"] = {"kind": self.kind, "seed": str(self.seed)}
        if self.out:
            cp["experiment"]["out"] = self.out
        cp["grid"] = {"R": repr(self.R), "n": str(self.n)}
        cp["model"] = {"punctures": ", ".join(c(p) for p in self.punctures), "j": str(self.j),
                       "delta": "" if self.delta is None else repr(self.delta)}
        cp["potential"] = pot(self.potential)
        cp["potential2"] = pot(self.potential2)
        cp["physics"] = {"lambda": repr(self.lam), "h": ", ".join(repr(h) for h in self.h), "eps": repr(self.eps),
                         "m_max": str(self.m_max), "match_radius": repr(self.match_radius)}
        cp["probes"] = {"points": ", ".join(c(p) for p in self.probes)}
        cp["run"] = {"count": str(self.count), "cutoff_scale": repr(self.cutoff_scale),
                     "points_per_wave": repr(self.points_per_wave),
                     "check_constant": str(self.check_constant).lower(), "identity_modes": str(self.identity_modes)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _num(cp, section, key, conv, default):
    raw = cp.get(section, key, fallback="").strip()
    if raw == "":
        return default
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _clist(s: str) -> tuple:
    return tuple(complex(x.replace(" ", "")) for x in s.split(",") if x.strip())


def _flist(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _bumps(s: str) -> tuple:
    out = []
    for item in s.split(";"):
        if item.strip():
            v = [float(x) for x in item.split()]
            if len(v) != 4:
                raise ValueError(f"bump needs 'amp cx cy width', got {item.strip()!r}")
            out.append(tuple(v))
    return tuple(out)


def _center(s: str) -> complex:
    parts = [p for p in s.split(",") if p.strip()]
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    return complex(s.replace(" ", ""))


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _potential(cp, name) -> PotentialSpec:
    if name not in cp:
        return PotentialSpec()
    fam = cp.get(name, "family", fallback="gaussianBump").strip()
    if fam not in FAMILIES:
        raise ConfigError(f"[{name}] family: unknown {fam!r}; choose from {', '.join(FAMILIES)}")
    p = PotentialSpec(
        family=fam,
        amplitude=_num(cp, name, "amplitude", lambda s: complex(s.replace(" ", "")), 1.0),
        center=_num(cp, name, "center", _center, 0j),
        width=_num(cp, name, "width", float, 1.0),
        radius=_num(cp, name, "radius", float, 1.0),
        alpha=_num(cp, name, "alpha", float, 0.5),
        bumps=_num(cp, name, "bumps", _bumps, ()),
        count=_num(cp, name, "count", int, 2),
        gamma=_num(cp, name, "gamma", float, None),
    )
    if fam == "gaussianMixture" and not p.bumps:
        raise ConfigError(f"[{name}] gaussianMixture needs bumps")
    if p.width <= 0 or p.radius <= 0:
        raise ConfigError(f"[{name}] width and radius must be positive")
    return p


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec].keys()) - SCHEMA[sec]
        if extra:
            raise ConfigError(f"[{sec}] unknown keys: {', '.join(sorted(extra))}")
    if "experiment" not in cp or not cp["experiment"].get("kind", "").strip():
        raise ConfigError("[experiment] kind is required")
    kind = cp["experiment"]["kind"].strip()
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    if "physics" not in cp or not cp["physics"].get("lambda", "").strip():
        raise ConfigError("[physics] lambda is required")
    cfg = ExperimentConfig(
        kind=kind,
        lam=_num(cp, "physics", "lambda", float, None),
        seed=_num(cp, "experiment", "seed", int, 0),
        out=cp.get("experiment", "out", fallback="").strip() or None,
        R=_num(cp, "grid", "r", float, 8.0),
        n=_num(cp, "grid", "n", int, 241),
        punctures=_num(cp, "model", "punctures", _clist, ()),
        j=_num(cp, "model", "j", int, 2),
        delta=_num(cp, "model", "delta", float, None),
        potential=_potential(cp, "potential"),
        potential2=_potential(cp, "potential2"),
        h=_num(cp, "physics", "h", _flist, (0.1, 0.05)),
        eps=_num(cp, "physics", "eps", float, 0.1),
        m_max=_num(cp, "physics", "m_max", int, 4),
        match_radius=_num(cp, "physics", "match_radius", float, 12.0),
        probes=_num(cp, "probes", "points", _clist, (0j,)),
        count=_num(cp, "run", "count", int, 10),
        cutoff_scale=_num(cp, "run", "cutoff_scale", float, 0.5),
        points_per_wave=_num(cp, "run", "points_per_wave", float, 2.5),
        check_constant=_num(cp, "run", "check_constant", _bool, False),
        identity_modes=_num(cp, "run", "identity_modes", int, 2),
    )
    _validate(cfg)
    return cfg


def _validate(c: ExperimentConfig) -> None:
    if c.kind in ("direct", "identify", "uniqueness") and c.lam <= 0:
        raise ConfigError("lambda must be positive for scattering experiments")
    if c.lam < 0:
        raise ConfigError("lambda must be non-negative")
    if c.j not in (1, 2):
        raise ConfigError("model j must be 1 or 2")
    if c.j == 1 and c.delta is None and c.kind in ("carleman", "cgo"):
        raise ConfigError("linear growth (j = 1) needs delta")
    if c.n < 16 or c.R <= 0:
        raise ConfigError("grid needs n >= 16 and R > 0")
    if not c.h or any(h <= 0 for h in c.h):
        raise ConfigError("h schedule must be non-empty and positive")
    if c.m_max < 0 or c.count < 1 or c.eps <= 0:
        raise ConfigError("m_max >= 0, count >= 1 and eps > 0 are required")
    if c.kind in ("identify", "uniqueness", "cgo", "carleman") and not c.probes:
        raise ConfigError("[probes] points must list at least one point")


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)
