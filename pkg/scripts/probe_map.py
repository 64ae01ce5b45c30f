"""Stationary-phase estimate of V1 - V2 on a grid of probe points."""

import argparse
from pathlib import Path

import numpy as np

from cgoscatter.identify import pointwise_difference, write_probe_csv
from cgoscatter.potentials import GaussianBump

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--half-width", type=float, default=1.0)
ap.add_argument("--points", type=int, default=5, help="probes per axis")
ap.add_argument("--h", type=float, nargs="+", default=[0.16, 0.08, 0.04, 0.02])
ap.add_argument("--out", type=Path, default=Path("runs/scripts"))
a = ap.parse_args()
a.out.mkdir(parents=True, exist_ok=True)

V1 = GaussianBump(1.0, 0.3 + 0.2j, 0.8)
V2 = GaussianBump(0.4, -0.4 - 0.1j, 0.5)
t = np.linspace(-a.half_width, a.half_width, a.points)
reps = [pointwise_difference(V1, V2, complex(x, y), h_list=a.h) for x in t for y in t]
write_probe_csv(a.out / "probe_map.csv", reps)
print(f"{len(reps)} probes, max relative error {max(r.rel_error for r in reps):.2e}")
