"""h-sweep of the CGO remainders with log-log slopes."""

import argparse
import csv
from pathlib import Path

from cgoscatter.cgo import CutoffRadii, assemble_cgo, choose_grid, slope
from cgoscatter.geometry import RationalFunction, SurfaceModel
from cgoscatter.phase import construct_phase
from cgoscatter.potentials import GaussianBump

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
ap.add_argument("--ppw", type=float, default=2.5, help="grid points per wavelength of e^{2i psi/h}")
ap.add_argument("--out", type=Path, default=Path("runs/scripts"))
a = ap.parse_args()
a.out.mkdir(parents=True, exist_ok=True)

phase = construct_phase(0.0, SurfaceModel(), 2)
V = GaussianBump(1.0, 0.2 + 0.1j, 0.5)
keys = ["xJ_r1", "conj_residual", "weighted_r2", "pde_residual_rel", "gmres_iterations"]
rows = []
for h in a.h:
    s = assemble_cgo(phase, RationalFunction.constant(1.0), V, 1.0, h, 2.0, choose_grid(2.0, h, phase, a.ppw),
                     cutoffs=CutoffRadii().scaled(0.5))
    rows.append([h] + [s.norms[k] for k in keys])
    print(f"h={h:<8g} " + " ".join(f"{k}={s.norms[k]:.3e}" for k in keys[:4]), flush=True)
with open(a.out / "cgo_slopes.csv", "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["h"] + keys)
    w.writerows(rows)
col = {k: [r[i + 1] for r in rows] for i, k in enumerate(keys)}
print(f"slopes: x^J r1 {slope(a.h, col['xJ_r1']):.2f}, "
      f"conj/|log h| {slope(a.h, col['conj_residual'], log_divide=True):.2f}, "
      f"weighted r2 {slope(a.h, col['weighted_r2']):.2f}")
