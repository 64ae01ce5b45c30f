"""Fit a CGO solution near the origin by Poisson solutions of growing mode cutoff."""

import argparse

import numpy as np

from cgoscatter.cgo import CutoffRadii, assemble_cgo
from cgoscatter.fieldops import evaluate_spectral
from cgoscatter.geometry import RationalFunction, SurfaceModel
from cgoscatter.phase import construct_phase
from cgoscatter.potentials import GaussianBump
from cgoscatter.scattering import ScatteringProblem, density_proxy_fit

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--h", type=float, default=0.05)
ap.add_argument("--radius", type=float, default=0.3, help="radius of the fitting disk")
ap.add_argument("--m-max", type=int, default=12)
a = ap.parse_args()

V = GaussianBump(1.0, 0.2 + 0.1j, 0.5)
q = construct_phase(0.0, SurfaceModel(), 2)
sol = assemble_cgo(q, RationalFunction.constant(1.0), V, 1.0, a.h, 2.0, cutoffs=CutoffRadii().scaled(0.5))
g = np.linspace(-a.radius, a.radius, 15)
pts = (g[:, None] + 1j * g[None, :]).ravel()
pts = pts[np.abs(pts) <= a.radius]
target = evaluate_spectral(sol.amplitude_field(), pts) * np.exp(q.phi(pts) / a.h)
fit = density_proxy_fit(target, pts, ScatteringProblem(V, 1.0, a.m_max, n=161), range(2, a.m_max + 1))
print("mMax,residual,rank")
for m, r, k in zip(fit.m_values, fit.residuals, fit.ranks):
    print(f"{m},{r:.6e},{k}")
