"""Recovering a potential from its scattering matrix at one energy, on punctured planes with flat ends.

Modules: ``geometry`` and ``phase`` (rational functions, Morse phases),
``fieldops`` (grids, FFT transforms, weighted norms), ``carleman`` and ``cgo``
(limiting-weight estimates and complex geometrical optics solutions),
``scattering`` (Lippmann-Schwinger solver and S-matrix), ``identify``
(stationary-phase recovery of ``V1 - V2``), ``paleywiener`` (Gaussian-class
Fourier bounds) and ``cli``.
"""

__version__ = "0.1.0"
