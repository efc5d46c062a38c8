#!/usr/bin/env python3
"""Burgers shock against the exact Riemann solution.

Monotone working range, first-order upwind scheme: the shock travels at
the Rankine-Hugoniot speed and the L1 error stays within two cells.
Mass accounting (boundary corrected) holds to round-off each step.
"""

import numpy as np

from bvcalc import BVFunction, FluxModel, ScalarFlux, SmoothFunction, solve_claw

UL, UR, X0, T = 1.5, 0.5, 0.3, 0.5

B = FluxModel(((BVFunction.constant(0.0, 1.0, 1.0), SmoothFunction.poly1d((0.0, 0.0, 0.5), "w^2/2")),))
flux = ScalarFlux(B, 0.1, 2.0)
u0 = BVFunction.from_poly(0.0, 1.0, (UL,)) + BVFunction.heaviside(0.0, 1.0, X0, 0.0, UR - UL)

field = solve_claw(flux, u0, T, cells=200)
drift = np.abs(field.mass_defects()).max()
print(f"steps: {len(field.times) - 1}, dt = {field.dt:.5f}")
print(f"worst per-step mass defect: {drift:.3e}")

# exact solution: a single shock at speed (f(ul) - f(ur)) / (ul - ur)
speed = 0.5 * (UL + UR)
shock = X0 + speed * T
centers = 0.5 * (field.edges[:-1] + field.edges[1:])
exact = np.where(centers < shock, UL, UR)
dx = float(np.diff(field.edges).min())
l1 = float(np.sum(np.abs(field.states[-1] - exact) * np.diff(field.edges)))
print(f"shock position at T={T}: {shock:.3f}")
print(f"L1 error {l1:.4e}  vs  2 dx = {2 * dx:.4e}")
