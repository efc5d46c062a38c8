#!/usr/bin/env python3
"""Adapted entropy residuals across levels, entropic vs expansion data.

The flux coefficient jumps at x = 1/2, so the classical Kruzkov
entropies are replaced by level functions |u - c_alpha(x)| that follow
the flux level alpha across the interface.  An admissible solve keeps
every residual nonpositive; a hand-injected expansion shock (which no
admissible solution contains) drives the residual positive.
"""

import numpy as np

from bvcalc import (
    BVFunction,
    ClawField,
    FluxModel,
    ScalarFlux,
    SpaceTimeTest,
    adapted_entropy_pair,
    entropy_residual,
    solve_claw,
)

from bvcalc import SmoothFunction

K = BVFunction.constant(0.0, 1.0, 1.0) + BVFunction.heaviside(0.0, 1.0, 0.5, 0.0, 1.0)
B = FluxModel(((K, SmoothFunction.poly1d((0.0, 1.0), "w")),))
flux = ScalarFlux(B, 0.05, 3.0)
phi = SpaceTimeTest.bump((0.1, 0.9), (0.05, 0.35), 1.0)

# data crossing every tested level on the left branch: the kink of
# |u - c_alpha| is active and upwind diffusion dissipates it
u0 = BVFunction.from_poly(0.0, 1.0, (1.3,)) + BVFunction.heaviside(0.0, 1.0, 0.35, 0.0, -0.9)
field = solve_claw(flux, u0, 0.4, cells=60)
print("entropic solve:")
for alpha in (0.6, 1.0, 1.25):
    res = entropy_residual(field, adapted_entropy_pair(flux, alpha), phi)
    print(f"  alpha = {alpha:<4}: residual = {res:+.4e}")

# expansion shock held in place by hand: both states on the same flux
# level would be admissible, these two are swapped
left, right = 0.4, 1.2
bad = ClawField.from_function(
    flux,
    lambda x, t: np.where(x < 0.45, left, right),
    T=0.4,
    cells=60,
    steps=120,
)
print("injected expansion profile:")
for alpha in (0.6, 0.8, 1.0):
    res = entropy_residual(bad, adapted_entropy_pair(flux, alpha), phi)
    print(f"  alpha = {alpha:<4}: residual = {res:+.4e}")
