#!/usr/bin/env python3
"""Take one BV function apart: density, singular-continuous part, atoms.

Builds u = x^2 + 0.6 H(x - 0.3) - 0.4 H(x - 0.7) + 0.5 C(x) on ]0, 1[
(C the Cantor function), prints the mass of each derivative part, and
closes the weak integration-by-parts identity against a test function.
"""

import numpy as np

from bvcalc import BVFunction, TestFunction, integration_by_parts_residual, measure_total_variation

u = (
    BVFunction.from_poly(0.0, 1.0, (0.0, 0.0, 1.0))
    + BVFunction.heaviside(0.0, 1.0, 0.3, 0.0, 0.6)
    + BVFunction.heaviside(0.0, 1.0, 0.7, 0.0, -0.4)
    + BVFunction.cantor_fn(0.0, 1.0, support=(0.0, 1.0), coefficient=0.5)
)

du = u.derivative()
print("derivative parts of u:")
print(f"  density (ac) mass   : {du.absolutely_continuous_part().total_mass():+.6f}   (integral of 2x dx = 1)")
print(f"  cantor part mass    : {du.cantor_part().total_mass():+.6f}   (0.5 * full Cantor mass)")
print(f"  atoms               : {[(x, round(w, 6)) for x, w in du.atoms]}")
print(f"  total variation |Du|: {measure_total_variation(du):.6f}")
print(f"  pointwise variation : {u.total_variation():.6f}")

print()
print("precise representative at the jumps:")
for x in u.jump_set():
    l, r = u.eval(x, "left"), u.eval(x, "right")
    print(f"  u({x}) = {u.eval(x, 'precise'):.4f}  (left {l:.4f}, right {r:.4f})")

phi = TestFunction.bump((0.1, 0.9), 1.0)
res = integration_by_parts_residual(u, phi)
print()
print(f"weak identity  int u phi' dx + int phi dDu = {res:+.3e}")
