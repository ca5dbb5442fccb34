"""Geodesic balls in the three space forms.

Each space form carries a warping function lam(r) (sinh, r or sin), its
derivative lam' and the primitive Phi.  Centered geodesic balls give the
comparison functions every inequality is measured against, so this walk
starts by tabulating them and inverting one of them.
"""

import numpy as np

from spaceflow import EUCLIDEAN, HYPERBOLIC, SPHERICAL, BallFunctions

r = np.linspace(0.0, 1.5, 7)
for form in (HYPERBOLIC, EUCLIDEAN, SPHERICAL):
    lam, dlam, Phi = form.warp(r)
    # lam' + eps Phi = 1 holds for every form
    print(f"{form.name:10s} max |lam' + eps Phi - 1| = {np.abs(dlam + form.epsilon * Phi - 1).max():.1e}")

n = 4
ball = BallFunctions(n, HYPERBOLIC)
print(f"\nquermassintegrals of the unit ball in H^{n}:")
for l in range(n + 1):
    print(f"  W_{l} = {ball.quermassintegral(l, 1.0):.10f}")

# the radius of the ball whose W_2 equals 10
r2 = ball.invert(lambda s: ball.quermassintegral(2, s), 10.0)
print(f"\nball with W_2 = 10 has radius {r2:.12f} (W_2 back: {ball.quermassintegral(2, r2):.12f})")
