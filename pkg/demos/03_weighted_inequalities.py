"""Gaps of the weighted inequalities on random convex shapes.

For every shape the left-hand side is a weighted curvature integral and the
right-hand side is the same quantity on the geodesic sphere with one
matched invariant.  Gaps are non-negative and vanish only on spheres.
"""

from spaceflow import HYPERBOLIC, SPHERICAL, ProfileGraph, power
from spaceflow.corpus import generate
from spaceflow.inequalities import verify

f = power(2.0)
print("perturbed spheres in H^3 (k = 2, l = 1):")
for s in generate(3, HYPERBOLIC, 4, amplitude=0.1, seed=1, N=256):
    for rep in verify("af-quermass", s.graph, k=2, l=1, weight=f):
        print(f"  {rep.variant:16s} lhs {rep.lhs:10.5f}  rhs {rep.rhs:10.5f}  relative gap {rep.relative_gap:.2e}")

print("\nMinkowski-type inequality in S^3:")
for s in generate(3, SPHERICAL, 3, amplitude=0.1, seed=1, r0=0.8, N=256):
    rep = verify("minkowski-s", s.graph, weight=f)[0]
    print(f"  relative gap {rep.relative_gap:.2e}")

sphere = ProfileGraph.sphere(3, HYPERBOLIC, 1.2, N=256)
rep = verify("minkowski-h", sphere, weight=f)[0]
print(f"\ngeodesic sphere in H^3: relative gap {rep.relative_gap:.1e}, equality flagged: {rep.equality}")
