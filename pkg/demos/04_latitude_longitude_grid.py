"""Non-rotational shapes on a latitude-longitude grid.

Profiles cover rotationally symmetric surfaces in any dimension.  In three
dimensions a full grid over S^2 handles general star-shaped surfaces.  This
script checks that both representations agree on a rotational shape and
then flows a genuinely non-rotational one.
"""

import numpy as np

from spaceflow import HYPERBOLIC, FlowConfig, quermassintegrals, run
from spaceflow.corpus import generate, legendre_shape

prof = legendre_shape(3, HYPERBOLIC, 1.0, [0.0, 1.0], 0.05, N=256)
grid = prof.to_sphere_graph(n_phi=16)
print("W_l, profile vs grid:")
for l, (a, b) in enumerate(zip(quermassintegrals(prof), quermassintegrals(grid))):
    print(f"  W_{l}: {a:.10f}  {b:.10f}")

shape = generate(3, HYPERBOLIC, 1, amplitude=0.03, seed=7, modes=2, N=24, representation="sphere").shapes[0]
print(f"\nharmonic shape: radial spread {np.ptp(shape.graph.rho):.4f}")
res = run(shape.graph, FlowConfig(k=1))
# the limit sphere need not be centered, so the radial spread stays finite while pinching vanishes
print(f"k = 1 flow: {res.terminal['reason']}, steps {res.terminal['steps']}, "
      f"final spread {res.series('oscillation')[-1]:.2e}, violations {len(res.violations)}")
