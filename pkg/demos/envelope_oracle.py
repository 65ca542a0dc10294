"""Plurisubharmonic envelopes of radial weights in log coordinates.

A radial function on the disk is psh iff its profile u(t) = V(e^t) is convex
and nondecreasing. The envelope is the largest such minorant, computed here
by alternating suffix minima with lower convex hulls.

    python demos/envelope_oracle.py
"""
import numpy as np

from bergmanlab import Domain, GridSpec, catalog, make_grid, psh_envelope_toric

pts = make_grid(Domain.disk(), GridSpec("radial", 8, 0.05))
r = pts[:, 0].real
weights = [catalog("neg_abs_square"), catalog("abs_square"), catalog("log_pole", gamma=0.5),
           catalog("radial_custom", table=[(0, 0), (0.5, -0.5), (1, 0)])]
print("r      " + "  ".join(f"{x:7.3f}" for x in r))
for w in weights:
    env = psh_envelope_toric(w, extra_points=pts)
    print(f"\n{w.name} (iterations {env.iterations}, fixpoint {env.monotone_fixpoint})")
    print("V      " + "  ".join(f"{x:7.3f}" for x in w(pts)))
    print("env    " + "  ".join(f"{x:7.3f}" for x in env(pts)))
