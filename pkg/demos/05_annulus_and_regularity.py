"""Boundary-behavior experiments: the annulus exit bound and the corkscrew
and regularity probes.

On the annulus, the minimizing player can keep the game from exiting
through the outer shell with probability bounded by a ratio of the radial
profile; the cusp domain has no exterior corkscrew ball at its tip, while
the gauge ball has them at every scale.
"""

import numpy as np

from heiswalk import make_ball_domain, make_cusp_domain
from heiswalk.averaging import QuadratureSpec
from heiswalk.domains import corkscrew_probe
from heiswalk.stochastic import annulus_experiment, regularity_probe

print("annulus exit probability (fast, scaled-down parameters):")
res = annulus_experiment(R1=1.0, R2=2.0, R3=4.0, p=4.0, eps=0.25,
                         n_traj=2000, xi=0.05, base_seed=1, tol=1e-5,
                         method="policy", h_r=0.25 / 4, h_z=0.25 / 8,
                         quad=QuadratureSpec("tensor", 512, 0))
print(f"  empirical {res.exit_prob.mean:.4f} (+-{res.exit_prob.std_error:.4f})"
      f" vs bound {res.bound:.3f} + xi {res.xi}")

print("\ncorkscrew probe:")
ball = make_ball_domain([0, 0, 0], 1.0)
for r in corkscrew_probe(ball, [1.0, 0.0, 0.0], 0.2, [0.5, 0.25]):
    print(f"  ball, r={r.r}: exterior ball found = {r.found}")
cusp = make_cusp_domain(0.5)
for r in corkscrew_probe(cusp, [0.0, 0.0, 0.0], 0.35, [0.2, 0.1]):
    print(f"  cusp tip, r={r.r}: exterior ball found = {r.found}")

print("\nwalk regularity at a gauge-sphere boundary point:")
probe = regularity_probe(ball, [1.0, 0.0, 0.0], eta=0.2, delta=0.6,
                         eps=0.05, n_traj=1000, kind="walk", base_seed=2)
print(f"  P(terminal within 0.6 of the start corner) = "
      f"{probe.estimate.mean:.3f} (started within {probe.delta_hat})")
