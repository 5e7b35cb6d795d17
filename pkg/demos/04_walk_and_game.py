"""The two stochastic processes and their value functions.

The horizontal walk reproduces boundary data that extends harmonically; the
tug-of-war with noise, played with greedy strategies extracted from the
solved fixed point, matches the fixed point's value at interior points.
"""

import numpy as np

from heiswalk import (DppConfig, GameConfig, QuadratureSpec, WalkConfig,
                      estimate_game_value, estimate_walk_value,
                      greedy_strategy, make_ball_domain, make_grid,
                      named_field, run_walk, solve_dpp)

dom = make_ball_domain([0, 0, 0], 1.0)

print("single walk trajectory:")
final, steps, truncated = run_walk(dom, WalkConfig(eps=0.2, base_seed=1),
                                   [0.0, 0.0, 0.0])
print(f"  stopped after {steps} steps at {final.round(4).tolist()} "
      f"(truncated: {truncated})")

print("\nwalk value vs harmonic data (x and z both have vanishing "
      "horizontal Laplacian):")
wcfg = WalkConfig(eps=0.15, base_seed=11)
for fname, q0 in (("x", [0.3, 0.0, 0.0]), ("z", [0.3, 0.2, 0.1])):
    F = named_field(fname)
    est = estimate_walk_value(dom, wcfg, F, np.asarray(q0), 4000)
    print(f"  F={fname}, q0={q0}: estimate {est.mean:+.4f} "
          f"(+-{est.std_error:.4f}) vs data value "
          f"{float(F(np.asarray(q0)[None, :])[0]):+.4f}")

print("\ntug of war with greedy strategies vs the solved fixed point:")
eps, p = 0.25, 3.0
quad = QuadratureSpec("tensor", 512, 0)
cfg = DppConfig(eps=eps, p=p, tol=1e-7, quad=quad, n_candidates=128)
grid = make_grid(dom, cfg, h_xy=eps / 3, h_z=eps / 3)
u, rep = solve_dpp(dom, named_field("x"), cfg, grid)
gcfg = GameConfig(eps=eps, p=p, base_seed=3, quad=quad)
sI = greedy_strategy(u, gcfg, "maximize")
sII = greedy_strategy(u, gcfg, "minimize")
for q0 in ([0.0, 0.0, 0.0], [0.3, -0.2, 0.05]):
    est = estimate_game_value(dom, gcfg, named_field("x"), np.asarray(q0),
                              sI, sII, 4000)
    print(f"  q0={q0}: game {est.mean:+.4f} (+-{est.std_error:.4f}) "
          f"vs u_eps {float(u.interp(np.asarray(q0, float))):+.4f}")
