"""Recover the second-order expansion coefficients of every averaging
operator by regressing the centered average on r^2.

Each operator applied to a smooth function behaves like
value + c r^2 (differential operator) + o(r^2); the table below compares
the fitted c * (operator value) against the closed-form prediction.
"""

import numpy as np

from heiswalk import (BallSearchSpec, QuadratureSpec, coefficient_fit,
                      deterministic_avg, dpp_operator, ellipsoid_avg,
                      named_field, stochastic_avg, sub_laplacians)

quad = QuadratureSpec("tensor", 50_000, 0)
search = BallSearchSpec(512, 20, 0)
radii = [0.2, 0.1, 0.05, 0.025]
f = named_field("x^2")
q = np.array([1.0, 1.0, 0.0])
jet = f.jet(q)
p = 3.0
sl = sub_laplacians(jet, p)

rows = [
    ("circle avg", lambda r: stochastic_avg("A1", f, r, q, quad),
     np.trace(jet.hess_h) / 4),
    ("disc avg", lambda r: stochastic_avg("A2", f, r, q, quad),
     np.trace(jet.hess_h) / 8),
    ("ball avg", lambda r: stochastic_avg("A3", f, r, q, quad),
     np.trace(jet.hess_h) / (3 * np.pi)),
    ("kernel avg", lambda r: stochastic_avg("A3K", f, r, q, quad),
     np.pi / 24 * np.trace(jet.hess_h)),
    ("(inf+sup)/2", lambda r: deterministic_avg(f, r, q, search).value,
     sl.delta_inf / 2),
    ("weighted mix", lambda r: dpp_operator("dpp1", f, r, q, p, None, quad, search),
     sl.delta_p_normalized / (2 * (p - 2) + 3 * np.pi)),
    ("three-way mix", lambda r: dpp_operator("dpp2", f, r, q, p, None, quad, search),
     sl.delta_p_normalized / (3 * np.pi)),
    ("ellipsoid mix", lambda r: dpp_operator("dpp3", f, r, q, p, None, quad, search),
     sl.delta_p_normalized / (p - 1)),
]

print(f"operator expansions for f = x^2 at q = {q.tolist()}, p = {p}:")
print(f"{'operator':>14} {'fitted':>12} {'predicted':>12} {'rel err':>9}")
for name, probe, ref in rows:
    slope = coefficient_fit(probe, f, q, radii)
    print(f"{name:>14} {slope:12.6f} {ref:12.6f} {abs(slope/ref-1):9.4%}")

print("\nanisotropic stretch: coefficient scales with the aspect squared")
q0 = np.zeros(3)
for alpha in (0.5, 1.0, 2.0):
    slope = coefficient_fit(
        lambda r: ellipsoid_avg(f, r, alpha, [1, 0, 0], q0, quad), f, q0, radii)
    print(f"  aspect {alpha}: fitted {slope:.6f} vs "
          f"{2 / (3 * np.pi) * alpha**2:.6f}")
