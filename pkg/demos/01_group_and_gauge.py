"""Tour of the group arithmetic: product, gauge, dilations, ball sampling.

The group lives on R^3 with the twisted product; the gauge unit ball is a
flattened convex body whose volume pi^2/8 we recover here by rejection.
"""

import numpy as np

from heiswalk import (UNIT_BALL_VOLUME, ball_volume, dilate, dist, gauge,
                      group_inv, group_mul, point, sample_ball)

a = point(1.0, 0.0, 0.0)
b = point(0.0, 1.0, 0.0)
print("a * b             =", group_mul(a, b), " (the twist fills the z slot)")
print("b * a             =", group_mul(b, a), " (non-commutative)")
print("a * inv(a)        =", group_mul(a, group_inv(a)))
print("gauge (3,4,0)     =", gauge(point(3, 4, 0)))
print("gauge (0,0,1)     =", gauge(point(0, 0, 1)))
print("d(a, a*b)         =", dist(a, group_mul(a, b)), "= gauge(b) =", gauge(b))

lam = 2.0
q = point(0.3, -0.2, 0.1)
print("\ndilation scales the gauge linearly:")
print("gauge(rho_2 q) / gauge(q) =", gauge(dilate(lam, q)) / gauge(q))

rng = np.random.default_rng(0)
n = 500_000
box = rng.uniform(-1, 1, size=(n, 3))
box[:, 2] *= 0.25
frac = np.mean(gauge(box) < 1.0)
print("\nunit ball volume: rejection estimate", 2 * frac,
      "vs closed form", UNIT_BALL_VOLUME)
print("dilation Jacobian: ball_volume(2)/ball_volume(1) =",
      ball_volume(2) / ball_volume(1))

samples = sample_ball(point(0, 0, 0), 1.0, rng, 200_000)
print("\nuniform ball samples: mean x^2 =", np.mean(samples[:, 0] ** 2),
      "vs 2/(3 pi) =", 2 / (3 * np.pi))
