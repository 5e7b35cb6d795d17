"""Bounded domain descriptors with gauge distance to the complement.

Every distance here is the gauge (Koranyi) distance: step clamps, the
scaled boundary weight d_eps and the corkscrew condition are all stated in
the group metric.  Inexact domains carry `exact = False` and return a
certified lower bound instead of the true distance; consumers tolerate the
resulting one-sided error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigInvalid, NotOnBoundary
from .hgroup import dist, gauge, group_mul, dilate, sample_ball

__all__ = [
    "Domain",
    "make_ball_domain",
    "make_annulus_domain",
    "make_cusp_domain",
    "corkscrew_probe",
    "CorkscrewReport",
]


@dataclass(frozen=True)
class Domain:
    """Open bounded set with membership test and distance to the complement.

    contains and dist_to_complement accept (..., 3) arrays; both must be
    stateless.  dist_to_complement vanishes outside the set and is 1-Lipschitz
    in the gauge metric when `exact` is set.
    """

    contains: Callable[[np.ndarray], np.ndarray]
    dist_to_complement: Callable[[np.ndarray], np.ndarray]
    bounding_box: np.ndarray
    exact: bool = True
    gauge_diameter: float = np.inf
    hor_radius: float = np.inf  # sup of |q_hor| over the closure
    label: str = "domain"


def make_ball_domain(center, R: float) -> Domain:
    """Open gauge ball B_R(center); distances are exact."""
    if R <= 0.0:
        raise ConfigInvalid("ball radius must be positive")
    center = np.asarray(center, dtype=float).reshape(3)

    def contains(q):
        return dist(center, q) < R

    def dtc(q):
        return np.maximum(0.0, R - dist(center, q))

    x, y, z = center
    box = np.array([[x - R, x + R], [y - R, y + R],
                    [z - 0.3 * R**2 - 0.5 * R * np.hypot(x, y),
                     z + 0.3 * R**2 + 0.5 * R * np.hypot(x, y)]])
    return Domain(contains, dtc, box, exact=True, gauge_diameter=2.0 * R,
                  hor_radius=float(np.hypot(x, y) + R), label=f"ball(R={R})")


def make_annulus_domain(center, R1: float, R3: float) -> Domain:
    """Open annulus B_R3(center) minus the closed ball of radius R1."""
    if not 0.0 < R1 < R3:
        raise ConfigInvalid("annulus needs 0 < R1 < R3")
    center = np.asarray(center, dtype=float).reshape(3)

    def contains(q):
        d = dist(center, q)
        return (R1 < d) & (d < R3)

    def dtc(q):
        d = dist(center, q)
        return np.maximum(0.0, np.minimum(R3 - d, d - R1))

    x, y, z = center
    box = np.array([[x - R3, x + R3], [y - R3, y + R3],
                    [z - 0.3 * R3**2 - 0.5 * R3 * np.hypot(x, y),
                     z + 0.3 * R3**2 + 0.5 * R3 * np.hypot(x, y)]])
    return Domain(contains, dtc, box, exact=True, gauge_diameter=2.0 * R3,
                  hor_radius=float(np.hypot(x, y) + R3),
                  label=f"annulus({R1},{R3})")


def _cusp_lower_bound(q: np.ndarray, alpha: float) -> np.ndarray:
    """Certified lower bound on the gauge distance from q to {z >= |q_hor|^(1+a)}.

    Any p with d(q, p) <= t satisfies p = q * w with |w_hor| <= t and
    |w_3| <= t^2/4, so p_3 <= z + t^2/4 + |q_hor| t / 2 while
    |p_hor|^(1+a) >= (|q_hor| - t)_+^(1+a).  The smallest t at which the
    necessary inequality p_3 >= |p_hor|^(1+a) can hold is found by bisection;
    below it no complement point is reachable.
    """
    q = np.atleast_2d(q)
    rho = np.hypot(q[:, 0], q[:, 1])
    z = q[:, 2]
    inside = z < rho ** (1.0 + alpha)

    def g(t):
        reach = z + t**2 / 4.0 + rho * t / 2.0
        wall = np.maximum(rho - t, 0.0) ** (1.0 + alpha)
        return reach - wall

    lo = np.zeros(len(q))
    hi = np.full(len(q), 8.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = g(mid) < 0.0  # still certified below the complement
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.where(inside, lo, 0.0)


def make_cusp_domain(alpha: float) -> Domain:
    """Cusp set {|q_hor|^(1+alpha) > z} cut to the gauge ball of radius 2.

    The inward distance is a certified lower bound (exact flag false): an
    analytic envelope for the cusp wall, the exact value for the outer ball.
    """
    if not 0.0 <= alpha < 1.0:
        raise ConfigInvalid("cusp exponent must lie in [0, 1)")

    def contains(q):
        q2 = np.atleast_2d(np.asarray(q, dtype=float))
        rho = np.hypot(q2[:, 0], q2[:, 1])
        inside = (rho ** (1.0 + alpha) > q2[:, 2]) & (gauge(q2) < 2.0)
        return inside if np.asarray(q).ndim > 1 else inside[0]

    def dtc(q):
        q2 = np.atleast_2d(np.asarray(q, dtype=float))
        wall = _cusp_lower_bound(q2, alpha)
        outer = np.maximum(0.0, 2.0 - gauge(q2))
        out = np.where(contains(q2), np.minimum(wall, outer), 0.0)
        return out if np.asarray(q).ndim > 1 else out[0]

    box = np.array([[-2.0, 2.0], [-2.0, 2.0], [-1.0, 1.0]])
    return Domain(contains, dtc, box, exact=False, gauge_diameter=4.0,
                  hor_radius=2.0, label=f"cusp(alpha={alpha})")


@dataclass(frozen=True)
class CorkscrewReport:
    r: float
    found: bool
    witness: np.ndarray | None


def corkscrew_probe(dom: Domain, q0, mu: float, radii,
                    seed: int = 0, n_centers: int = 4096,
                    n_verify: int = 512) -> list[CorkscrewReport]:
    """Search for exterior gauge balls B_{mu r}(p0) inside B_r(q0) \\ domain.

    Candidate centers are sampled in B_{(1-mu) r}(q0) (so the candidate ball
    sits inside B_r(q0) by the triangle inequality) and verified by sampling.
    Absence of a witness at this resolution is evidence, not proof, of
    corkscrew failure.
    """
    if not 0.0 < mu < 1.0:
        raise ConfigInvalid("corkscrew ratio must lie in (0, 1)")
    q0 = np.asarray(q0, dtype=float).reshape(3)
    if float(dom.dist_to_complement(q0[None, :])[0]) > 1e-9:
        raise NotOnBoundary("probe point lies in the interior")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    adheres = bool(dom.contains(q0[None, :])[0]) or bool(
        np.any(dom.contains(sample_ball(q0, 1e-3, rng, 512))))
    if not adheres:
        raise NotOnBoundary("probe point does not adhere to the domain")

    reports = []
    for r in radii:
        if r <= 0.0:
            raise ConfigInvalid("probe radii must be positive")
        centers = sample_ball(q0, (1.0 - mu) * r, rng, n_centers)
        keep = ~dom.contains(centers)
        witness = None
        for p0 in centers[keep]:
            probe_pts = sample_ball(p0, mu * r, rng, n_verify)
            if not np.any(dom.contains(probe_pts)):
                witness = p0
                break
        reports.append(CorkscrewReport(float(r), witness is not None, witness))
    return reports
