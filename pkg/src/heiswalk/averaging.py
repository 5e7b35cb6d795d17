"""Averaging operators and expansion-coefficient fitting.

Four stochastic averages over sets attached to a point q at radius r:

    A1  boundary circle of the horizontal ellipse in the tangent plane,
    A2  the solid horizontal ellipse (2d),
    A3  the solid gauge ball (3d, uniform),
    A3K the gauge ball weighted by Psi(w) = |w_hor|^2 / |w|^4-gauge-squared,

the uniform average over a stretched ("ellipsoid") image of the ball, the
deterministic average (inf + sup)/2, and the three composite operators whose
second-order expansion produces the normalized p-sub-Laplacian.  Expansion
coefficients are recovered by regressing the centered average against r^2
with common quadrature offsets across radii.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .calculus import ScalarField
from .errors import ConfigInvalid, ConstraintViolation
from .hgroup import (
    EllipsoidShape,
    dilate,
    ellipsoid_map,
    gauge,
    gauge_sphere_net,
    group_mul,
    sample_disc,
    tensor_ball_offsets,
    tensor_disc_offsets,
)

__all__ = [
    "QuadratureSpec",
    "BallSearchSpec",
    "BallExtrema",
    "stochastic_avg",
    "ellipsoid_avg",
    "deterministic_avg",
    "ball_extrema",
    "dpp_operator",
    "dpp1_weights",
    "gamma_p",
    "dpp3_default_params",
    "check_dpp3_params",
    "coefficient_fit",
    "psi_weight",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Deterministic quadrature offsets: same spec + same inputs => same output.

    mode "tensor" uses midpoint grids restricted by the set indicator (biased,
    noise free); mode "pseudo" uses seeded rejection/polar sampling.
    sample_count is the target number of accepted nodes.
    """

    mode: str = "tensor"
    sample_count: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("tensor", "pseudo"):
            raise ConfigInvalid(f"unknown quadrature mode {self.mode!r}")
        if self.sample_count < 4:
            raise ConfigInvalid("sample_count too small")


@lru_cache(maxsize=64)
def _ball_offsets(mode: str, count: int, seed: int) -> np.ndarray:
    if mode == "tensor":
        return tensor_ball_offsets(count)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
    from .hgroup import _rejection_ball

    return _rejection_ball(rng, count)


@lru_cache(maxsize=64)
def _disc_offsets(mode: str, count: int, seed: int) -> np.ndarray:
    if mode == "tensor":
        return tensor_disc_offsets(count)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    return sample_disc(rng, count)


@lru_cache(maxsize=64)
def _circle_angles(mode: str, count: int, seed: int) -> np.ndarray:
    if mode == "tensor":
        return (np.arange(count) + 0.5) * (2.0 * np.pi / count)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    return rng.uniform(0.0, 2.0 * np.pi, size=count)


def psi_weight(w: np.ndarray) -> np.ndarray:
    """Kernel |w_hor|^2 / |w|_gauge^2, extended by 0 on the vertical axis."""
    w = np.asarray(w, dtype=float)
    hor2 = w[..., 0] ** 2 + w[..., 1] ** 2
    g2 = np.sqrt(hor2**2 + 16.0 * w[..., 2] ** 2)
    out = np.zeros_like(g2)
    np.divide(hor2, g2, out=out, where=g2 > 0.0)
    return out


def _horizontal_positions(q: np.ndarray, r: float, ab: np.ndarray) -> np.ndarray:
    # q * (r a, r b, 0): stays in the tangent-plane ellipse through q
    shifts = np.zeros(ab.shape[:-1] + (3,))
    shifts[..., :2] = r * ab
    return group_mul(q, shifts)


def stochastic_avg(kind: str, f: ScalarField, r: float, q,
                   quad: QuadratureSpec = QuadratureSpec()) -> float:
    """One of the averages A1 | A2 | A3 | A3K of f at q, radius r."""
    if r <= 0.0:
        raise ConfigInvalid("averaging radius must be positive")
    q = np.asarray(q, dtype=float).reshape(3)
    if kind == "A1":
        th = _circle_angles(quad.mode, quad.sample_count, quad.seed)
        ab = np.column_stack([np.cos(th), np.sin(th)])
        return float(np.mean(f(_horizontal_positions(q, r, ab))))
    if kind == "A2":
        ab = _disc_offsets(quad.mode, quad.sample_count, quad.seed)
        return float(np.mean(f(_horizontal_positions(q, r, ab))))
    if kind in ("A3", "A3K"):
        w = _ball_offsets(quad.mode, quad.sample_count, quad.seed)
        vals = f(group_mul(q, dilate(r, w)))
        if kind == "A3":
            return float(np.mean(vals))
        # self-normalized weights keep constants exact
        psi = psi_weight(w)
        return float(np.sum(psi * vals) / np.sum(psi))
    raise ConfigInvalid(f"unknown average kind {kind!r}")


def ellipsoid_avg(f: ScalarField, r: float, alpha: float, nu, q,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Uniform average of f over the stretched ball q * rho_r L(B_1(0); alpha, nu)."""
    if r <= 0.0:
        raise ConfigInvalid("averaging radius must be positive")
    q = np.asarray(q, dtype=float).reshape(3)
    shape = EllipsoidShape(radius=r, aspect=alpha, orientation=np.asarray(nu, float))
    w = _ball_offsets(quad.mode, quad.sample_count, quad.seed)
    pts = group_mul(q, dilate(r, ellipsoid_map(w, shape)))
    return float(np.mean(f(pts)))


@dataclass(frozen=True)
class BallSearchSpec:
    """Candidate net plus pattern-search refinement for extrema over gauge balls."""

    candidate_count: int = 512
    refine_rounds: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.candidate_count < 8:
            raise ConfigInvalid("candidate_count too small")
        if self.refine_rounds < 0:
            raise ConfigInvalid("refine_rounds must be nonnegative")


@lru_cache(maxsize=32)
def _search_net(count: int, seed: int) -> np.ndarray:
    # low-discrepancy directions x radial shells, mapped into the closed ball
    n_shell = 8
    n_dir = max(4, count // n_shell)
    dirs = gauge_sphere_net(n_dir, jitter_seed=seed)
    shells = (np.arange(n_shell) + 1.0) / n_shell
    net = np.concatenate([dilate(t, dirs) for t in shells])
    return net[:count] if len(net) >= count else net


def _project_ball(w: np.ndarray) -> np.ndarray:
    g = gauge(w)
    if g > 1.0:
        return dilate(1.0 / g, w)
    return w


@dataclass(frozen=True)
class BallExtrema:
    inf: float
    sup: float
    arg_inf: np.ndarray
    arg_sup: np.ndarray


def ball_extrema(objective, q, r: float,
                 search: BallSearchSpec = BallSearchSpec()) -> BallExtrema:
    """Approximate inf and sup of `objective` over the closed ball B_r(q).

    `objective` maps (..., 3) point arrays to values.  Net candidates are
    refined by shrinking pattern search projected back into the ball;
    extrema of smooth objectives sit on the boundary, which the shell net
    covers densely.
    """
    q = np.asarray(q, dtype=float).reshape(3)
    net = _search_net(search.candidate_count, search.seed)

    def on_ball(w):
        return group_mul(q, dilate(r, w))

    vals = np.asarray(objective(on_ball(net)), dtype=float)
    lo_i, hi_i = int(np.argmin(vals)), int(np.argmax(vals))
    results = []
    for sign, w0, v0 in ((1.0, net[lo_i], vals[lo_i]), (-1.0, net[hi_i], vals[hi_i])):
        w, best = w0.copy(), sign * v0
        step = 0.5
        moves = np.array([
            [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0],
            [0, 0, 0.25], [0, 0, -0.25],
        ], dtype=float)
        for _ in range(search.refine_rounds):
            cand = np.stack([_project_ball(w + step * m) for m in moves])
            cv = sign * np.asarray(objective(on_ball(cand)), dtype=float)
            j = int(np.argmin(cv))
            if cv[j] < best:
                best, w = cv[j], cand[j]
            else:
                step *= 0.6
        results.append((best * sign, on_ball(w)))
    (lo, arg_lo), (hi, arg_hi) = results
    return BallExtrema(float(lo), float(hi), arg_lo, arg_hi)


@dataclass(frozen=True)
class DeterministicAverage:
    value: float
    inf: float
    sup: float
    arg_inf: np.ndarray
    arg_sup: np.ndarray


def deterministic_avg(f: ScalarField, r: float, q,
                      search: BallSearchSpec = BallSearchSpec()) -> DeterministicAverage:
    """(inf + sup)/2 of f over B_r(q), with the located arg-extrema."""
    if r <= 0.0:
        raise ConfigInvalid("averaging radius must be positive")
    ext = ball_extrema(f, q, r, search)
    return DeterministicAverage(0.5 * (ext.inf + ext.sup), ext.inf, ext.sup,
                                ext.arg_inf, ext.arg_sup)


def dpp1_weights(p: float) -> tuple[float, float]:
    """Simple-averaging weights: alpha = 3pi / (2(p-2) + 3pi), beta = 1 - alpha."""
    if p <= 1.0:
        raise ConstraintViolation(f"dpp1 needs p > 1, got {p}")
    den = 2.0 * (p - 2.0) + 3.0 * np.pi
    return 3.0 * np.pi / den, 2.0 * (p - 2.0) / den


def gamma_p(p: float) -> float:
    """Shift-ball scale ((p - 2) / pi)^(1/2) of the three-way operator."""
    if p <= 2.0:
        raise ConstraintViolation(f"gamma_p needs p > 2, got {p}")
    return float(np.sqrt((p - 2.0) / np.pi))


def dpp3_default_params(p: float) -> tuple[float, float]:
    """Default (s_p, a_p) on the curve 3pi/(2 s^2) + a^2 = p - 1.

    Picks a_p = sqrt((p-1)/2), s_p = sqrt(3pi/(p-1)) and validates the
    stopping-time admissibility conditions; outside their range explicit
    parameters are required.
    """
    if p <= 1.0:
        raise ConstraintViolation(f"dpp3 needs p > 1, got {p}")
    a = np.sqrt((p - 1.0) / 2.0)
    s = np.sqrt(3.0 * np.pi / (p - 1.0))
    if not ((a <= 1.0 and s * a > 1.0) or (a >= 1.0 and s > 1.0)):
        raise ConstraintViolation(
            f"default scaling exponents inadmissible at p = {p}; pass s_p, a_p")
    return float(s), float(a)


def check_dpp3_params(p: float, s_p: float, a_p: float, tol: float = 1e-10):
    if s_p <= 0.0 or a_p <= 0.0:
        raise ConstraintViolation("scaling exponents must be positive")
    lhs = 3.0 * np.pi / (2.0 * s_p**2) + a_p**2
    if abs(lhs - (p - 1.0)) > tol:
        raise ConstraintViolation(
            f"scaling exponents off the curve: {lhs:.12f} != p - 1 = {p - 1:.12f}")


def _dpp3_objective(u: ScalarField, eps: float, q: np.ndarray, s_p: float,
                    a_p: float, quad: QuadratureSpec):
    w = _ball_offsets(quad.mode, quad.sample_count, quad.seed)

    def objective(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(len(pts))
        for i, pt in enumerate(pts):
            rel = pt - q
            hor = float(np.hypot(rel[0], rel[1]))
            if hor < 1e-12 * eps:
                # degenerate orientation: plain ball average at radius s_p * eps
                pos = group_mul(pt, dilate(s_p * eps, w))
            else:
                alpha = 1.0 + (a_p - 1.0) * hor**2 / eps**2
                nu = np.array([rel[0] / hor, rel[1] / hor, 0.0])
                shape = EllipsoidShape(radius=s_p * eps, aspect=alpha, orientation=nu)
                pos = group_mul(pt, dilate(s_p * eps, ellipsoid_map(w, shape)))
            out[i] = np.mean(u(pos))
        return out

    return objective


def dpp_operator(variant: str, u: ScalarField, eps: float, q, p: float,
                 params: tuple[float, float] | None = None,
                 quad: QuadratureSpec = QuadratureSpec(),
                 search: BallSearchSpec = BallSearchSpec()) -> float:
    """Composite dynamic-programming operators at step scale eps.

    dpp1: alpha_p A3(u, eps)(q) + (beta_p/2)(inf + sup of u over B_eps(q)).
    dpp2: (A3(u,eps)(q) + inf and sup over B_{gamma_p eps}(q) of the
          A3(u,eps) field) / 3, for p > 2.
    dpp3: (inf + sup over B_eps(q))/2 of the position-dependent ellipsoid
          average with exponents (s_p, a_p) on the admissibility curve.
    """
    if eps <= 0.0:
        raise ConfigInvalid("eps must be positive")
    q = np.asarray(q, dtype=float).reshape(3)
    if variant == "dpp1":
        alpha, beta = dpp1_weights(p)
        ext = ball_extrema(u, q, eps, search)
        a3 = stochastic_avg("A3", u, eps, q, quad)
        return float(alpha * a3 + 0.5 * beta * (ext.inf + ext.sup))
    if variant == "dpp2":
        g = gamma_p(p)
        w = _ball_offsets(quad.mode, quad.sample_count, quad.seed)

        def a3_field(pts):
            pts = np.atleast_2d(np.asarray(pts, dtype=float))
            return np.array(
                [np.mean(u(group_mul(pt, dilate(eps, w)))) for pt in pts])

        center = float(a3_field(q[None, :])[0])
        ext = ball_extrema(a3_field, q, g * eps, search)
        return (center + ext.inf + ext.sup) / 3.0
    if variant == "dpp3":
        if params is None:
            s_p, a_p = dpp3_default_params(p)
        else:
            s_p, a_p = params
        check_dpp3_params(p, s_p, a_p)
        obj = _dpp3_objective(u, eps, q, s_p, a_p, quad)
        ext = ball_extrema(obj, q, eps, search)
        return 0.5 * (ext.inf + ext.sup)
    raise ConfigInvalid(f"unknown dpp variant {variant!r}")


def coefficient_fit(probe, f: ScalarField, q, radii) -> float:
    """Slope of the linear regression of probe(r) - f(q) against r^2.

    `probe` maps a radius to the operator value at the fixed remaining
    inputs; passing the same quadrature spec for every radius gives common
    random numbers and cancels sampling noise in the regression.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise ConfigInvalid("need at least two radii to fit a slope")
    if np.any(radii <= 0.0):
        raise ConfigInvalid("radii must be positive")
    q = np.asarray(q, dtype=float).reshape(3)
    f0 = float(f(q[None, :])[0])
    y = np.array([probe(float(r)) - f0 for r in radii])
    return float(np.polyfit(radii**2, y, 1)[0])
