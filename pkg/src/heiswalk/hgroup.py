"""Exact arithmetic and sampling for the first Heisenberg group.

Points are plain numpy arrays of shape (3,) or (..., 3) holding Carnot
coordinates (x, y, z); every operation broadcasts over leading axes.  The
group carries the non-commutative product

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2),

the gauge |q| = ((x^2 + y^2)^2 + 16 z^2)^(1/4), the left-invariant metric
d(a, b) = |a^{-1} * b| and the anisotropic dilations
rho_lam(x, y, z) = (lam x, lam y, lam^2 z).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid

__all__ = [
    "point",
    "group_mul",
    "group_inv",
    "gauge",
    "dist",
    "dilate",
    "EllipsoidShape",
    "ellipsoid_map",
    "sample_ball",
    "sample_disc",
    "ball_volume",
    "UNIT_BALL_VOLUME",
    "tensor_ball_offsets",
    "tensor_disc_offsets",
    "gauge_sphere_net",
]

# Volume of the unit gauge ball B_1(0).  Closed form pi^2/8 obtained by
# integrating the z-extent sqrt(1 - rho^4)/2 over the unit disc; the test
# suite re-derives it by rejection integration over the bounding box.
UNIT_BALL_VOLUME = np.pi**2 / 8.0


def point(x: float, y: float, z: float) -> np.ndarray:
    """Build a single group element as a float64 array."""
    return np.array([x, y, z], dtype=float)


def group_mul(a, b) -> np.ndarray:
    """Group product a * b, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=float)
    out[..., 0] = a[..., 0] + b[..., 0]
    out[..., 1] = a[..., 1] + b[..., 1]
    out[..., 2] = (
        a[..., 2]
        + b[..., 2]
        + 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    )
    return out


def group_inv(a) -> np.ndarray:
    """Group inverse; the twist term vanishes on (q, -q), so inv(q) = -q."""
    return -np.asarray(a, dtype=float)


def gauge(a) -> np.ndarray:
    """Gauge |a| = ((x^2 + y^2)^2 + 16 z^2)^(1/4); zero only at the origin."""
    a = np.asarray(a, dtype=float)
    hor2 = a[..., 0] ** 2 + a[..., 1] ** 2
    return (hor2**2 + 16.0 * a[..., 2] ** 2) ** 0.25


def dist(a, b) -> np.ndarray:
    """Left-invariant metric d(a, b) = gauge(a^{-1} * b)."""
    return gauge(group_mul(group_inv(a), b))


def dilate(lam, a) -> np.ndarray:
    """Anisotropic dilation (lam x, lam y, lam^2 z); lam must be positive."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise ConfigInvalid("dilation factor must be positive")
    a = np.asarray(a, dtype=float)
    out = np.empty(np.broadcast_shapes(lam.shape + (1,), a.shape), dtype=float)
    out[..., 0] = lam * a[..., 0]
    out[..., 1] = lam * a[..., 1]
    out[..., 2] = lam**2 * a[..., 2]
    return out


@dataclass(frozen=True)
class EllipsoidShape:
    """Rank-one stretch of the unit gauge ball.

    radius and aspect are positive reals; orientation is a Euclidean unit
    3-vector (renormalized on construction).  aspect == 1 reproduces the
    gauge ball of the same radius regardless of orientation.
    """

    radius: float
    aspect: float
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        if self.radius <= 0.0 or self.aspect <= 0.0:
            raise ConfigInvalid("ellipsoid radius and aspect must be positive")
        nu = np.asarray(self.orientation, dtype=float).reshape(3)
        n = float(np.linalg.norm(nu))
        if n == 0.0:
            raise ConfigInvalid("ellipsoid orientation must be nonzero")
        object.__setattr__(self, "orientation", nu / n)


def ellipsoid_map(p, shape: EllipsoidShape) -> np.ndarray:
    """Linear map L(p) = p + (aspect - 1) <p, nu> nu (Euclidean inner product)."""
    p = np.asarray(p, dtype=float)
    nu = shape.orientation
    proj = p @ nu
    return p + (shape.aspect - 1.0) * proj[..., None] * nu


def _rejection_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform samples of B_1(0) by rejection from [-1,1]^2 x [-1/4,1/4]."""
    out = np.empty((n, 3), dtype=float)
    filled = 0
    while filled < n:
        m = max(int(1.8 * (n - filled)) + 16, 32)
        cand = rng.uniform(-1.0, 1.0, size=(m, 3))
        cand[:, 2] *= 0.25
        keep = cand[gauge(cand) < 1.0]
        take = min(len(keep), n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def sample_ball(center, r: float, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """n uniform samples of the gauge ball B_r(center).

    Draws w uniform on B_1(0) by rejection and returns center * rho_r(w);
    left translation and dilation preserve uniformity.
    """
    if r <= 0.0:
        raise ConfigInvalid("ball radius must be positive")
    w = _rejection_ball(rng, n)
    return group_mul(center, dilate(r, w))


def sample_disc(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform samples of the Euclidean unit disc (polar, no rejection)."""
    u = rng.uniform(0.0, 1.0, size=n)
    th = rng.uniform(0.0, 2.0 * np.pi, size=n)
    rad = np.sqrt(u)
    return np.column_stack([rad * np.cos(th), rad * np.sin(th)])


def ball_volume(r: float) -> float:
    """Volume of B_r(0); scales as r^4 under the dilation Jacobian."""
    if r <= 0.0:
        raise ConfigInvalid("ball radius must be positive")
    return float(r) ** 4 * UNIT_BALL_VOLUME


def tensor_ball_offsets(target: int = 4096) -> np.ndarray:
    """Deterministic midpoint tensor grid on the bounding box, restricted to B_1(0).

    Returns an (m, 3) array with m close to `target`.  The grid is symmetric
    under w -> -w, so odd moments vanish; per-axis counts keep the box cell
    shape matched to the ball anisotropy (z-extent 1/4).
    """
    if target < 8:
        raise ConfigInvalid("tensor offset target too small")
    # accepted fraction of the box is V_1 / 2
    frac = UNIT_BALL_VOLUME / 2.0
    n_xy = max(4, int(round((4.0 * target / frac) ** (1.0 / 3.0))))
    best = None
    for nx in range(max(4, n_xy - 3), n_xy + 4):
        nz = max(2, int(round(nx / 4.0)))
        xs = -1.0 + (np.arange(nx) + 0.5) * (2.0 / nx)
        zs = -0.25 + (np.arange(nz) + 0.5) * (0.5 / nz)
        X, Y, Z = np.meshgrid(xs, xs, zs, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        pts = pts[gauge(pts) < 1.0]
        if best is None or abs(len(pts) - target) < abs(len(best) - target):
            best = pts
    return best


def tensor_disc_offsets(target: int = 4096) -> np.ndarray:
    """Deterministic midpoint tensor grid on [-1,1]^2 restricted to the unit disc."""
    if target < 4:
        raise ConfigInvalid("tensor offset target too small")
    n = max(2, int(round(np.sqrt(4.0 * target / np.pi))))
    xs = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts[pts[:, 0] ** 2 + pts[:, 1] ** 2 < 1.0]


def gauge_sphere_net(n_dirs: int, jitter_seed: int | None = None) -> np.ndarray:
    """n_dirs deterministic directions on the unit gauge sphere.

    A golden-angle spiral on the Euclidean sphere is renormalized onto the
    gauge sphere by dilation; an optional seeded jitter decorrelates nets.
    """
    i = np.arange(n_dirs, dtype=float)
    ga = np.pi * (3.0 - np.sqrt(5.0))
    zc = 1.0 - 2.0 * (i + 0.5) / n_dirs
    rad = np.sqrt(np.maximum(0.0, 1.0 - zc**2))
    th = ga * i
    if jitter_seed is not None:
        th = th + np.random.default_rng(jitter_seed).uniform(0, 2 * np.pi)
    pts = np.column_stack([rad * np.cos(th), rad * np.sin(th), 0.25 * zc])
    g = gauge(pts)
    return dilate(1.0 / g, pts)
