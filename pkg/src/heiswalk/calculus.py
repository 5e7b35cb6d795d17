"""Horizontal differential calculus on the Heisenberg group.

The frame is X = d/dx - (y/2) d/dz, Y = d/dy + (x/2) d/dz, Z = d/dz.  Moving
along the straight line through q in direction e_X(q) = (1, 0, -y/2) keeps y
frozen, so pure second derivatives along these lines equal X^2 and Y^2; the
frozen-direction mixed stencil returns the symmetrized cross term because the
+-(1/2)Z contributions of XY and YX cancel.  Finite differences below exploit
exactly this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, ConstraintViolation, DegenerateGradient, GaugeZero
from .hgroup import gauge, group_inv, group_mul

__all__ = [
    "HorizontalJet",
    "ScalarField",
    "SubLaplacians",
    "horizontal_jet",
    "sub_laplacians",
    "gauge_power_jet",
    "gauge_power_field",
    "radial_profile",
    "radial_p_harmonic",
    "coordinate_field",
    "named_field",
    "GRADIENT_FLOOR",
]

GRADIENT_FLOOR = 1e-10


@dataclass
class HorizontalJet:
    """Value, horizontal gradient (Xv, Yv), Zv and symmetrized horizontal Hessian."""

    value: float
    grad_h: np.ndarray
    z_deriv: float
    hess_h: np.ndarray

    def __post_init__(self):
        self.grad_h = np.asarray(self.grad_h, dtype=float).reshape(2)
        h = np.asarray(self.hess_h, dtype=float).reshape(2, 2)
        self.hess_h = 0.5 * (h + h.T)


class ScalarField:
    """Evaluatable function on the group with an optional analytic jet.

    `fn` maps (..., 3) arrays to (...) arrays and must be stateless (it is
    called concurrently).  When `jet_fn` is absent, jets fall back to central
    finite differences with steps `fd_step` (first order) and `fd_step2`
    (second order).
    """

    def __init__(self, fn, jet_fn=None, fd_step: float = 1e-5, fd_step2: float = 3e-4,
                 name: str | None = None):
        if fd_step <= 0 or fd_step2 <= 0:
            raise ConfigInvalid("finite-difference steps must be positive")
        self.fn = fn
        self.jet_fn = jet_fn
        self.fd_step = fd_step
        self.fd_step2 = fd_step2
        self.name = name

    def __call__(self, pts):
        return np.asarray(self.fn(np.asarray(pts, dtype=float)), dtype=float)

    def jet(self, q) -> HorizontalJet:
        return horizontal_jet(self, q)

    def __repr__(self):
        return f"ScalarField({self.name or self.fn!r})"


def _fd_jet(f: ScalarField, q: np.ndarray) -> HorizontalJet:
    x, y = q[0], q[1]
    ex = np.array([1.0, 0.0, -0.5 * y])
    ey = np.array([0.0, 1.0, 0.5 * x])
    ez = np.array([0.0, 0.0, 1.0])
    h1, h2 = f.fd_step, f.fd_step2

    pts = [q]
    for e in (ex, ey, ez):
        pts += [q + h1 * e, q - h1 * e]
    for e in (ex, ey):
        pts += [q + h2 * e, q - h2 * e, q + 2 * h2 * e, q - 2 * h2 * e]
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            pts.append(q + h2 * (sx * ex + sy * ey))
    v = f(np.stack(pts))

    f0 = v[0]
    dx = (v[1] - v[2]) / (2 * h1)
    dy = (v[3] - v[4]) / (2 * h1)
    dz = (v[5] - v[6]) / (2 * h1)
    # 5-point second derivative along each frozen line
    dxx = (-v[9] - v[10] + 16 * (v[7] + v[8]) - 30 * f0) / (12 * h2**2)
    dyy = (-v[13] - v[14] + 16 * (v[11] + v[12]) - 30 * f0) / (12 * h2**2)
    dxy = (v[15] - v[16] - v[17] + v[18]) / (4 * h2**2)
    return HorizontalJet(float(f0), np.array([dx, dy]), float(dz),
                         np.array([[dxx, dxy], [dxy, dyy]]))


def horizontal_jet(f: ScalarField, q) -> HorizontalJet:
    """Jet of f at q: analytic when available, finite differences otherwise."""
    q = np.asarray(q, dtype=float).reshape(3)
    if f.jet_fn is not None:
        return f.jet_fn(q)
    return _fd_jet(f, q)


@dataclass(frozen=True)
class SubLaplacians:
    delta_h: float
    delta_inf: float
    delta_p: float
    delta_p_normalized: float


def sub_laplacians(jet: HorizontalJet, p: float,
                   gradient_floor: float = GRADIENT_FLOOR) -> SubLaplacians:
    """The four Laplacians of a jet for exponent p in (1, inf).

    delta_h = tr hess, delta_inf = <hess : n (x) n> with n the normalized
    horizontal gradient, delta_p_normalized = delta_h + (p - 2) delta_inf and
    delta_p = |grad|^(p-2) delta_p_normalized.  Raises DegenerateGradient
    below the gradient floor, where the normalized quantities are undefined.
    """
    if not 1.0 < p < np.inf:
        raise ConstraintViolation(f"exponent p = {p} outside (1, inf)")
    g = jet.grad_h
    norm = float(np.hypot(g[0], g[1]))
    delta_h = float(np.trace(jet.hess_h))
    if norm < gradient_floor:
        raise DegenerateGradient(
            f"|grad_h| = {norm:.3e} below floor {gradient_floor:.1e}")
    n = g / norm
    delta_inf = float(n @ jet.hess_h @ n)
    delta_pn = delta_h + (p - 2.0) * delta_inf
    delta_p = norm ** (p - 2.0) * delta_pn
    return SubLaplacians(delta_h, delta_inf, delta_p, delta_pn)


def _gauge_jet_arrays(q: np.ndarray, s: float):
    x, y, z = q
    hor2 = x * x + y * y
    g = (hor2**2 + 16.0 * z * z) ** 0.25
    if g == 0.0:
        raise GaugeZero("gauge-power jet undefined at the origin")
    xi = np.array([x * hor2 - 4.0 * y * z, y * hor2 + 4.0 * x * z])
    grad = s * g ** (s - 4.0) * xi
    hess = s * g ** (s - 8.0) * (
        (s - 4.0) * np.outer(xi, xi) + 3.0 * hor2 * g**4 * np.eye(2)
    )
    zd = 8.0 * s * z * g ** (s - 4.0)
    return g, grad, zd, hess


def gauge_power_jet(q, s: float) -> HorizontalJet:
    """Closed-form jet of q -> |q|^s.

    With xi = |q_hor|^2 q_hor + 4 z q_hor^perp:
        grad = s |q|^(s-4) xi,
        hess = s |q|^(s-8) ((s-4) xi (x) xi + 3 |q_hor|^2 |q|^4 Id),
        Zv   = 8 s z |q|^(s-4),
    and tr hess = s (s+2) |q_hor|^2 |q|^(s-4).
    """
    q = np.asarray(q, dtype=float).reshape(3)
    g, grad, zd, hess = _gauge_jet_arrays(q, s)
    return HorizontalJet(g**s, grad, zd, hess)


def gauge_power_field(s: float, center=None) -> ScalarField:
    """Field q -> d(center, q)^s with analytic jet (center defaults to 0).

    Jets of left translates are jets of the untranslated field at the shifted
    argument, since X, Y, Z are left invariant.
    """
    c_inv = None if center is None else group_inv(np.asarray(center, float))

    def shift(pts):
        return pts if c_inv is None else group_mul(c_inv, pts)

    def fn(pts):
        return gauge(shift(pts)) ** s

    def jet_fn(q):
        return gauge_power_jet(shift(q), s)

    return ScalarField(fn, jet_fn, name=f"gauge^{s}" + ("" if center is None else "@c"))


def radial_profile(p: float, t):
    """Increasing radial profile: sgn(p-4) t^((p-4)/(p-1)), log t at p = 4."""
    if not 2.0 < p < np.inf:
        raise ConstraintViolation(f"radial profile needs p in (2, inf), got {p}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ConfigInvalid("radial profile needs t > 0")
    if p == 4.0:
        return np.log(t)
    ex = (p - 4.0) / (p - 1.0)
    return np.sign(p - 4.0) * t**ex


def radial_p_harmonic(p: float, center=None) -> ScalarField:
    """Radial solution u(q) = profile(p, d(center, q)) with analytic jet.

    Annihilated by the p-sub-Laplacian away from the center; the horizontal
    gradient degenerates on the vertical axis through the center.
    """
    if not 2.0 < p < np.inf:
        raise ConstraintViolation(f"radial field needs p in (2, inf), got {p}")
    c_inv = None if center is None else group_inv(np.asarray(center, float))

    def shift(pts):
        return pts if c_inv is None else group_mul(c_inv, pts)

    if p == 4.0:

        def fn(pts):
            return np.log(gauge(shift(pts)))

        def jet_fn(q):
            w = np.asarray(shift(q), dtype=float).reshape(3)
            g, gr, zd, hs = _gauge_jet_arrays(w, 1.0)
            # chain rule for log(N): grad N / N, hess N / N - (grad N)^2 / N^2
            return HorizontalJet(
                np.log(g), gr / g, zd / g, hs / g - np.outer(gr, gr) / g**2
            )

        return ScalarField(fn, jet_fn, name="radial_p4")

    ex = (p - 4.0) / (p - 1.0)
    sgn = float(np.sign(p - 4.0))

    def fn(pts):
        return sgn * gauge(shift(pts)) ** ex

    def jet_fn(q):
        j = gauge_power_jet(shift(q), ex)
        return HorizontalJet(sgn * j.value, sgn * j.grad_h, sgn * j.z_deriv,
                             sgn * j.hess_h)

    return ScalarField(fn, jet_fn, name=f"radial_p{p}")


def coordinate_field(index: int) -> ScalarField:
    """Coordinate functions x, y, z as fields with exact jets."""
    if index not in (0, 1, 2):
        raise ConfigInvalid("coordinate index must be 0, 1 or 2")

    def fn(pts):
        return np.asarray(pts, dtype=float)[..., index]

    zero2 = np.zeros((2, 2))

    def jet_fn(q):
        if index == 0:
            return HorizontalJet(q[0], np.array([1.0, 0.0]), 0.0, zero2)
        if index == 1:
            return HorizontalJet(q[1], np.array([0.0, 1.0]), 0.0, zero2)
        return HorizontalJet(q[2], np.array([-0.5 * q[1], 0.5 * q[0]]), 1.0, zero2)

    return ScalarField(fn, jet_fn, name="xyz"[index])


_NAMED = {
    "x": lambda pts: pts[..., 0],
    "y": lambda pts: pts[..., 1],
    "z": lambda pts: pts[..., 2],
    "x^2": lambda pts: pts[..., 0] ** 2,
    "y^2": lambda pts: pts[..., 1] ** 2,
    "x*y": lambda pts: pts[..., 0] * pts[..., 1],
    "x^2+y^2": lambda pts: pts[..., 0] ** 2 + pts[..., 1] ** 2,
    "z^2": lambda pts: pts[..., 2] ** 2,
    "x^3": lambda pts: pts[..., 0] ** 3,
    "x+0.2x^2": lambda pts: pts[..., 0] + 0.2 * pts[..., 0] ** 2,
}


def named_field(name: str) -> ScalarField:
    """Built-in fields by name.

    Plain names from the polynomial table, "gauge_pow:<s>" for gauge powers,
    "radial:<p>" for the radial p-harmonic profile.
    """
    if name in _NAMED:
        return ScalarField(_NAMED[name], name=name)
    if name.startswith("gauge_pow:"):
        return gauge_power_field(float(name.split(":", 1)[1]))
    if name.startswith("radial:"):
        return radial_p_harmonic(float(name.split(":", 1)[1]))
    raise ConfigInvalid(f"unknown field name {name!r}")
