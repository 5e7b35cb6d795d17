"""Numba kernels for the grid solvers.

All kernels parallelize over nodes only; every per-node reduction runs in a
fixed sequential order, so results are bit-identical for any thread count.
fastmath stays off to keep IEEE evaluation order.

Interpolation uses nested lerps (constant fields reproduce exactly) and
snaps barely-off-node coordinates onto nodes, so node queries return stored
values exactly.  Out-of-range queries clamp to the boundary value; callers
size the grid collar so that clamping is never exercised at nodes that
matter.
"""

import numpy as np
from numba import njit, prange

_SNAP = 1e-9


@njit(cache=True, inline="always")
def _axis_locate(t, n):
    # fractional index t in [0, n-1]; returns (cell index, weight)
    if t <= 0.0:
        return 0, 0.0
    if t >= n - 1.0:
        return n - 1, 0.0
    i = int(np.floor(t))
    f = t - i
    if f < _SNAP:
        f = 0.0
    elif f > 1.0 - _SNAP:
        i += 1
        f = 0.0
        if i > n - 1:
            i = n - 1
    return i, f


@njit(cache=True, inline="always")
def _lerp(a, b, t):
    if t == 0.0:
        return a
    return a + t * (b - a)


@njit(cache=True, inline="always")
def interp3(u, x0, y0, z0, hx, hy, hz, X, Y, Z):
    nx, ny, nz = u.shape
    i, fx = _axis_locate((X - x0) / hx, nx)
    j, fy = _axis_locate((Y - y0) / hy, ny)
    k, fz = _axis_locate((Z - z0) / hz, nz)
    i2 = i + 1 if i + 1 < nx else i
    j2 = j + 1 if j + 1 < ny else j
    k2 = k + 1 if k + 1 < nz else k
    c00 = _lerp(u[i, j, k], u[i2, j, k], fx)
    c10 = _lerp(u[i, j2, k], u[i2, j2, k], fx)
    c01 = _lerp(u[i, j, k2], u[i2, j, k2], fx)
    c11 = _lerp(u[i, j2, k2], u[i2, j2, k2], fx)
    return _lerp(_lerp(c00, c10, fy), _lerp(c01, c11, fy), fz)


@njit(cache=True, inline="always")
def interp2(u, r0, z0, hr, hz, R, Z):
    nr, nz = u.shape
    i, fr = _axis_locate((R - r0) / hr, nr)
    k, fz = _axis_locate((Z - z0) / hz, nz)
    i2 = i + 1 if i + 1 < nr else i
    k2 = k + 1 if k + 1 < nz else k
    return _lerp(
        _lerp(u[i, k], u[i2, k], fr),
        _lerp(u[i, k2], u[i2, k2], fr),
        fz,
    )


@njit(cache=True, inline="always")
def _shift_locate(sh):
    # cell shift and weight of a constant fractional offset
    d = int(np.floor(sh))
    f = sh - d
    if f < _SNAP:
        f = 0.0
    elif f > 1.0 - _SNAP:
        d += 1
        f = 0.0
    return d, f


@njit(cache=True, parallel=True)
def a3_field_3d(u, x0, y0, z0, hx, hy, hz, offs, out):
    """out[q] = mean_j u(q * offs[j]) with offsets pre-scaled by rho_eps.

    Node x, y coordinates sit on the grid, so each offset shifts the
    interpolation cell by a constant amount in x and y, and the group twist
    shifts z by a constant per column; the inner loop runs contiguously in
    z.  Columns whose stencil leaves the grid fall back to the clamped
    generic interpolation (their averages multiply a zero boundary weight).
    """
    nx, ny, nz = u.shape
    m = offs.shape[0]
    dix = np.empty(m, dtype=np.int64)
    diy = np.empty(m, dtype=np.int64)
    fxs = np.empty(m)
    fys = np.empty(m)
    for t in range(m):
        dix[t], fxs[t] = _shift_locate(offs[t, 0] / hx)
        diy[t], fys[t] = _shift_locate(offs[t, 1] / hy)
    inv_m = 1.0 / m
    for col in prange(nx * ny):
        i = col // ny
        j = col % ny
        X = x0 + i * hx
        Y = y0 + j * hy
        acc = np.zeros(nz)
        for t in range(m):
            a = offs[t, 0]
            b = offs[t, 1]
            zoff = offs[t, 2] + 0.5 * (X * b - Y * a)
            ii = i + dix[t]
            jj = j + diy[t]
            fx = fxs[t]
            fy = fys[t]
            if ii < 0 or jj < 0 or ii + 1 > nx - 1 or jj + 1 > ny - 1:
                Z0 = z0 + zoff
                for k in range(nz):
                    acc[k] += interp3(u, x0, y0, z0, hx, hy, hz,
                                      X + a, Y + b, Z0 + k * hz)
                continue
            dk, fz = _shift_locate(zoff / hz)
            c00 = u[ii, jj]
            c10 = u[ii + 1, jj]
            c01 = u[ii, jj + 1]
            c11 = u[ii + 1, jj + 1]
            k_lo = max(0, -dk)
            k_hi = min(nz, nz - 1 - dk)
            Z0 = z0 + zoff
            for k in range(0, k_lo):
                acc[k] += interp3(u, x0, y0, z0, hx, hy, hz,
                                  X + a, Y + b, Z0 + k * hz)
            for k in range(k_lo, k_hi):
                kk = k + dk
                a0 = _lerp(_lerp(c00[kk], c10[kk], fx),
                           _lerp(c01[kk], c11[kk], fx), fy)
                a1 = _lerp(_lerp(c00[kk + 1], c10[kk + 1], fx),
                           _lerp(c01[kk + 1], c11[kk + 1], fx), fy)
                acc[k] += _lerp(a0, a1, fz)
            for k in range(max(k_lo, k_hi), nz):
                acc[k] += interp3(u, x0, y0, z0, hx, hy, hz,
                                  X + a, Y + b, Z0 + k * hz)
        for k in range(nz):
            out[i, j, k] = acc[k] * inv_m


@njit(cache=True, parallel=True)
def sweep_3d(afield, x0, y0, z0, hx, hy, hz, cand, deps, fdat, out):
    """One Jacobi sweep: out = deps * S + (1 - deps) * F.

    S reads the precomputed ball-average field at the node and extremizes
    its interpolant over the shifted candidate positions (pre-scaled by
    rho_{gamma eps}).
    """
    nx, ny, nz = afield.shape
    K = cand.shape[0]
    total = nx * ny * nz
    for idx in prange(total):
        i = idx // (ny * nz)
        j = (idx // nz) % ny
        k = idx % nz
        d = deps[i, j, k]
        if d == 0.0:
            out[i, j, k] = fdat[i, j, k]
            continue
        X = x0 + i * hx
        Y = y0 + j * hy
        Z = z0 + k * hz
        lo = np.inf
        hi = -np.inf
        for t in range(K):
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            v = interp3(afield, x0, y0, z0, hx, hy, hz,
                        X + a, Y + b, Z + c + 0.5 * (X * b - Y * a))
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        s = (afield[i, j, k] + lo + hi) / 3.0
        out[i, j, k] = d * s + (1.0 - d) * fdat[i, j, k]


@njit(cache=True, parallel=True)
def policies_3d(afield, x0, y0, z0, hx, hy, hz, cand, kmin, kmax):
    """Arg-extremal candidate indices per node (lowest index wins ties)."""
    nx, ny, nz = afield.shape
    K = cand.shape[0]
    total = nx * ny * nz
    for idx in prange(total):
        i = idx // (ny * nz)
        j = (idx // nz) % ny
        k = idx % nz
        X = x0 + i * hx
        Y = y0 + j * hy
        Z = z0 + k * hz
        lo = np.inf
        hi = -np.inf
        ilo = 0
        ihi = 0
        for t in range(K):
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            v = interp3(afield, x0, y0, z0, hx, hy, hz,
                        X + a, Y + b, Z + c + 0.5 * (X * b - Y * a))
            if v < lo:
                lo = v
                ilo = t
            if v > hi:
                hi = v
                ihi = t
        kmin[i, j, k] = ilo
        kmax[i, j, k] = ihi


@njit(cache=True, parallel=True)
def frozen_sweep_3d(afield, x0, y0, z0, hx, hy, hz, cand, kmin, kmax,
                    deps, fdat, out):
    """Sweep with frozen candidate policies (linear in the input field)."""
    nx, ny, nz = afield.shape
    total = nx * ny * nz
    for idx in prange(total):
        i = idx // (ny * nz)
        j = (idx // nz) % ny
        k = idx % nz
        d = deps[i, j, k]
        if d == 0.0:
            out[i, j, k] = fdat[i, j, k]
            continue
        X = x0 + i * hx
        Y = y0 + j * hy
        Z = z0 + k * hz
        acc = afield[i, j, k]
        for which in range(2):
            t = kmin[i, j, k] if which == 0 else kmax[i, j, k]
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            acc += interp3(afield, x0, y0, z0, hx, hy, hz,
                           X + a, Y + b, Z + c + 0.5 * (X * b - Y * a))
        out[i, j, k] = d * (acc / 3.0) + (1.0 - d) * fdat[i, j, k]


@njit(cache=True, parallel=True)
def a3_field_radial(u, r0, z0, hr, hz, offs, out):
    """Ball-average field on a (rho, z) grid of a horizontally rotation
    invariant function; the node is placed at (rho, 0, z) without loss.

    Per (row, offset) the target radius and the z shift are constant along
    the column, so the inner loop runs contiguously in z.
    """
    nr, nz = u.shape
    m = offs.shape[0]
    inv_m = 1.0 / m
    for i in prange(nr):
        R = r0 + i * hr
        acc = np.zeros(nz)
        for t in range(m):
            a = offs[t, 0]
            b = offs[t, 1]
            zoff = offs[t, 2] + 0.5 * R * b
            Rp = np.hypot(R + a, b)
            ir, fr = _axis_locate((Rp - r0) / hr, nr)
            ir2 = ir + 1 if ir + 1 < nr else ir
            dk, fz = _shift_locate(zoff / hz)
            k_lo = max(0, -dk)
            k_hi = min(nz, nz - 1 - dk)
            c0 = u[ir]
            c1 = u[ir2]
            Z0 = z0 + zoff
            for k in range(0, k_lo):
                acc[k] += interp2(u, r0, z0, hr, hz, Rp, Z0 + k * hz)
            for k in range(k_lo, k_hi):
                kk = k + dk
                acc[k] += _lerp(_lerp(c0[kk], c1[kk], fr),
                                _lerp(c0[kk + 1], c1[kk + 1], fr), fz)
            for k in range(max(k_lo, k_hi), nz):
                acc[k] += interp2(u, r0, z0, hr, hz, Rp, Z0 + k * hz)
        for k in range(nz):
            out[i, k] = acc[k] * inv_m


@njit(cache=True, parallel=True)
def sweep_radial(afield, r0, z0, hr, hz, cand, deps, fdat, out):
    nr, nz = afield.shape
    K = cand.shape[0]
    total = nr * nz
    for idx in prange(total):
        i = idx // nz
        k = idx % nz
        d = deps[i, k]
        if d == 0.0:
            out[i, k] = fdat[i, k]
            continue
        R = r0 + i * hr
        Z = z0 + k * hz
        lo = np.inf
        hi = -np.inf
        for t in range(K):
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            v = interp2(afield, r0, z0, hr, hz,
                        np.hypot(R + a, b), Z + c + 0.5 * R * b)
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        s = (afield[i, k] + lo + hi) / 3.0
        out[i, k] = d * s + (1.0 - d) * fdat[i, k]


@njit(cache=True, parallel=True)
def policies_radial(afield, r0, z0, hr, hz, cand, kmin, kmax):
    nr, nz = afield.shape
    K = cand.shape[0]
    total = nr * nz
    for idx in prange(total):
        i = idx // nz
        k = idx % nz
        R = r0 + i * hr
        Z = z0 + k * hz
        lo = np.inf
        hi = -np.inf
        ilo = 0
        ihi = 0
        for t in range(K):
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            v = interp2(afield, r0, z0, hr, hz,
                        np.hypot(R + a, b), Z + c + 0.5 * R * b)
            if v < lo:
                lo = v
                ilo = t
            if v > hi:
                hi = v
                ihi = t
        kmin[i, k] = ilo
        kmax[i, k] = ihi


@njit(cache=True, parallel=True)
def frozen_sweep_radial(afield, r0, z0, hr, hz, cand, kmin, kmax,
                        deps, fdat, out):
    nr, nz = afield.shape
    total = nr * nz
    for idx in prange(total):
        i = idx // nz
        k = idx % nz
        d = deps[i, k]
        if d == 0.0:
            out[i, k] = fdat[i, k]
            continue
        R = r0 + i * hr
        Z = z0 + k * hz
        acc = afield[i, k]
        for which in range(2):
            t = kmin[i, k] if which == 0 else kmax[i, k]
            a = cand[t, 0]
            b = cand[t, 1]
            c = cand[t, 2]
            acc += interp2(afield, r0, z0, hr, hz,
                           np.hypot(R + a, b), Z + c + 0.5 * R * b)
        out[i, k] = d * (acc / 3.0) + (1.0 - d) * fdat[i, k]


@njit(cache=True, parallel=True)
def dpp3_sweep_3d(u, x0, y0, z0, hx, hy, hz, comp, deps, fdat, out):
    """Sweep for the any-exponent variant.

    comp[k, j] holds the composite offsets rho_eps(sigma_k) * (ellipsoid
    sample j for candidate k), flattened as (K, m, 3); per node the inner
    average runs per candidate before the outer extremization.
    """
    nx, ny, nz = u.shape
    K = comp.shape[0]
    m = comp.shape[1]
    total = nx * ny * nz
    for idx in prange(total):
        i = idx // (ny * nz)
        j = (idx // nz) % ny
        k = idx % nz
        d = deps[i, j, k]
        if d == 0.0:
            out[i, j, k] = fdat[i, j, k]
            continue
        X = x0 + i * hx
        Y = y0 + j * hy
        Z = z0 + k * hz
        lo = np.inf
        hi = -np.inf
        for t in range(K):
            acc = 0.0
            for s in range(m):
                a = comp[t, s, 0]
                b = comp[t, s, 1]
                c = comp[t, s, 2]
                acc += interp3(u, x0, y0, z0, hx, hy, hz,
                               X + a, Y + b, Z + c + 0.5 * (X * b - Y * a))
            v = acc / m
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        out[i, j, k] = d * 0.5 * (lo + hi) + (1.0 - d) * fdat[i, j, k]
