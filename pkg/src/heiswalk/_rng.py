"""Counter-based uniforms for the trajectory engines.

Every variate is a pure hash of (base seed, trajectory index, step, slot,
attempt), so a trajectory's draw stream is a stable function of the base
seed and its index: batched, serial and parallel execution orders all see
identical numbers, and lazy evaluation of a subset never shifts anyone
else's stream.
"""

import numpy as np

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = float(2.0**-53)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 wrap-around is intended
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def uniform(seed: int, traj, step: int, slot: int, attempt: int = 0):
    """U[0, 1) keyed by (seed, traj, step, slot, attempt); traj may be an array."""
    t = np.asarray(traj, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed % (1 << 64)) + _GOLD * t)
        h = _mix(h + np.uint64((0x9E3779B97F4A7C15 * (step % (1 << 64))) % (1 << 64)))
        h = _mix(h + np.uint64((0x9E3779B97F4A7C15 * (slot % (1 << 64))) % (1 << 64)))
        h = _mix(h + np.uint64((0x9E3779B97F4A7C15 * (attempt % (1 << 64))) % (1 << 64)))
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def uniform_disc(seed: int, traj, step: int, slot: int) -> np.ndarray:
    """Uniform samples of the Euclidean unit disc (polar transform)."""
    u = uniform(seed, traj, step, slot)
    th = 2.0 * np.pi * uniform(seed, traj, step, slot + 1)
    r = np.sqrt(u)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def uniform_gauge_ball(seed: int, traj, step: int, slot: int) -> np.ndarray:
    """Uniform samples of the unit gauge ball by per-trajectory rejection.

    Rejection attempts are indexed, so acceptance at different rounds for
    different trajectories keeps the draws independent and reproducible.
    """
    t = np.asarray(traj, dtype=np.uint64)
    n = t.shape[0]
    out = np.empty((n, 3))
    pending = np.arange(n)
    for attempt in range(256):
        tt = t[pending]
        w = np.column_stack([
            2.0 * uniform(seed, tt, step, slot, attempt) - 1.0,
            2.0 * uniform(seed, tt, step, slot + 1, attempt) - 1.0,
            0.5 * uniform(seed, tt, step, slot + 2, attempt) - 0.25,
        ])
        g4 = (w[:, 0] ** 2 + w[:, 1] ** 2) ** 2 + 16.0 * w[:, 2] ** 2
        ok = g4 < 1.0
        out[pending[ok]] = w[ok]
        pending = pending[~ok]
        if pending.size == 0:
            return out
    raise RuntimeError("gauge-ball rejection failed to terminate")
