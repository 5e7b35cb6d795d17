"""Trajectory simulators: the horizontal eps-walk and the tug-of-war with noise.

The walk advances by uniform draws from the horizontal disc, the third
coordinate slaved through the group twist, with the step radius clamped to
the distance from the complement (so the walk never leaves the domain).
The game first applies a player shift scaled by rho_{gamma_p eps} (chosen
by a fair three-way coin: player I, player II, or none), then a uniform
gauge-ball noise shift scaled by rho_eps; the stopping time fires at step n
when an auxiliary uniform exceeds the scaled boundary distance of the
previous position, whose value is then read.

All draws come from the counter RNG keyed by (base_seed, trajectory index,
step, slot), so runs reproduce bit for bit regardless of batching order or
thread count.  Estimates reduce per-trajectory values in index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _rng
from .averaging import QuadratureSpec, check_dpp3_params, dpp3_default_params, gamma_p
from .calculus import ScalarField, radial_profile
from .domains import Domain, make_annulus_domain
from .dpp import DppConfig, candidate_net, solve_dpp_radial, _scaled_offsets
from .errors import ConfigInvalid, ConstraintViolation, NotOnBoundary
from .hgroup import dilate, ellipsoid_map, EllipsoidShape, gauge, group_mul

__all__ = [
    "WalkConfig",
    "GameConfig",
    "Strategy",
    "Estimate",
    "WalkResult",
    "GameResult",
    "run_walk",
    "run_walk_batch",
    "estimate_walk_value",
    "run_game",
    "run_game_batch",
    "estimate_game_value",
    "zero_strategy",
    "greedy_strategy",
    "annulus_experiment",
    "AnnulusResult",
    "regularity_probe",
    "ProbeResult",
    "single_step_increments",
    "dump_game_trajectories",
]


@dataclass(frozen=True)
class WalkConfig:
    eps: float
    stop_fraction: float = 1e-3
    max_steps: int = 1_000_000
    base_seed: int = 0

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigInvalid("eps must be positive")
        if not 0.0 < self.stop_fraction < 1.0:
            raise ConfigInvalid("stop_fraction must lie in (0, 1)")
        if self.max_steps < 1:
            raise ConfigInvalid("max_steps must be at least 1")


@dataclass(frozen=True)
class GameConfig:
    eps: float
    p: float
    max_steps: int = 1_000_000
    base_seed: int = 0
    variant: str = "dpp2"
    s_p: float | None = None
    a_p: float | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    n_candidates: int = 128

    def __post_init__(self):
        if self.eps <= 0 or self.max_steps < 1:
            raise ConfigInvalid("bad eps / max_steps")
        if self.variant not in ("dpp2", "dpp3"):
            raise ConfigInvalid(f"unknown game variant {self.variant!r}")
        if self.variant == "dpp2":
            if self.p <= 2.0:
                raise ConstraintViolation("the three-way game needs p > 2")
        else:
            if (self.s_p is None) != (self.a_p is None):
                raise ConfigInvalid("give both s_p and a_p or neither")
            if self.s_p is None:
                s, a = dpp3_default_params(self.p)
                object.__setattr__(self, "s_p", s)
                object.__setattr__(self, "a_p", a)
            check_dpp3_params(self.p, self.s_p, self.a_p)

    def gamma(self) -> float:
        return gamma_p(self.p)


@dataclass
class Strategy:
    """Markov advance rule: (positions (n, 3), step index) -> shifts (n, 3).

    Returned shifts are clamped into the closed unit gauge ball by the
    engine; `advance` must be stateless (trajectories are interleaved).
    """

    advance: Callable[[np.ndarray, int], np.ndarray]
    label: str = "strategy"


def zero_strategy() -> Strategy:
    return Strategy(lambda pts, step: np.zeros_like(pts), label="zero")


@dataclass
class Estimate:
    mean: float
    std_error: float
    n: int
    truncated_count: int


def _make_estimate(values: np.ndarray, truncated: np.ndarray) -> Estimate:
    n = len(values)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean, se, n, int(np.count_nonzero(truncated)))


@dataclass
class WalkResult:
    final: np.ndarray
    steps: np.ndarray
    truncated: np.ndarray


def run_walk_batch(dom: Domain, cfg: WalkConfig, starts: np.ndarray,
                   traj_indices: np.ndarray | None = None) -> WalkResult:
    """Drive independent walks in lockstep until every one halts.

    Halts a trajectory when its step radius min(eps, dist) drops below
    stop_fraction * eps; flags it truncated at max_steps instead.  Asserts
    confinement after every step.
    """
    P = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    n = len(P)
    if not np.all(dom.contains(P)):
        raise ConfigInvalid("walk must start inside the domain")
    idx = (np.arange(n, dtype=np.uint64) if traj_indices is None
           else np.asarray(traj_indices, dtype=np.uint64))
    final = P.copy()
    steps = np.zeros(n, dtype=np.int64)
    truncated = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    threshold = cfg.stop_fraction * cfg.eps
    for k in range(1, cfg.max_steps + 1):
        d = np.asarray(dom.dist_to_complement(P[alive]), dtype=float)
        radius = np.minimum(cfg.eps, d)
        done = radius < threshold
        if np.any(done):
            sel = alive[done]
            final[sel] = P[sel]
            steps[sel] = k - 1
            alive = alive[~done]
            radius = radius[~done]
        if alive.size == 0:
            break
        ab = _rng.uniform_disc(cfg.base_seed, idx[alive], k, 0)
        x, y = P[alive, 0], P[alive, 1]
        P[alive, 0] += radius * ab[:, 0]
        P[alive, 1] += radius * ab[:, 1]
        P[alive, 2] += radius * 0.5 * (x * ab[:, 1] - y * ab[:, 0])
        if not np.all(dom.contains(P[alive])):
            raise AssertionError("walk left the domain")  # pragma: no cover
    else:
        final[alive] = P[alive]
        steps[alive] = cfg.max_steps
        truncated[alive] = True
    return WalkResult(final, steps, truncated)


def run_walk(dom: Domain, cfg: WalkConfig, q0, traj_index: int = 0):
    """One walk; its draw stream is fixed by (cfg.base_seed, traj_index)."""
    res = run_walk_batch(dom, cfg, np.asarray(q0, float)[None, :],
                         np.array([traj_index], dtype=np.uint64))
    return res.final[0], int(res.steps[0]), bool(res.truncated[0])


def estimate_walk_value(dom: Domain, cfg: WalkConfig, F: ScalarField, q0,
                        n_traj: int) -> Estimate:
    """Mean of the data at walk terminal points over n_traj trajectories."""
    starts = np.broadcast_to(np.asarray(q0, dtype=float), (n_traj, 3))
    res = run_walk_batch(dom, cfg, np.array(starts))
    return _make_estimate(F(res.final), res.truncated)


def single_step_increments(dom: Domain, cfg: WalkConfig, q0,
                           n: int) -> np.ndarray:
    """n independent single-step increments from a fixed start (drift check)."""
    q0 = np.asarray(q0, dtype=float)
    starts = np.array(np.broadcast_to(q0, (n, 3)))
    d = np.asarray(dom.dist_to_complement(starts), dtype=float)
    radius = np.minimum(cfg.eps, d)
    ab = _rng.uniform_disc(cfg.base_seed, np.arange(n, dtype=np.uint64), 1, 0)
    inc = np.empty((n, 3))
    inc[:, 0] = radius * ab[:, 0]
    inc[:, 1] = radius * ab[:, 1]
    inc[:, 2] = radius * 0.5 * (q0[0] * ab[:, 1] - q0[1] * ab[:, 0])
    return inc


# --- tug of war with noise ---------------------------------------------


def _clamp_unit_ball(w: np.ndarray) -> np.ndarray:
    g = gauge(w)
    over = g > 1.0
    if np.any(over):
        w = w.copy()
        w[over] = dilate(1.0 / g[over], w[over])
    return w


@dataclass
class GameResult:
    terminal: np.ndarray
    tau: np.ndarray
    truncated: np.ndarray


def run_game_batch(dom: Domain, cfg: GameConfig, starts: np.ndarray,
                   sI: Strategy, sII: Strategy,
                   traj_indices: np.ndarray | None = None) -> GameResult:
    """Drive independent games in lockstep.

    Per step: the stopping coin fires when t_n exceeds the scaled boundary
    distance of the current position (whose value is then read); otherwise
    a fair three-way coin activates player I, player II or neither, and the
    position advances by the activated shift followed by the gauge-ball
    noise.  Strategies are only queried at positions that survived the
    stopping check, hence inside the domain.
    """
    P = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    n = len(P)
    idx = (np.arange(n, dtype=np.uint64) if traj_indices is None
           else np.asarray(traj_indices, dtype=np.uint64))
    terminal = P.copy()
    tau = np.zeros(n, dtype=np.int64)
    truncated = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    for k in range(1, cfg.max_steps + 1):
        t_n = _rng.uniform(cfg.base_seed, idx[alive], k, 1)
        d = np.minimum(1.0, np.asarray(
            dom.dist_to_complement(P[alive]), dtype=float) / cfg.eps)
        stop = t_n > d
        if np.any(stop):
            sel = alive[stop]
            terminal[sel] = P[sel]
            tau[sel] = k
            alive = alive[~stop]
        if alive.size == 0:
            break
        P[alive] = _game_advance(P[alive], idx[alive], k, cfg, sI, sII)
    else:
        terminal[alive] = P[alive]
        tau[alive] = cfg.max_steps
        truncated[alive] = True
    return GameResult(terminal, tau, truncated)


def _game_advance(pos: np.ndarray, idx: np.ndarray, k: int, cfg: GameConfig,
                  sI: Strategy, sII: Strategy) -> np.ndarray:
    """Resolve step k from the given positions: player coin, clamped shift,
    gauge-ball (or stretched) noise; pure in (positions, idx, k)."""
    coin = _rng.uniform(cfg.base_seed, idx, k, 0)
    shifts = np.zeros((len(pos), 3))
    n_sides = 3 if cfg.variant == "dpp2" else 2
    s_n = np.minimum(n_sides - 1, np.floor(n_sides * coin).astype(np.int64))
    for which, strat in ((0, sI), (1, sII)):
        sub = s_n == which
        if np.any(sub):
            shifts[sub] = _clamp_unit_ball(np.atleast_2d(
                np.asarray(strat.advance(pos[sub], k - 1), float)))
    w = _rng.uniform_gauge_ball(cfg.base_seed, idx, k, 2)
    if cfg.variant == "dpp2":
        geps = cfg.gamma() * cfg.eps
        return group_mul(group_mul(pos, dilate(geps, shifts)),
                         dilate(cfg.eps, w))
    noise = _ellipsoid_noise(shifts, w, cfg.s_p, cfg.a_p)
    return group_mul(group_mul(pos, dilate(cfg.eps, shifts)),
                     dilate(cfg.s_p * cfg.eps, noise))


def _ellipsoid_noise(shifts: np.ndarray, w: np.ndarray, s_p: float,
                     a_p: float) -> np.ndarray:
    """Stretch ball noise along each shift's horizontal direction.

    Aspect 1 + (a_p - 1) |y_hor|^2 with orientation y_hor/|y_hor|; a
    vanishing horizontal shift degenerates to the plain ball.
    """
    hor = np.hypot(shifts[:, 0], shifts[:, 1])
    out = w.copy()
    act = hor > 1e-12
    if np.any(act):
        nu = np.zeros((int(np.count_nonzero(act)), 2))
        nu[:, 0] = shifts[act, 0] / hor[act]
        nu[:, 1] = shifts[act, 1] / hor[act]
        alpha = 1.0 + (a_p - 1.0) * hor[act] ** 2
        proj = w[act, 0] * nu[:, 0] + w[act, 1] * nu[:, 1]
        scale = (alpha - 1.0) * proj
        out[act, 0] += scale * nu[:, 0]
        out[act, 1] += scale * nu[:, 1]
    return out


def run_game(dom: Domain, cfg: GameConfig, q0, sI: Strategy, sII: Strategy,
             traj_index: int = 0):
    res = run_game_batch(dom, cfg, np.asarray(q0, float)[None, :], sI, sII,
                         np.array([traj_index], dtype=np.uint64))
    return res.terminal[0], int(res.tau[0]), bool(res.truncated[0])


def dump_game_trajectories(dom: Domain, cfg: GameConfig, starts: np.ndarray,
                           sI: Strategy, sII: Strategy, path: str,
                           traj_indices: np.ndarray | None = None):
    """Debug dump: one CSV row (traj_id, step, x, y, z, s_n, t_n) per step.

    Positions are those entering the step's stopping check; the draws are
    pure functions of (seed, trajectory, step), so the dump replays exactly
    the trajectories run_game_batch produces for the same inputs.
    """
    P = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    n = len(P)
    idx = (np.arange(n, dtype=np.uint64) if traj_indices is None
           else np.asarray(traj_indices, dtype=np.uint64))
    n_sides = 3 if cfg.variant == "dpp2" else 2
    with open(path, "w") as fh:
        fh.write("traj_id,step,x,y,z,s_n,t_n\n")
        alive = np.arange(n)
        for k in range(1, cfg.max_steps + 1):
            t_n = _rng.uniform(cfg.base_seed, idx[alive], k, 1)
            coin = _rng.uniform(cfg.base_seed, idx[alive], k, 0)
            s_n = np.minimum(n_sides - 1,
                             np.floor(n_sides * coin).astype(np.int64)) + 1
            for j, a in enumerate(alive):
                fh.write(f"{int(idx[a])},{k},{float(P[a, 0])!r},"
                         f"{float(P[a, 1])!r},{float(P[a, 2])!r},"
                         f"{int(s_n[j])},{float(t_n[j])!r}\n")
            d = np.minimum(1.0, np.asarray(
                dom.dist_to_complement(P[alive]), dtype=float) / cfg.eps)
            alive = alive[t_n <= d]
            if alive.size == 0:
                break
            P[alive] = _game_advance(P[alive], idx[alive], k, cfg, sI, sII)


def estimate_game_value(dom: Domain, cfg: GameConfig, F: ScalarField, q0,
                        sI: Strategy, sII: Strategy, n_traj: int) -> Estimate:
    """Mean of the data at stopped positions; truncated games contribute the
    value at the truncation point and are counted."""
    starts = np.array(np.broadcast_to(np.asarray(q0, dtype=float), (n_traj, 3)))
    res = run_game_batch(dom, cfg, starts, sI, sII)
    return _make_estimate(F(res.terminal), res.truncated)


def greedy_strategy(u, cfg: GameConfig, mode: str) -> Strategy:
    """Extremize the interpolated ball-average field over the candidate net.

    `u` is a solved grid field (box or radial); the strategy shifts by the
    candidate sigma maximizing (or minimizing) the ball average of u at
    q * rho_{gamma_p eps}(sigma), ties broken by lowest candidate index.
    """
    if mode not in ("maximize", "minimize"):
        raise ConfigInvalid("mode must be 'maximize' or 'minimize'")
    if cfg.variant != "dpp2":
        raise ConfigInvalid("greedy strategies are defined for the dpp2 game")
    offsets = _scaled_offsets(
        DppConfig(eps=cfg.eps, p=cfg.p, quad=cfg.quad,
                  n_candidates=cfg.n_candidates))
    afield = u.ball_average_field(offsets)
    net = candidate_net(cfg.n_candidates)
    scaled = dilate(cfg.gamma() * cfg.eps, net)
    pick = np.argmax if mode == "maximize" else np.argmin

    def advance(pts: np.ndarray, step: int) -> np.ndarray:
        pts = np.atleast_2d(pts)
        cand_pos = group_mul(pts[:, None, :], scaled[None, :, :])
        vals = afield.interp(cand_pos.reshape(-1, 3)).reshape(len(pts), -1)
        return net[pick(vals, axis=1)]

    return Strategy(advance, label=f"greedy-{mode}")


# --- experiments ---------------------------------------------------------


@dataclass
class AnnulusResult:
    exit_prob: Estimate
    bound: float
    xi: float
    solve_report: object
    mean_tau: float


def clamped_radial_data(p: float, lo: float, hi: float) -> ScalarField:
    """Radial profile with the gauge clamped to [lo, hi]: bounded data that
    agrees with the profile on every point the solver or game can read."""

    def fn(pts):
        return radial_profile(p, np.clip(gauge(pts), lo, hi))

    return ScalarField(fn, name=f"radial{p}-clamped")


def annulus_experiment(R1: float, R2: float, R3: float, p: float, eps: float,
                       n_traj: int, xi: float, base_seed: int = 0,
                       tol: float = 1e-6, method: str = "auto",
                       h_r: float | None = None, h_z: float | None = None,
                       quad: QuadratureSpec | None = None,
                       max_steps: int = 1_000_000) -> AnnulusResult:
    """Exit-probability experiment on the annulus R1 < gauge < R3.

    Player II plays greedy-minimize extracted from the solved fixed point
    with increasing radial data; player I plays the adversarial
    greedy-maximize.  Games start on the gauge sphere of radius R2; the
    reported probability of stopping outside the closed ball of radius
    R3 - eps is compared against (v(R2) - v(R1)) / (v(R3) - v(R1)) + xi
    with the explicit increasing profile v.
    """
    if not 0.0 < R1 < R2 < R3:
        raise ConfigInvalid("need 0 < R1 < R2 < R3")
    if p <= 2.0:
        raise ConstraintViolation("the annulus game needs p > 2")
    quad = quad or QuadratureSpec("tensor", 1024, 0)
    dom = make_annulus_domain([0.0, 0.0, 0.0], R1, R3)
    F = clamped_radial_data(p, R1 / 2.0, 2.0 * R3)
    cfg_solve = DppConfig(eps=eps, p=p, tol=tol, quad=quad, method=method)
    u, report = solve_dpp_radial(dom, F, cfg_solve, h_r=h_r, h_z=h_z)

    cfg_game = GameConfig(eps=eps, p=p, max_steps=max_steps,
                          base_seed=base_seed, quad=quad)
    sII = greedy_strategy(u, cfg_game, "minimize")
    sI = greedy_strategy(u, cfg_game, "maximize")

    w = _rng.uniform_gauge_ball(base_seed, np.arange(n_traj, dtype=np.uint64),
                                0, 7)
    starts = dilate(R2 / gauge(w), w)
    res = run_game_batch(dom, cfg_game, starts, sI, sII)
    exited = (gauge(res.terminal) > R3 - eps).astype(float)
    est = _make_estimate(exited, res.truncated)
    v1, v2, v3 = (radial_profile(p, t) for t in (R1, R2, R3))
    bound = float((v2 - v1) / (v3 - v1))
    return AnnulusResult(est, bound, xi, report, float(np.mean(res.tau)))


@dataclass
class ProbeResult:
    estimate: Estimate
    delta_hat: float
    kind: str


def _check_boundary_point(dom: Domain, q0: np.ndarray, seed: int):
    if float(dom.dist_to_complement(q0[None, :])[0]) > 1e-9:
        raise NotOnBoundary("probe point lies in the interior")
    from .hgroup import sample_ball

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(11,)))
    if not (bool(dom.contains(q0[None, :])[0])
            or np.any(dom.contains(sample_ball(q0, 1e-3, rng, 512)))):
        raise NotOnBoundary("probe point does not adhere to the domain")


def regularity_probe(dom: Domain, q0, eta: float, delta: float, eps: float,
                     n_traj: int, kind: str, delta_hat: float | None = None,
                     base_seed: int = 0, p: float = 3.0,
                     solved_field=None, cfg_game: GameConfig | None = None,
                     max_steps: int = 200_000) -> ProbeResult:
    """Empirical probability that trajectories started near a boundary point
    terminate near it.

    kind "walk" runs the plain walk; kind "game" has player II play
    greedy-minimize on the data -min(1, d(q, q0)) from a solved fixed point
    (supplied or solved here on the fly), player I adversarial.  Starts are
    sampled in B_delta_hat(q0) intersected with the domain
    (delta_hat defaults to delta / 8).
    """
    q0 = np.asarray(q0, dtype=float).reshape(3)
    _check_boundary_point(dom, q0, base_seed)
    if delta_hat is None:
        delta_hat = delta / 8.0
    from .hgroup import sample_ball
    from .hgroup import dist as gdist

    rng = np.random.default_rng(np.random.SeedSequence(entropy=base_seed,
                                                       spawn_key=(13,)))
    starts = np.empty((n_traj, 3))
    got = 0
    while got < n_traj:
        cand = sample_ball(q0, delta_hat, rng, 4 * (n_traj - got) + 64)
        cand = cand[dom.contains(cand)]
        take = min(len(cand), n_traj - got)
        starts[got:got + take] = cand[:take]
        got += take

    if kind == "walk":
        res = run_walk_batch(dom, WalkConfig(eps=eps, base_seed=base_seed,
                                             max_steps=max_steps), starts)
        hits = (gdist(q0, res.final) < delta).astype(float)
        est = _make_estimate(hits, res.truncated)
        return ProbeResult(est, float(delta_hat), kind)
    if kind == "game":
        cfg_game = cfg_game or GameConfig(eps=eps, p=p, base_seed=base_seed,
                                          max_steps=max_steps)
        if solved_field is None:
            from .dpp import make_grid, solve_dpp

            def data(pts):
                return -np.minimum(1.0, gdist(q0, pts))

            Fd = ScalarField(data, name="boundary-data")
            cfg_solve = DppConfig(eps=eps, p=cfg_game.p, tol=1e-6,
                                  quad=cfg_game.quad, method="auto")
            grid = make_grid(dom, cfg_solve, h_xy=eps / 4.0, h_z=eps / 4.0)
            solved_field, _ = solve_dpp(dom, Fd, cfg_solve, grid)
        sII = greedy_strategy(solved_field, cfg_game, "minimize")
        sI = greedy_strategy(solved_field, cfg_game, "maximize")
        res = run_game_batch(dom, cfg_game, starts, sI, sII)
        hits = (gdist(q0, res.terminal) < delta).astype(float)
        est = _make_estimate(hits, res.truncated)
        return ProbeResult(est, float(delta_hat), kind)
    raise ConfigInvalid("kind must be 'walk' or 'game'")
