import numpy as np
import pytest

from heiswalk import dpp, stochastic as st
from heiswalk.averaging import QuadratureSpec
from heiswalk.calculus import ScalarField, named_field
from heiswalk.domains import make_ball_domain
from heiswalk.errors import ConfigInvalid, ConstraintViolation
from heiswalk.hgroup import dist, gauge

QUAD = QuadratureSpec("tensor", 512, 0)
BALL = make_ball_domain([0, 0, 0], 1.0)


def test_walk_stays_inside_and_z_increment():
    cfg = st.WalkConfig(eps=0.15, base_seed=5, max_steps=5000)
    final, steps, truncated = st.run_walk(BALL, cfg, [0.2, 0.1, 0.0])
    assert BALL.contains(final[None, :])[0] or (
        BALL.dist_to_complement(final[None, :])[0] >= 0.0)
    assert steps > 0 and not truncated

    # replay one step by hand: z increment carries the group twist
    from heiswalk import _rng

    q0 = np.array([0.3, -0.2, 0.05])
    d = float(BALL.dist_to_complement(q0[None, :])[0])
    radius = min(cfg.eps, d)
    ab = _rng.uniform_disc(cfg.base_seed, np.array([0], dtype=np.uint64), 1, 0)
    expect = q0 + radius * np.array([
        ab[0, 0], ab[0, 1],
        0.5 * (q0[0] * ab[0, 1] - q0[1] * ab[0, 0])])
    one = st.run_walk_batch(
        BALL, st.WalkConfig(eps=cfg.eps, base_seed=cfg.base_seed, max_steps=1),
        q0[None, :])
    np.testing.assert_allclose(one.final[0], expect, atol=1e-14)


def test_walk_confinement_many_steps():
    cfg = st.WalkConfig(eps=0.2, base_seed=1, max_steps=400)
    starts = np.tile(np.array([[0.1, -0.2, 0.02]]), (2500, 1))
    res = st.run_walk_batch(BALL, cfg, starts)  # asserts confinement inside
    assert np.all(gauge(res.final) <= 1.0)


def test_walk_requires_interior_start():
    cfg = st.WalkConfig(eps=0.1)
    with pytest.raises(ConfigInvalid):
        st.run_walk(BALL, cfg, [2.0, 0.0, 0.0])


def test_walk_martingale_single_step():
    cfg = st.WalkConfig(eps=0.1, base_seed=3)
    inc = st.single_step_increments(BALL, cfg, [0.3, 0.2, 0.1], 100_000)
    mean = inc.mean(axis=0)
    se = inc.std(axis=0, ddof=1) / np.sqrt(len(inc))
    assert np.all(np.abs(mean) <= 4 * se + 1e-15)


def test_walk_terminal_mean_near_center():
    cfg = st.WalkConfig(eps=0.2, base_seed=7, max_steps=100_000)
    res = st.run_walk_batch(BALL, cfg, np.zeros((10_000, 3)))
    se = res.final.std(axis=0, ddof=1) / np.sqrt(len(res.final))
    assert np.all(np.abs(res.final.mean(axis=0)) <= 3 * se + 1e-12)


def test_walk_value_reproduces_harmonic_data():
    cfg = st.WalkConfig(eps=0.15, base_seed=11, max_steps=200_000)
    cases = [("x", np.array([0.3, 0.0, 0.0])),
             ("z", np.array([0.3, 0.2, 0.1]))]
    for fname, q0 in cases:
        F = named_field(fname)
        est = st.estimate_walk_value(BALL, cfg, F, q0, 4000)
        ref = float(F(q0[None, :])[0])
        assert abs(est.mean - ref) <= 3 * est.std_error
        assert est.truncated_count == 0

    c = ScalarField(lambda p: np.full(p.shape[:-1], 0.7))
    est = st.estimate_walk_value(BALL, cfg, c, np.zeros(3), 100)
    assert est.mean == pytest.approx(0.7, abs=1e-14)
    assert est.std_error <= 1e-15


def test_game_stops_immediately_outside():
    cfg = st.GameConfig(eps=0.1, p=3.0, base_seed=0)
    q0 = np.array([3.0, 0.0, 0.0])
    terminal, tau, truncated = st.run_game(BALL, cfg, q0, st.zero_strategy(),
                                           st.zero_strategy())
    assert tau == 1 and not truncated
    np.testing.assert_array_equal(terminal, q0)


def test_game_symmetric_noise_centered():
    cfg = st.GameConfig(eps=0.1, p=2.1, base_seed=2, max_steps=100_000)
    res = st.run_game_batch(BALL, cfg, np.zeros((5000, 3)),
                            st.zero_strategy(), st.zero_strategy())
    assert res.truncated.sum() == 0
    se = res.terminal[:, 0].std(ddof=1) / np.sqrt(len(res.terminal))
    assert abs(res.terminal[:, 0].mean()) <= 3 * se


def test_stopping_time_geometric_tail():
    cfg = st.GameConfig(eps=0.1, p=3.0, base_seed=4, max_steps=100_000)
    res = st.run_game_batch(BALL, cfg, np.zeros((20_000, 3)),
                            st.zero_strategy(), st.zero_strategy())
    n0 = 50
    ks = np.arange(1, 7)
    tail = np.array([(res.tau > k * n0).mean() for k in ks])
    assert np.all(tail > 0)
    slope = np.polyfit(ks, np.log(tail), 1)[0]
    assert slope < -0.01


def test_game_truncation_fraction_decays():
    cfg_short = st.GameConfig(eps=0.15, p=3.0, base_seed=5, max_steps=30)
    cfg_long = st.GameConfig(eps=0.15, p=3.0, base_seed=5, max_steps=3000)
    starts = np.zeros((2000, 3))
    z = st.zero_strategy()
    short = st.run_game_batch(BALL, cfg_short, starts, z, z)
    long = st.run_game_batch(BALL, cfg_long, starts, z, z)
    assert long.truncated.sum() < short.truncated.sum()
    assert long.truncated.mean() < 0.01


def solved_ball_field(eps=0.25, p=3.0, fname="x"):
    cfg = dpp.DppConfig(eps=eps, p=p, tol=1e-8, quad=QUAD, n_candidates=128)
    grid = dpp.make_grid(BALL, cfg, h_xy=eps / 3.0, h_z=eps / 3.0)
    u, _ = dpp.solve_dpp(BALL, named_field(fname), cfg, grid)
    return u


def test_greedy_strategy_directions():
    u = solved_ball_field()
    gcfg = st.GameConfig(eps=0.25, p=3.0, base_seed=0, quad=QUAD)
    smax = st.greedy_strategy(u, gcfg, "maximize")
    smin = st.greedy_strategy(u, gcfg, "minimize")
    pts = np.array([[0.0, 0.0, 0.0], [0.2, -0.1, 0.02]])
    amax = smax.advance(pts, 0)
    amin = smin.advance(pts, 0)
    # maximizing the x-field pushes along +x, minimizing along -x
    assert np.all(amax[:, 0] > 0.9)
    assert np.all(np.abs(amax[:, 1]) < 0.2)
    np.testing.assert_allclose(amin, -amax, atol=1e-12)
    # constant field: tie-break returns the first candidate for every point
    flat = dpp.GridField(u.spec, np.zeros_like(u.values))
    szero = st.greedy_strategy(flat, gcfg, "maximize")
    adv = szero.advance(pts, 0)
    net = dpp.candidate_net(gcfg.n_candidates)
    np.testing.assert_array_equal(adv, np.tile(net[0], (2, 1)))


def test_game_value_matches_dpp_solution():
    eps, p = 0.25, 3.0
    u = solved_ball_field(eps, p)
    gcfg = st.GameConfig(eps=eps, p=p, base_seed=9, quad=QUAD,
                         max_steps=100_000)
    sI = st.greedy_strategy(u, gcfg, "maximize")
    sII = st.greedy_strategy(u, gcfg, "minimize")
    F = named_field("x")
    for q0 in ([0.0, 0.0, 0.0], [0.3, -0.2, 0.05]):
        est = st.estimate_game_value(BALL, gcfg, F, np.asarray(q0), sI, sII,
                                     4000)
        ref = float(u.interp(np.asarray(q0, float)))
        assert abs(est.mean - ref) <= 3 * est.std_error + 2e-2


def test_game_value_ordering():
    eps, p = 0.25, 3.0
    u = solved_ball_field(eps, p)
    gcfg = st.GameConfig(eps=eps, p=p, base_seed=10, quad=QUAD,
                         max_steps=100_000)
    sI_max = st.greedy_strategy(u, gcfg, "maximize")
    sII_min = st.greedy_strategy(u, gcfg, "minimize")
    F = named_field("x")
    q0 = np.array([0.1, 0.0, 0.0])
    best = st.estimate_game_value(BALL, gcfg, F, q0, sI_max, sII_min, 3000)
    passive = st.estimate_game_value(BALL, gcfg, F, q0, st.zero_strategy(),
                                     sII_min, 3000)
    assert passive.mean <= best.mean + 3 * (passive.std_error
                                            + best.std_error)
    # swapping the greedy rules between the players can only hurt player I
    sI_min = st.greedy_strategy(u, gcfg, "minimize")
    sII_max = st.greedy_strategy(u, gcfg, "maximize")
    swapped = st.estimate_game_value(BALL, gcfg, F, q0, sI_min, sII_max, 3000)
    assert swapped.mean <= best.mean + 3 * (swapped.std_error
                                            + best.std_error)


def test_seed_determinism():
    cfg = st.GameConfig(eps=0.2, p=3.0, base_seed=123, max_steps=10_000)
    z = st.zero_strategy()
    starts = np.tile(np.array([[0.1, 0.2, 0.0]]), (50, 1))
    r1 = st.run_game_batch(BALL, cfg, starts, z, z)
    r2 = st.run_game_batch(BALL, cfg, starts, z, z)
    np.testing.assert_array_equal(r1.terminal, r2.terminal)
    np.testing.assert_array_equal(r1.tau, r2.tau)
    # single-trajectory replay agrees with its batch slot
    t5, tau5, _ = st.run_game(BALL, cfg, starts[5], z, z, traj_index=5)
    np.testing.assert_array_equal(t5, r1.terminal[5])
    assert tau5 == r1.tau[5]

    wcfg = st.WalkConfig(eps=0.2, base_seed=77, max_steps=10_000)
    w1 = st.run_walk_batch(BALL, wcfg, starts)
    w2 = st.run_walk_batch(BALL, wcfg, starts)
    np.testing.assert_array_equal(w1.final, w2.final)


def test_dpp3_game_variant_runs():
    cfg = st.GameConfig(eps=0.15, p=1.5, variant="dpp3", base_seed=6,
                        max_steps=50_000)
    res = st.run_game_batch(BALL, cfg, np.zeros((500, 3)), st.zero_strategy(),
                            st.zero_strategy())
    assert res.truncated.sum() == 0
    assert np.all(res.tau >= 1)
    with pytest.raises(ConstraintViolation):
        st.GameConfig(eps=0.1, p=2.0, variant="dpp2")


def test_regularity_probe_walk():
    res = st.regularity_probe(BALL, [1.0, 0.0, 0.0], eta=0.2, delta=0.6,
                              eps=0.05, n_traj=800, kind="walk", base_seed=3)
    assert res.delta_hat == pytest.approx(0.075)
    assert res.estimate.mean >= 0.8
    # a huge target ball catches everything
    res2 = st.regularity_probe(BALL, [1.0, 0.0, 0.0], eta=0.2, delta=2.5,
                               eps=0.05, n_traj=200, kind="walk", base_seed=3)
    assert res2.estimate.mean == 1.0


def test_regularity_probe_requires_boundary_point():
    from heiswalk.errors import NotOnBoundary

    with pytest.raises(NotOnBoundary):
        st.regularity_probe(BALL, [0.2, 0.0, 0.0], eta=0.2, delta=0.5,
                            eps=0.1, n_traj=10, kind="walk")


def test_trajectory_dump_replays_batch(tmp_path):
    import csv

    cfg = st.GameConfig(eps=0.2, p=3.0, base_seed=21, max_steps=5000)
    z = st.zero_strategy()
    starts = np.tile(np.array([[0.2, -0.1, 0.0]]), (6, 1))
    path = tmp_path / "traj.csv"
    st.dump_game_trajectories(BALL, cfg, starts, z, z, str(path))
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    ref = st.run_game_batch(BALL, cfg, starts, z, z)
    last = {}
    for r in rows:
        last[int(r["traj_id"])] = r
    for tid, row in last.items():
        assert int(row["step"]) == ref.tau[tid]
        np.testing.assert_allclose(
            [float(row["x"]), float(row["y"]), float(row["z"])],
            ref.terminal[tid])
    assert set(rows[0].keys()) == {"traj_id", "step", "x", "y", "z",
                                   "s_n", "t_n"}
