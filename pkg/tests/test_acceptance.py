"""Acceptance harness: one test per quantitative claim, one printed verdict
line each (run with `pytest tests/test_acceptance.py -s` to see them all).

The heavy fixed-point solves reuse the rotational reduction and the
Krylov-accelerated method where the plain monotone iteration would not fit
the runtime budget; every returned field is verified against the full
nonlinear operator at its stated tolerance.
"""

import time

import numpy as np
import pytest

from heiswalk import averaging as av
from heiswalk import dpp
from heiswalk import stochastic as st
from heiswalk.calculus import (ScalarField, gauge_power_field, named_field,
                               radial_p_harmonic, sub_laplacians)
from heiswalk.domains import make_annulus_domain, make_ball_domain
from heiswalk.hgroup import dist, gauge


def rand_points(rng, n, lo=0.5, hi=5.0):
    # points with gauge in [lo, hi], away from the vertical axis
    pts = rng.normal(size=(n, 3))
    pts[:, 2] *= 0.2
    g = gauge(pts)
    lam = rng.uniform(lo, hi, size=n) / g
    pts[:, 0] *= lam
    pts[:, 1] *= lam
    pts[:, 2] *= lam**2
    return pts


def report(num, ok, detail):
    print(f"\nACCEPTANCE {num:02d} [{'PASS' if ok else 'FAIL'}] {detail}")
    return ok


def test_criterion_01_expansion_coefficients():
    t0 = time.time()
    quad = av.QuadratureSpec("tensor", 100_000, 0)
    f = named_field("x^2")
    q0 = np.zeros(3)
    radii = [0.2, 0.1, 0.05, 0.025]
    refs = {"A1": 0.5, "A2": 0.25, "A3": 2 / (3 * np.pi), "A3K": np.pi / 12}
    rels = {}
    for kind, ref in refs.items():
        slope = av.coefficient_fit(
            lambda r: av.stochastic_avg(kind, f, r, q0, quad), f, q0, radii)
        rels[kind] = abs(slope / ref - 1.0)
    elapsed = time.time() - t0
    ok = max(rels.values()) < 0.02 and elapsed < 60.0
    report(1, ok, f"fitted coefficients rel err "
           f"{ {k: f'{v:.4%}' for k, v in rels.items()} }, {elapsed:.1f}s")
    assert max(rels.values()) < 0.02
    assert elapsed < 60.0


def test_criterion_02_minmax_expansion():
    f = named_field("x+0.2x^2")
    q0 = np.zeros(3)
    search = av.BallSearchSpec(512, 20, 0)
    slope = av.coefficient_fit(
        lambda r: av.deterministic_avg(f, r, q0, search).value, f, q0,
        [0.2, 0.1, 0.05, 0.025])
    ref = 0.2  # half the infinity Laplacian of x + 0.2 x^2 at 0
    ok = abs(slope / ref - 1.0) < 0.02
    report(2, ok, f"slope {slope:.6f} vs {ref} ({abs(slope/ref-1):.4%})")
    assert ok


def test_criterion_03_anisotropic_expansion():
    quad = av.QuadratureSpec("tensor", 100_000, 0)
    f = named_field("x^2")
    q0 = np.zeros(3)
    radii = [0.2, 0.1, 0.05, 0.025]
    worst = 0.0
    for alpha in (0.5, 2.0):
        ref = 2.0 / (3.0 * np.pi) * alpha**2
        slope = av.coefficient_fit(
            lambda r: av.ellipsoid_avg(f, r, alpha, [1, 0, 0], q0, quad),
            f, q0, radii)
        worst = max(worst, abs(slope / ref - 1.0))
    ok = worst < 0.03
    report(3, ok, f"worst rel err {worst:.4%} over aspects 0.5, 2")
    assert ok


def test_criterion_04_dpp_solver_structure():
    dom = make_ball_domain([0, 0, 0], 1.0)
    cfg = dpp.DppConfig(eps=0.4, p=3.0, tol=1e-9,
                        quad=av.QuadratureSpec("tensor", 512, 0),
                        n_candidates=64)
    grid = dpp.make_grid(dom, cfg, h_xy=0.2, h_z=0.2)
    const = ScalarField(lambda p: np.full(p.shape[:-1], 0.8))
    u, rep = dpp.solve_dpp(dom, const, cfg, grid)
    const_ok = rep.iterations <= 2 and rep.residual <= 1e-12
    rng = np.random.default_rng(0)
    pair_ok, res_ok, mono_ok = True, True, True
    for _ in range(5):
        a, b, c = rng.normal(size=3)

        def data(p, a=a, b=b, c=c):
            return a * p[..., 0] + b * np.cos(3 * p[..., 1]) + c

        F = ScalarField(data)
        G = ScalarField(lambda p, f=data, s=float(rng.uniform(0.05, 0.4)):
                        f(p) + s)
        uf, rf = dpp.solve_dpp(dom, F, cfg, grid)
        ug, _ = dpp.solve_dpp(dom, G, cfg, grid)
        mono_ok &= bool(rf.monotone)
        pair_ok &= bool(np.all(ug.values - uf.values >= -1e-12))
        res_ok &= dpp.dpp_residual(uf, dom, F, cfg) <= 1e-9
    ok = const_ok and pair_ok and res_ok and mono_ok
    report(4, ok, f"constant: {rep.iterations} sweeps res {rep.residual:.1e}; "
           f"5 monotone pairs ok={pair_ok}; residuals<=1e-9 ok={res_ok}")
    assert ok


def test_criterion_05_first_convergence_theorem():
    # Thm 12.1-style sweep on the (1,3) annulus with exactly p-harmonic
    # radial data, h_xy = eps/4, solved by the exact rotational reduction.
    t0 = time.time()
    dom = make_annulus_domain([0, 0, 0], 1.0, 3.0)
    p = 4.0
    F = st.clamped_radial_data(p, 0.5, 6.0)
    errors = {}
    prev = None
    for eps in (0.2, 0.1, 0.05):
        cfg = dpp.DppConfig(eps=eps, p=p, tol=3e-7,
                            quad=av.QuadratureSpec("tensor", 1024, 0),
                            n_candidates=512, method="policy",
                            calibrate_offsets=True)
        u, rep = dpp.solve_dpp_radial(dom, F, cfg, h_r=eps / 4.0,
                                      h_z=eps / 16.0, initial=prev)
        prev = u
        rr = u.r0 + u.h_r * np.arange(u.values.shape[0])
        zz = u.z0 + u.h_z * np.arange(u.values.shape[1])
        R, Z = np.meshgrid(rr, zz, indexing="ij")
        pts = np.stack([R, np.zeros_like(R), Z], -1).reshape(-1, 3)
        inside = dom.contains(pts)
        errors[eps] = float(
            np.abs(u.values.reshape(-1) - F(pts))[inside].max())
    elapsed = time.time() - t0
    ratio = errors[0.05] / errors[0.1]
    decreasing = errors[0.2] > errors[0.1] > errors[0.05]
    ok = decreasing and 0.3 <= ratio <= 0.8 and elapsed <= 1800
    report(5, ok, f"E={ {k: f'{v:.5f}' for k, v in errors.items()} } "
           f"ratio E(0.05)/E(0.1)={ratio:.3f}, {elapsed:.0f}s; "
           "known blocker: the pinned grid-to-step ratio and the "
           "degenerate-gradient axis leave a scale-proportional error "
           "plateau, so the genuine first-order decay is buried "
           "(see decisions ledger)")
    assert elapsed <= 1800
    assert decreasing, f"E not decreasing: {errors}"
    assert 0.3 <= ratio <= 0.8, f"ratio {ratio:.3f} outside [0.3, 0.8]"


GAME_SETUP = {}


def _solved_criterion6_field():
    if "u" not in GAME_SETUP:
        dom = make_ball_domain([0, 0, 0], 1.0)
        eps, p = 0.2, 3.0
        quad = av.QuadratureSpec("tensor", 1024, 0)
        cfg = dpp.DppConfig(eps=eps, p=p, tol=1e-7, quad=quad,
                            n_candidates=128)
        grid = dpp.make_grid(dom, cfg, h_xy=eps / 4.0, h_z=eps / 4.0)
        u, rep = dpp.solve_dpp(dom, named_field("x"), cfg, grid)
        GAME_SETUP.update(dom=dom, eps=eps, p=p, quad=quad, u=u, rep=rep)
    return GAME_SETUP


def test_criterion_06_game_equals_dpp_value():
    setup = _solved_criterion6_field()
    dom, eps, p, quad, u = (setup[k] for k in ("dom", "eps", "p", "quad", "u"))
    gcfg = st.GameConfig(eps=eps, p=p, base_seed=2024, quad=quad,
                         n_candidates=128, max_steps=200_000)
    sI = st.greedy_strategy(u, gcfg, "maximize")
    sII = st.greedy_strategy(u, gcfg, "minimize")
    F = named_field("x")
    probes = [[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [-0.3, 0.2, 0.0],
              [0.1, -0.4, 0.05], [0.0, 0.5, -0.03]]
    diffs = []
    ok = True
    for q0 in probes:
        est = st.estimate_game_value(dom, gcfg, F, np.asarray(q0), sI, sII,
                                     20_000)
        ref = float(u.interp(np.asarray(q0, float)))
        gap = abs(est.mean - ref)
        diffs.append((gap, 3 * est.std_error + 2e-2))
        ok &= gap <= 3 * est.std_error + 2e-2
    detail = "; ".join(f"{g:.4f}<= {b:.4f}" for g, b in diffs)
    report(6, ok, f"|game - u_eps| vs 3SE+0.02 at 5 probes: {detail}")
    assert ok


def test_criterion_07_walk_harmonic_reproduction():
    dom = make_ball_domain([0, 0, 0], 1.0)
    cfg = st.WalkConfig(eps=0.15, base_seed=99, max_steps=1_000_000)
    probes = [np.array([0.3, 0.0, 0.0]), np.array([-0.2, 0.3, 0.02]),
              np.array([0.0, 0.0, 0.1])]
    ok = True
    details = []
    for fname in ("x", "y", "z"):
        F = named_field(fname)
        for q0 in probes:
            est = st.estimate_walk_value(dom, cfg, F, q0, 10_000)
            ref = float(F(q0[None, :])[0])
            gap = abs(est.mean - ref)
            frac = est.truncated_count / est.n
            ok &= gap <= 3 * est.std_error and frac < 0.01
            details.append(f"{fname}@{q0.tolist()}: gap {gap:.4f} "
                           f"SE {est.std_error:.4f} trunc {frac:.2%}")
    report(7, ok, " | ".join(details[:3]) + " ...")
    assert ok


def test_criterion_08_martingale_and_confinement():
    dom = make_ball_domain([0, 0, 0], 1.0)
    cfg = st.WalkConfig(eps=0.1, base_seed=41)
    inc = st.single_step_increments(dom, cfg, [0.3, 0.2, 0.1], 100_000)
    mean = inc.mean(axis=0)
    se = inc.std(axis=0, ddof=1) / np.sqrt(len(inc))
    drift_ok = bool(np.all(np.abs(mean) <= 4 * se))
    # 10^6 steps with the in-engine confinement assertion armed
    starts = np.tile(np.array([[0.1, -0.1, 0.01]]), (13_000, 1))
    res = st.run_walk_batch(dom, st.WalkConfig(eps=0.2, base_seed=7,
                                               max_steps=400), starts)
    total_steps = int(res.steps.sum())
    inside_ok = bool(np.all(gauge(res.final) <= 1.0)) and total_steps >= 1_000_000
    ok = drift_ok and inside_ok
    report(8, ok, f"|mean inc| {np.abs(mean).round(6).tolist()} vs 4SE "
           f"{(4*se).round(6).tolist()}; confinement over "
           f"{total_steps} steps: {inside_ok}")
    assert ok


def test_criterion_09_stopping_time_tail():
    dom = make_ball_domain([0, 0, 0], 1.0)
    cfg = st.GameConfig(eps=0.1, p=3.0, base_seed=17, max_steps=100_000)
    res = st.run_game_batch(dom, cfg, np.zeros((20_000, 3)),
                            st.zero_strategy(), st.zero_strategy())
    n0 = 50
    ks = np.arange(1, 9)
    tail = np.array([(res.tau > k * n0).mean() for k in ks])
    keep = tail > 0
    slope = np.polyfit(ks[keep], np.log(tail[keep]), 1)[0]
    ok = slope < -0.01
    report(9, ok, f"log-linear tail slope {slope:.4f} (n0={n0}, "
           f"tails {np.round(tail, 4).tolist()})")
    assert ok


def test_criterion_10_annulus_bound():
    t0 = time.time()
    res = st.annulus_experiment(R1=1.0, R2=2.0, R3=4.0, p=4.0, eps=0.05,
                                n_traj=10_000, xi=0.05, base_seed=31,
                                tol=1e-5, method="policy",
                                h_r=0.05 / 4, h_z=0.05 / 2,
                                quad=av.QuadratureSpec("tensor", 1024, 0))
    limit = res.bound + res.xi + 3 * res.exit_prob.std_error
    ok = res.exit_prob.mean <= limit
    report(10, ok, f"exit prob {res.exit_prob.mean:.4f} <= bound "
           f"{res.bound:.3f} + xi {res.xi} + 3SE "
           f"{3*res.exit_prob.std_error:.4f} (mean tau {res.mean_tau:.0f}, "
           f"{time.time()-t0:.0f}s)")
    assert res.bound == pytest.approx(0.5, abs=1e-12)
    assert ok


def test_criterion_11_derivative_formulas():
    rng = np.random.default_rng(12345)
    worst_jet = 0.0
    for s in (3.0, 4.0, 6.0, 10.0):
        analytic = gauge_power_field(s)
        fd = ScalarField(analytic.fn)
        for q in rand_points(rng, 250):
            ja, jf = analytic.jet(q), fd.jet(q)
            worst_jet = max(
                worst_jet,
                np.max(np.abs(ja.grad_h - jf.grad_h)) / (1 + np.max(np.abs(ja.grad_h))),
                np.max(np.abs(ja.hess_h - jf.hess_h)) / (1 + np.max(np.abs(ja.hess_h))),
                abs(ja.z_deriv - jf.z_deriv) / (1 + abs(ja.z_deriv)))
    worst_res = 0.0
    for p in (2.5, 3.0, 4.0, 6.0, 8.0):
        u = radial_p_harmonic(p)
        for q in rand_points(rng, 200, lo=0.5, hi=4.0):
            jet = u.jet(q)
            sl = sub_laplacians(jet, p)
            scale = 1 + np.hypot(*jet.grad_h) ** (p - 2) * np.abs(jet.hess_h).max()
            worst_res = max(worst_res, abs(sl.delta_p) / scale)
    ok = worst_jet <= 1e-6 and worst_res <= 1e-6
    report(11, ok, f"jet FD mismatch {worst_jet:.2e}, radial p-Laplacian "
           f"residual {worst_res:.2e}")
    assert ok


def test_criterion_12_determinism_across_threads():
    import numba

    dom = make_ball_domain([0, 0, 0], 1.0)
    cfg = dpp.DppConfig(eps=0.4, p=3.0, tol=1e-9,
                        quad=av.QuadratureSpec("tensor", 512, 0),
                        n_candidates=64)
    grid = dpp.make_grid(dom, cfg, h_xy=0.2, h_z=0.2)
    F = named_field("x^2")
    fields = []
    for threads in (1, 2):
        numba.set_num_threads(threads)
        u, _ = dpp.solve_dpp(dom, F, cfg, grid)
        fields.append(u.values.copy())
    numba.set_num_threads(2)
    solver_ok = bool(np.array_equal(fields[0], fields[1]))

    gcfg = st.GameConfig(eps=0.2, p=3.0, base_seed=5, max_steps=50_000)
    z = st.zero_strategy()
    starts = np.tile(np.array([[0.1, 0.2, 0.0]]), (200, 1))
    g1 = st.run_game_batch(dom, gcfg, starts, z, z)
    g2 = st.run_game_batch(dom, gcfg, starts, z, z)
    game_ok = bool(np.array_equal(g1.terminal, g2.terminal)
                   and np.array_equal(g1.tau, g2.tau))

    wcfg = st.WalkConfig(eps=0.15, base_seed=3, max_steps=100_000)
    w1 = st.run_walk_batch(dom, wcfg, starts)
    w2 = st.run_walk_batch(dom, wcfg, starts)
    walk_ok = bool(np.array_equal(w1.final, w2.final))
    ok = solver_ok and game_ok and walk_ok
    report(12, ok, f"solver bitwise across 1/2 threads: {solver_ok}; "
           f"game replay: {game_ok}; walk replay: {walk_ok}")
    assert ok
