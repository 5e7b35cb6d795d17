"""Batch experiment runner.

Subcommands: expand | dpp-solve | walk | game | annulus | regularity.
Each reads a single JSON config document (unknown keys rejected), runs the
corresponding library experiment, and writes self-describing records to CSV
(default) or JSON.  Exit codes: 0 success, 2 config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import averaging as av
from . import dpp as dp
from . import stochastic as st
from .calculus import named_field
from .domains import Domain, make_annulus_domain, make_ball_domain, make_cusp_domain
from .errors import ConfigInvalid, HeiswalkError, NonConvergence


class _Config:
    """Flat key-value config with strict key accounting."""

    def __init__(self, data: dict, allowed: set[str], required: set[str]):
        if not isinstance(data, dict):
            raise ConfigInvalid("config document must be a JSON object")
        unknown = set(data) - allowed
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        missing = required - set(data)
        if missing:
            raise ConfigInvalid(f"missing config keys: {sorted(missing)}")
        self.data = data

    def get(self, key, default=None):
        return self.data.get(key, default)


def _domain_from(spec) -> Domain:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigInvalid("domain spec needs a 'kind'")
    kind = spec["kind"]
    if kind == "ball":
        return make_ball_domain(spec.get("center", [0, 0, 0]), spec["radius"])
    if kind == "annulus":
        return make_annulus_domain(spec.get("center", [0, 0, 0]),
                                   spec["r_inner"], spec["r_outer"])
    if kind == "cusp":
        return make_cusp_domain(spec.get("alpha", 0.0))
    raise ConfigInvalid(f"unknown domain kind {kind!r}")


def _quad_from(cfg: _Config) -> av.QuadratureSpec:
    return av.QuadratureSpec(cfg.get("quad_mode", "tensor"),
                             int(cfg.get("quad_count", 4096)),
                             int(cfg.get("seed", 0)))


def _write_records(records: list[dict], out_path: str | None, fmt: str):
    if fmt == "json":
        text = json.dumps(records, indent=1)
        if out_path:
            with open(out_path, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return
    if not records:
        return
    cols = list(records[0].keys())
    fh = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in records:
            w.writerow(r)
    finally:
        if out_path:
            fh.close()


# --- experiments --------------------------------------------------------

_EXPAND_REFS = {
    ("A1", "x^2"): 0.5,
    ("A2", "x^2"): 0.25,
    ("A3", "x^2"): 2.0 / (3.0 * np.pi),
    ("A3K", "x^2"): np.pi / 12.0,
}


def cmd_expand(cfg: _Config, seed: int) -> list[dict]:
    quad = _quad_from(cfg)
    search = av.BallSearchSpec(int(cfg.get("search_candidates", 512)),
                               int(cfg.get("search_rounds", 20)), seed)
    radii = cfg.get("radii", [0.2, 0.1, 0.05, 0.025])
    p = float(cfg.get("p", 3.0))
    records = []
    for probe_name in cfg.get("operators", ["A1", "A2", "A3", "A3K"]):
        for fname in cfg.get("fields", ["x^2"]):
            for qpt in cfg.get("points", [[0.0, 0.0, 0.0]]):
                f = named_field(fname)
                q = np.asarray(qpt, dtype=float)
                t0 = time.time()
                if probe_name in ("A1", "A2", "A3", "A3K"):
                    slope = av.coefficient_fit(
                        lambda r: av.stochastic_avg(probe_name, f, r, q, quad),
                        f, q, radii)
                elif probe_name == "minmax":
                    slope = av.coefficient_fit(
                        lambda r: av.deterministic_avg(f, r, q, search).value,
                        f, q, radii)
                elif probe_name in ("dpp1", "dpp2", "dpp3"):
                    slope = av.coefficient_fit(
                        lambda r: av.dpp_operator(probe_name, f, r, q, p,
                                                  None, quad, search),
                        f, q, radii)
                else:
                    raise ConfigInvalid(f"unknown operator {probe_name!r}")
                ref = _reference_slope(probe_name, f, q, p)
                records.append({
                    "experiment": "expand", "operator": probe_name,
                    "field": fname, "q": json.dumps(list(map(float, qpt))),
                    "p": p, "radii": json.dumps(list(map(float, radii))),
                    "seed": seed, "measured": slope,
                    "reference": ref if ref is not None else "",
                    "wall_time": time.time() - t0,
                })
    return records


def _reference_slope(op: str, f, q, p: float):
    """Second-order coefficient predicted by the mean value expansions."""
    from .calculus import sub_laplacians
    from .errors import DegenerateGradient

    jet = f.jet(q)
    dh = float(np.trace(jet.hess_h))
    try:
        sl = sub_laplacians(jet, max(p, 2.000001) if p <= 2 else p)
        dinf, dpn = sl.delta_inf, sl.delta_p_normalized
    except DegenerateGradient:
        dinf = dpn = None
    if op == "A1":
        return dh / 4.0
    if op == "A2":
        return dh / 8.0
    if op == "A3":
        return dh / (3.0 * np.pi)
    if op == "A3K":
        return np.pi / 24.0 * dh
    if op == "minmax":
        return None if dinf is None else dinf / 2.0
    if dpn is None:
        return None
    if op == "dpp1":
        return dpn / (2.0 * (p - 2.0) + 3.0 * np.pi)
    if op == "dpp2":
        return dpn / (3.0 * np.pi)
    if op == "dpp3":
        return dpn / (p - 1.0)
    return None


def cmd_dpp_solve(cfg: _Config, seed: int, out_prefix: str | None) -> list[dict]:
    dom = _domain_from(cfg.get("domain"))
    F = named_field(cfg.get("data", "x"))
    if cfg.get("data_clamp"):
        lo, hi = cfg.get("data_clamp")
        F = st.clamped_radial_data(float(cfg.get("p")), lo, hi)
    quad = _quad_from(cfg)
    records = []
    reference = named_field(cfg.get("reference")) if cfg.get("reference") else None
    for eps in cfg.get("eps_list", [0.2]):
        t0 = time.time()
        dcfg = dp.DppConfig(
            eps=float(eps), p=float(cfg.get("p", 3.0)),
            variant=cfg.get("variant", "dpp2"),
            tol=float(cfg.get("tol", 1e-9)),
            max_iter=int(cfg.get("max_iter", 100_000)), quad=quad,
            n_candidates=int(cfg.get("n_candidates", 128)),
            method=cfg.get("method", "jacobi"))
        h_xy = cfg.get("h_xy", eps / 4.0)
        h_z = cfg.get("h_z")
        if cfg.get("solver", "grid3d") == "radial":
            u, rep = dp.solve_dpp_radial(dom, F, dcfg, h_r=float(h_xy),
                                         h_z=float(h_z) if h_z else None)
            grid = dp.make_grid(dom, dcfg, float(h_xy),
                                float(h_z) if h_z else None)
            gf = u.to_grid_field(grid)
        else:
            grid = dp.make_grid(dom, dcfg, float(h_xy),
                                float(h_z) if h_z else None)
            gf, rep = dp.solve_dpp(dom, F, dcfg, grid)
        err = ""
        if reference is not None:
            nodes = grid.nodes().reshape(-1, 3)
            inside = dom.contains(nodes)
            err = float(np.max(np.abs(
                gf.values.reshape(-1)[inside] - reference(nodes[inside]))))
        if out_prefix:
            gf.to_binary(f"{out_prefix}_eps{eps}.gridfield")
        records.append({
            "experiment": "dpp-solve", "eps": eps, "p": cfg.get("p", 3.0),
            "variant": cfg.get("variant", "dpp2"), "seed": seed,
            "h_xy": h_xy, "h_z": h_z if h_z else "",
            "iterations": rep.iterations, "residual": rep.residual,
            "sup_error": err, "wall_time": time.time() - t0,
        })
    return records


def cmd_walk(cfg: _Config, seed: int) -> list[dict]:
    dom = _domain_from(cfg.get("domain"))
    wcfg = st.WalkConfig(eps=float(cfg.get("eps", 0.1)),
                         stop_fraction=float(cfg.get("stop_fraction", 1e-3)),
                         max_steps=int(cfg.get("max_steps", 1_000_000)),
                         base_seed=seed)
    n_traj = int(cfg.get("n_traj", 10_000))
    records = []
    for fname in cfg.get("fields", ["x"]):
        F = named_field(fname)
        for qpt in cfg.get("points", [[0.0, 0.0, 0.0]]):
            t0 = time.time()
            est = st.estimate_walk_value(dom, wcfg, F, np.asarray(qpt, float),
                                         n_traj)
            records.append({
                "experiment": "walk", "field": fname,
                "q": json.dumps(list(map(float, qpt))),
                "eps": wcfg.eps, "n_traj": n_traj, "seed": seed,
                "measured": est.mean,
                "reference": float(F(np.asarray(qpt, float)[None, :])[0]),
                "std_error": est.std_error,
                "truncated": est.truncated_count,
                "wall_time": time.time() - t0,
            })
    return records


def cmd_game(cfg: _Config, seed: int) -> list[dict]:
    dom = _domain_from(cfg.get("domain"))
    quad = _quad_from(cfg)
    eps = float(cfg.get("eps", 0.2))
    p = float(cfg.get("p", 3.0))
    gcfg = st.GameConfig(eps=eps, p=p, base_seed=seed,
                         max_steps=int(cfg.get("max_steps", 200_000)),
                         quad=quad,
                         n_candidates=int(cfg.get("n_candidates", 128)))
    F = named_field(cfg.get("data", "x"))
    dcfg = dp.DppConfig(eps=eps, p=p, tol=float(cfg.get("tol", 1e-8)),
                        quad=quad, method=cfg.get("method", "jacobi"),
                        n_candidates=gcfg.n_candidates)
    grid = dp.make_grid(dom, dcfg, float(cfg.get("h_xy", eps / 4.0)),
                        float(cfg.get("h_z", eps / 4.0)))
    u, rep = dp.solve_dpp(dom, F, dcfg, grid)
    sI = st.greedy_strategy(u, gcfg, "maximize")
    sII = st.greedy_strategy(u, gcfg, "minimize")
    n_traj = int(cfg.get("n_traj", 20_000))
    records = []
    for qpt in cfg.get("points", [[0.0, 0.0, 0.0]]):
        q = np.asarray(qpt, dtype=float)
        t0 = time.time()
        est = st.estimate_game_value(dom, gcfg, F, q, sI, sII, n_traj)
        records.append({
            "experiment": "game", "q": json.dumps(list(map(float, qpt))),
            "eps": eps, "p": p, "n_traj": n_traj, "seed": seed,
            "measured": est.mean, "reference": float(u.interp(q)),
            "std_error": est.std_error, "truncated": est.truncated_count,
            "solver_iterations": rep.iterations,
            "wall_time": time.time() - t0,
        })
    return records


def cmd_annulus(cfg: _Config, seed: int) -> list[dict]:
    t0 = time.time()
    res = st.annulus_experiment(
        R1=float(cfg.get("r1", 1.0)), R2=float(cfg.get("r2", 2.0)),
        R3=float(cfg.get("r3", 4.0)), p=float(cfg.get("p", 4.0)),
        eps=float(cfg.get("eps", 0.05)), n_traj=int(cfg.get("n_traj", 10_000)),
        xi=float(cfg.get("xi", 0.05)), base_seed=seed,
        tol=float(cfg.get("tol", 1e-6)), method=cfg.get("method", "auto"),
        h_r=cfg.get("h_xy"), h_z=cfg.get("h_z"),
        quad=_quad_from(cfg), max_steps=int(cfg.get("max_steps", 1_000_000)))
    return [{
        "experiment": "annulus", "r1": cfg.get("r1", 1.0),
        "r2": cfg.get("r2", 2.0), "r3": cfg.get("r3", 4.0),
        "p": cfg.get("p", 4.0), "eps": cfg.get("eps", 0.05),
        "n_traj": cfg.get("n_traj", 10_000), "xi": res.xi, "seed": seed,
        "measured": res.exit_prob.mean, "reference": res.bound + res.xi,
        "std_error": res.exit_prob.std_error,
        "truncated": res.exit_prob.truncated_count,
        "mean_tau": res.mean_tau, "wall_time": time.time() - t0,
    }]


def cmd_regularity(cfg: _Config, seed: int) -> list[dict]:
    dom = _domain_from(cfg.get("domain"))
    t0 = time.time()
    res = st.regularity_probe(
        dom, np.asarray(cfg.get("q0", [1.0, 0.0, 0.0]), float),
        eta=float(cfg.get("eta", 0.2)), delta=float(cfg.get("delta", 0.5)),
        eps=float(cfg.get("eps", 0.1)), n_traj=int(cfg.get("n_traj", 2000)),
        kind=cfg.get("kind", "walk"), delta_hat=cfg.get("delta_hat"),
        base_seed=seed, p=float(cfg.get("p", 3.0)))
    return [{
        "experiment": "regularity", "kind": res.kind,
        "q0": json.dumps(cfg.get("q0", [1.0, 0.0, 0.0])),
        "delta": cfg.get("delta", 0.5), "delta_hat": res.delta_hat,
        "eps": cfg.get("eps", 0.1), "eta": cfg.get("eta", 0.2),
        "n_traj": cfg.get("n_traj", 2000), "seed": seed,
        "measured": res.estimate.mean,
        "reference": 1.0 - float(cfg.get("eta", 0.2)),
        "std_error": res.estimate.std_error,
        "truncated": res.estimate.truncated_count,
        "wall_time": time.time() - t0,
    }]


_ALLOWED = {
    "expand": {"operators", "fields", "points", "radii", "p", "quad_mode",
               "quad_count", "seed", "search_candidates", "search_rounds"},
    "dpp-solve": {"domain", "data", "data_clamp", "reference", "eps_list", "p",
                  "variant", "tol", "max_iter", "quad_mode", "quad_count",
                  "seed", "n_candidates", "method", "h_xy", "h_z", "solver"},
    "walk": {"domain", "fields", "points", "eps", "stop_fraction",
             "max_steps", "n_traj", "seed"},
    "game": {"domain", "data", "points", "eps", "p", "tol", "method",
             "max_steps", "n_traj", "quad_mode", "quad_count", "seed",
             "n_candidates", "h_xy", "h_z"},
    "annulus": {"r1", "r2", "r3", "p", "eps", "n_traj", "xi", "tol", "method",
                "h_xy", "h_z", "quad_mode", "quad_count", "seed", "max_steps"},
    "regularity": {"domain", "q0", "eta", "delta", "delta_hat", "eps",
                   "n_traj", "kind", "p", "seed"},
}

_REQUIRED = {
    "expand": set(),
    "dpp-solve": {"domain"},
    "walk": {"domain"},
    "game": {"domain"},
    "annulus": set(),
    "regularity": {"domain"},
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="heiswalk",
        description="Heisenberg-group mean value, walk and tug-of-war experiments")
    parser.add_argument("command", choices=sorted(_ALLOWED))
    parser.add_argument("--config", required=True, help="JSON config document")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap solver threads (results are thread-count independent)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)

    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, args.threads))

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = _Config(raw, _ALLOWED[args.command], _REQUIRED[args.command])
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        if args.command == "expand":
            records = cmd_expand(cfg, seed)
        elif args.command == "dpp-solve":
            prefix = args.out.rsplit(".", 1)[0] if args.out else None
            records = cmd_dpp_solve(cfg, seed, prefix)
        elif args.command == "walk":
            records = cmd_walk(cfg, seed)
        elif args.command == "game":
            records = cmd_game(cfg, seed)
        elif args.command == "annulus":
            records = cmd_annulus(cfg, seed)
        else:
            records = cmd_regularity(cfg, seed)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, HeiswalkError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    _write_records(records, args.out, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
