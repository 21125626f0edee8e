"""Command-line front end: ``navsim validate|run|critical-points|plot|batch``.

Exit codes:
    0  success (run: converged)
    1  validation failed
    2  unreadable/malformed config or log, bad arguments
    3  run ended in a collision
    4  run reached the horizon without converging
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from navsim import config as cfgmod
from navsim.config import ConfigError

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_COLLISION, EXIT_HORIZON = 0, 1, 2, 3, 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _overrides(args) -> list:
    out = list(getattr(args, "override", None) or [])
    if getattr(args, "seed", None) is not None:
        out.append(f"sim.seed={args.seed}")
    if getattr(args, "step", None) is not None:
        out.append(f"sim.step={args.step}")
    if getattr(args, "horizon", None) is not None:
        out.append(f"sim.horizon={args.horizon}")
    return out


def _out_dir(args, cfg=None) -> Path:
    if getattr(args, "out_dir", None):
        d = Path(args.out_dir)
    elif cfg is not None and cfg.output.dir:
        d = Path(cfg.output.dir)
    else:
        d = Path(os.environ.get("NAVSIM_OUT_DIR", "navsim_out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(args):
    return cfgmod.load_config(args.config, _overrides(args))


def geometry(scenario) -> dict:
    if scenario.variant == "fleet":
        w = scenario.fleet.world
        return {"r_W": w.r_W, "obstacles": [[*c[:2], r] for c, r in zip(w.centers.tolist(), w.radii.tolist())]}
    if scenario.variant == "single_star":
        from navsim.svg import star_outline

        sm = scenario.smap
        outlines = [star_outline(o.center, o.shape) for o in sm.obstacles] if sm.n == 2 else []
        return {"r_W": sm.r_W, "obstacles": [], "outlines": outlines}
    w = scenario.world
    return {"r_W": w.r_W, "obstacles": [[*c[:2], r] for c, r in zip(w.centers.tolist(), w.radii.tolist())]}


# --- validate -------------------------------------------------------------

def validate_config(cfg) -> dict:
    """All load-time checks for a config; ``report["ok"]`` is the verdict."""
    from navsim.barrier import certify, tau_for_world
    from navsim.controller import check_gains
    from navsim.plant import friction_bound_certify

    scenario = cfgmod.build_scenario(cfg)
    rep = {"variant": scenario.variant, "checks": {}, "advisory": []}
    checks = rep["checks"]
    if scenario.variant == "fleet":
        from navsim.multiagent import check_assumptions

        a = check_assumptions(scenario.fleet)
        checks["fleet_spacing"] = a["spacing_ok"]
        checks["sensing_radius"] = a["sensing_ok"]
        rep["fleet"] = a
        if not a["sensing_literal_ok"]:
            rep["advisory"].append("sensing radius meets the operative sqrt(tau) bound but not the "
                                   "sqrt(min(rbar^2, rbar_d)) form")
        rep["tau"] = scenario.fleet.spec.tau
        rep["d_star_star"] = scenario.fleet.d_star_star
        checks["barrier"] = certify(scenario.fleet.spec).ok
        plant = scenario.fleet.agents[0].plant
        gains = scenario.fleet.agents[0].gains
    else:
        plant, gains = scenario.plant, scenario.gains
        if scenario.variant == "single_star":
            from navsim.starmap import validate_map

            mrep = validate_map(scenario.smap)
            checks["star_map"] = mrep.ok
            rep["star_map"] = mrep.to_dict()
            world = scenario.smap.world
            goal = scenario.smap.H(scenario.x_d) if mrep.shells_ok else scenario.x_d
            checks["start_free"] = bool(scenario.smap.in_free_space(scenario.x0))
        else:
            world, goal = scenario.world, scenario.x_d
            checks["start_free"] = bool(world.in_free_space(scenario.x0))
        report = world.validate(goal)
        checks["world"] = report.ok
        rep["world"] = report.to_dict()
        if report.ok:
            spec, _, dss = tau_for_world(world, goal, scenario.k1, scenario.k2, scenario.tau)
            rep["tau"] = spec.tau
            rep["d_star_star"] = dss
            rep["tau_below_d_star_star"] = bool(spec.tau < dss)
            checks["barrier"] = certify(spec).ok
            if world.M:
                d = world.distances(scenario.x_d if scenario.variant != "single_star" else goal)
                checks["goal_outside_barriers"] = bool(np.min(d) > spec.tau)
    ok_f, worst = friction_bound_certify(plant.friction, plant.alpha_true, n=len(plant.g))
    checks["friction_bound"] = ok_f
    rep["friction_worst_ratio"] = worst
    rep["alpha_true"] = plant.alpha_true
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        msgs = check_gains(gains, plant.alpha_true)
    rep["advisory"] += msgs
    rep["ok"] = all(checks.values())
    return rep


def _print_validate(rep: dict, out=None):
    out = out or sys.stdout
    print(f"variant: {rep['variant']}", file=out)
    for name, ok in rep["checks"].items():
        print(f"  {'PASS' if ok else 'FAIL'}  {name}", file=out)
    w = rep.get("world")
    if w:
        print(f"  r_bar = {w['r_bar']:.6g}  r_bar_d = {w['r_bar_d']:.6g}", file=out)
        for pair, slack in w["violations"]:
            print(f"  violation: {pair} slack {slack:.6g}", file=out)
    if "tau" in rep:
        print(f"  tau = {rep['tau']:.6g}  d** = {rep.get('d_star_star', float('nan')):.6g}", file=out)
    if "fleet" in rep:
        for v in rep["fleet"]["spacing_violations"]:
            print(f"  violation: {v[0]} slack {v[1]:.6g}", file=out)
    if "star_map" in rep:
        sm = rep["star_map"]
        print(f"  min |det J_H| = {sm['min_abs_det']:.6g}  boundary residual = {sm['boundary_residual']:.3g}",
              file=out)
        for p in sm["problems"]:
            print(f"  problem: {p}", file=out)
    for a in rep["advisory"]:
        print(f"  note: {a}", file=out)
    print("OK" if rep["ok"] else "INVALID", file=out)


def cmd_validate(args) -> int:
    try:
        cfg = _load(args)
        rep = validate_config(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _print_validate(rep)
    d = _out_dir(args, cfg)
    (d / f"{cfg.output.name}.validate.json").write_text(json.dumps(_jsonable(rep), indent=2, sort_keys=True))
    return EXIT_OK if rep["ok"] else EXIT_INVALID


# --- run ------------------------------------------------------------------

def exit_code_for(metrics: dict) -> int:
    if metrics["collision"]:
        return EXIT_COLLISION
    return EXIT_OK if metrics["converged"] else EXIT_HORIZON


def run_config(cfg, out_dir: Path, scenario=None) -> int:
    from navsim.sim import metrics, run

    if scenario is None:
        scenario = cfgmod.build_scenario(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        log = run(scenario)
    m = metrics(log)
    code = exit_code_for(m)
    name = cfg.output.name
    csv_path = out_dir / f"{name}.csv"
    log.to_csv(csv_path, cfg.output.decimate)
    summary = {"config": cfgmod.to_dict(cfg), "metrics": m, "meta": log.meta, "geometry": geometry(scenario),
               "exit_code": code, "csv": csv_path.name, "warnings": [str(w.message) for w in caught]}
    if scenario.variant == "fleet":
        summary["starts"] = [a.start.tolist() for a in scenario.fleet.agents]
    else:
        summary["starts"] = [scenario.x0.tolist()]
    (out_dir / f"{name}.summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    if cfg.output.svg:
        plot_log(csv_path, "trajectory")
    return code


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
        scenario = cfgmod.build_scenario(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    d = _out_dir(args, cfg)
    try:
        code = run_config(cfg, d, scenario)
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    summary = json.loads((d / f"{cfg.output.name}.summary.json").read_text())
    m = summary["metrics"]
    print(f"{cfg.output.name}: exit {code}; min clearance {m['min_clearance']}; events "
          f"{[e[1] for e in m['events']]}")
    return code


# --- critical points ------------------------------------------------------

def cmd_critical_points(args) -> int:
    from navsim.navfield import find_critical_points
    from navsim.sim import prepare_field

    try:
        cfg = _load(args)
        scenario = cfgmod.build_scenario(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if scenario.variant == "fleet":
        print("critical-points needs a single-robot config", file=sys.stderr)
        return EXIT_CONFIG
    try:
        field, _, dss = prepare_field(scenario)
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rep = find_critical_points(field)
    tau = field.spec.tau
    print(f"tau = {tau:.9g}  d** = {dss:.9g}  tau < d**: {'yes' if tau < dss else 'no'}")
    print(f"seeds = {rep.seeds}  failed = {rep.failed_seeds}")
    for p in rep.points:
        eig = ", ".join(f"{e:.6g}" for e in p.hessian_eigenvalues)
        line = f"{p.kind:10s} x* = {np.array2string(p.x_star, precision=9)}  eig = [{eig}]"
        if p.f_ell is not None:
            line += f"  obstacle = {p.obstacle}  d* = {p.d_star:.6g}  f_ell = {p.f_ell:.6g}"
        print(line)
    d = _out_dir(args, cfg)
    payload = {"tau": tau, "d_star_star": dss, "seeds": rep.seeds, "failed_seeds": rep.failed_seeds,
               "points": [p.to_dict() for p in rep.points]}
    (d / f"{cfg.output.name}.critical.json").write_text(json.dumps(_jsonable(payload), indent=2))
    return EXIT_OK


# --- plot -----------------------------------------------------------------

PLOT_KINDS = ("trajectory", "signals", "beta_min")


def plot_log(log_path, kind: str, output=None) -> Path:
    from navsim.sim import TrajectoryLog
    from navsim.svg import signals_svg, trajectory_svg

    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    log_path = Path(log_path)
    summary_path = log_path.with_name(log_path.name.removesuffix(".csv") + ".summary.json")
    summary = json.loads(summary_path.read_text())
    log = TrajectoryLog.from_csv(log_path)
    meta = summary["meta"]
    n = int(meta["n"])
    fleet = meta.get("variant") == "fleet"
    if fleet:
        goals = meta["goals"]
        paths = [log.block(f"a{i}_x", n)[:, :2] for i in range(meta["N"])]
    else:
        goals = [meta["goal"]]
        paths = [log.block("x", n)[:, :2]]
    if kind == "trajectory":
        svg = trajectory_svg(summary["geometry"], paths, [s[:2] for s in summary["starts"]],
                             [g[:2] for g in goals])
    elif kind == "signals":
        t = log.t
        if fleet:
            series = {"|x_i - x_di|": [np.linalg.norm(log.block(f"a{i}_x", n) - np.asarray(g), axis=1)
                                       for i, g in enumerate(goals)],
                      "m_hat": [log.column(f"a{i}_m_hat") for i in range(meta["N"])],
                      "alpha_hat": [log.column(f"a{i}_alpha_hat") for i in range(meta["N"])]}
        else:
            series = {"|x - x_d|": np.linalg.norm(log.block("x", n) - np.asarray(goals[0]), axis=1),
                      "|v|": np.linalg.norm(log.block("v", n), axis=1),
                      "m_hat": log.column("m_hat"), "alpha_hat": log.column("alpha_hat"),
                      "V": log.column("V"), "min clearance": log.column("min_clearance")}
        svg = signals_svg(t, series, title=log_path.stem)
    else:
        if not fleet:
            raise ValueError("beta_min plot needs a fleet log")
        svg = signals_svg(log.t, {"beta_min": log.column("beta_min")}, title=log_path.stem)
    out = Path(output) if output else log_path.with_name(log_path.name.removesuffix(".csv") + f".{kind}.svg")
    out.write_text(svg)
    return out


def cmd_plot(args) -> int:
    try:
        out = plot_log(args.log, args.kind, args.output)
    except (OSError, KeyError, ValueError, StopIteration, json.JSONDecodeError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


# --- batch ----------------------------------------------------------------

def _batch_one(item):
    path, overrides, out_root = item
    try:
        cfg = cfgmod.load_config(path, overrides)
        scenario = cfgmod.build_scenario(cfg)
    except (ConfigError, OSError) as exc:
        return str(path), EXIT_CONFIG, str(exc)
    except ValueError as exc:
        return str(path), EXIT_INVALID, str(exc)
    d = Path(out_root) / Path(path).stem
    d.mkdir(parents=True, exist_ok=True)
    try:
        return str(path), run_config(cfg, d, scenario), ""
    except ValueError as exc:
        return str(path), EXIT_INVALID, str(exc)


def cmd_batch(args) -> int:
    paths = []
    for p in args.configs:
        p = Path(p)
        paths += sorted(p.glob("*.json")) if p.is_dir() else [p]
    root = _out_dir(args)
    items = [(str(p), _overrides(args), str(root)) for p in paths]
    with ProcessPoolExecutor(max_workers=args.workers) as ex:
        results = list(ex.map(_batch_one, items))
    worst = EXIT_OK
    for path, code, msg in results:
        print(f"{path}: exit {code}{'  ' + msg if msg else ''}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override sim.seed (also seeds random worlds)")
    common.add_argument("--step", type=float, help="override sim.step (s)")
    common.add_argument("--horizon", type=float, help="override sim.horizon (s)")
    common.add_argument("--out-dir", help="output directory (default: $NAVSIM_OUT_DIR or ./navsim_out)")
    common.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="set a config entry, e.g. controller.k_phi=2 (repeatable)")
    p = argparse.ArgumentParser(prog="navsim", description="Adaptive potential-field navigation simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, hlp in (("validate", cmd_validate, "check a scenario config"),
                          ("run", cmd_run, "simulate a scenario"),
                          ("critical-points", cmd_critical_points, "list critical points of the field")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--config", required=True)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("plot", help="render an SVG from a run log")
    sp.add_argument("--log", required=True, help="trajectory CSV written by `run`")
    sp.add_argument("--kind", default="trajectory", help=f"one of {', '.join(PLOT_KINDS)}")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_plot)
    sp = sub.add_parser("batch", parents=[common], help="run many configs in parallel")
    sp.add_argument("configs", nargs="+", help="config files or directories of *.json")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
