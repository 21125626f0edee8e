"""Shared plumbing for the experiment scripts."""
import argparse
import dataclasses
import json
from pathlib import Path

import numpy as np

from navsim import config as cfgmod
from navsim.cli import geometry, plot_log
from navsim.sim import metrics, run

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out-dir", default="results", help="where CSV, SVG and summaries go")
    p.add_argument("--step", type=float, help="integration step (s)")
    p.add_argument("--horizon", type=float, help="simulated time (s)")
    p.add_argument("--decimate", type=int, default=10, help="keep every k-th CSV row")
    return p


def load(name, args, **changes):
    over = []
    if args.step is not None:
        over.append(f"sim.step={args.step}")
    if args.horizon is not None:
        over.append(f"sim.horizon={args.horizon}")
    sc = cfgmod.build_scenario(cfgmod.load_config(SCENARIOS / f"{name}.json", over))
    return dataclasses.replace(sc, **changes)


def simulate(sc, tag, args):
    """Run ``sc``, write ``<tag>.csv``/summary/SVGs and return the metrics."""
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = run(sc)
    m = metrics(log)
    csv = out / f"{tag}.csv"
    log.to_csv(csv, args.decimate)
    starts = ([a.start.tolist() for a in sc.fleet.agents] if sc.variant == "fleet" else [sc.x0.tolist()])
    summary = {"metrics": m, "meta": log.meta, "geometry": geometry(sc), "starts": starts}
    (out / f"{tag}.summary.json").write_text(json.dumps(summary, indent=2, default=_plain))
    plot_log(csv, "trajectory")
    plot_log(csv, "signals")
    return log, m


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))
