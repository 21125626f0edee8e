"""Collinear start, obstacle and goal: locate the saddle behind the obstacle,
hold a run exactly on it, and release runs just off the line.

    python3 scripts/saddle.py --out-dir results/saddle
"""
import numpy as np

from _common import load, parser, simulate
from navsim.navfield import find_critical_points
from navsim.sim import prepare_field

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    base = load("saddle", args)
    field, _, dss = prepare_field(base)
    print(f"tau = {field.spec.tau:.6g}  d** = {dss:.6g}")
    points = find_critical_points(field).points
    for p in points:
        print(f"{p.kind:8s} x* = {p.x_star}  eig = {p.hessian_eigenvalues}")
    xs = next(p for p in points if p.kind == "saddle").x_star
    on_line = load("saddle", args, x0=np.array([xs[0], 0.0]), T=min(base.T, 50.0))
    log, _ = simulate(on_line, "saddle_hold", args)
    drift = np.max(np.linalg.norm(log.block("x", 2) - log.block("x", 2)[0], axis=1))
    print(f"held on the saddle: max drift {drift:.3g}")
    for tag, dy in (("above", 1e-3), ("below", -1e-3)):
        _, m = simulate(load("saddle", args, x0=np.array([-5.0, dy])), f"saddle_{tag}", args)
        print(f"start (-5, {dy:+g}): |x-x_d| = {m['terminal_error']:.4g}  converged at {m['convergence_time']}")
