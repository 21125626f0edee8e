"""Six agents among fifteen obstacles under leader rotation.

    python3 scripts/fleet.py --out-dir results/fleet
"""
from pathlib import Path

from _common import load, parser, simulate
from navsim.cli import plot_log

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    sc = load("fleet", args)
    print(f"priority {list(sc.fleet.priority)}  tau = {sc.fleet.spec.tau:.4g}")
    _, m = simulate(sc, "fleet", args)
    plot_log(Path(args.out_dir) / "fleet.csv", "beta_min")
    for i in m["promotion_order"]:
        print(f"agent {i}: frozen at t = {m['convergence_times'][str(i)]:.2f}  "
              f"|x-x_d| = {m['terminal_errors'][i]:.4g}")
    print(f"promotions {m['promotions']}  beta_min {m['beta_min']:.4g}  collision {m['collision']}")
