"""The planar scenario under a sinusoidal disturbance with leakage in the
adaptation laws. Reports the terminal error and the peak of |xi| in the
first 80% and the last 20% of the run.

    python3 scripts/paper_2d_disturbed.py --out-dir results/disturbed
"""
import numpy as np

from _common import load, parser, simulate

STARTS = [(-5.0, -5.0), (-7.0, 3.5), (3.5, -7.0)]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    print(f"{'start':>14} {'|x-x_d|':>10} {'max xi':>10} {'max xi tail':>12} {'collision':>10}")
    for k, s in enumerate(STARTS):
        log, m = simulate(load("paper_2d_disturbed", args, x0=np.array(s)), f"disturbed_{k}", args)
        xi = log.column("xi")
        cut = int(0.8 * len(xi))
        print(f"{str(s):>14} {m['terminal_error']:10.4g} {xi[:cut].max():10.4g} {xi[cut:].max():12.4g} "
              f"{str(m['collision']):>10}")
