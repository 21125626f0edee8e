"""Planar sphere world with 60 obstacles: three starts, one goal.

    python3 scripts/paper_2d.py --out-dir results/paper_2d
"""
import numpy as np

from _common import load, parser, simulate

STARTS = [(-5.0, -5.0), (-7.0, 3.5), (3.5, -7.0)]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    print(f"{'start':>14} {'|x-x_d|':>10} {'|v|':>10} {'m_hat':>8} {'clearance':>10} {'V up':>6}")
    for k, s in enumerate(STARTS):
        _, m = simulate(load("paper_2d", args, x0=np.array(s)), f"paper_2d_{k}", args)
        print(f"{str(s):>14} {m['terminal_error']:10.4g} {m['terminal_speed']:10.4g} "
              f"{m['terminal_m_hat']:8.4f} {m['min_clearance']:10.4g} {m['v_violations']:6d}")
