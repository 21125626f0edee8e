"""Spatial sphere world (50 obstacles, gravity along -z): mass estimate
convergence from three starts.

    python3 scripts/paper_3d.py --out-dir results/paper_3d
"""
import numpy as np

from _common import load, parser, simulate

STARTS = [(-4.0, -4.0, -4.0), (-6.0, 3.0, -2.0), (3.0, -6.0, 2.0)]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    print(f"{'start':>20} {'|x-x_d|':>10} {'m_hat(T)':>10} {'alpha_hat(T)':>13}")
    for k, s in enumerate(STARTS):
        log, m = simulate(load("paper_3d", args, x0=np.array(s)), f"paper_3d_{k}", args)
        print(f"{str(s):>20} {m['terminal_error']:10.4g} {m['terminal_m_hat']:10.5f} "
              f"{log.column('alpha_hat')[-1]:13.5f}")
