"""Two star-shaped obstacles mapped onto discs: map checks, then one run.

    python3 scripts/star_world.py --out-dir results/star
"""
from _common import load, parser, simulate
from navsim.starmap import validate_map

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    sc = load("star_world", args)
    rep = validate_map(sc.smap)
    print(f"map ok: {rep.ok}  min |det J_H| = {rep.min_abs_det:.4g}  boundary residual = {rep.boundary_residual:.3g}")
    _, m = simulate(sc, "star_world", args)
    print(f"converged at t = {m['convergence_time']}  |x-x_d| = {m['terminal_error']:.4g}  "
          f"collision = {m['collision']}")
