"""Stabilization sweeps on the mixed problem over (0,1)^2.

Part one sweeps alphaE at fixed n on both midpoint families; part two fixes
alphaE and refines.  Example:

    python scripts/spurious_tables.py --n 8 --refine-alpha 0.0625 --ns 8 16 32 --out-dir results
"""

import argparse
from pathlib import Path

from oseen_vem.study import (
    MIXED_NEUMANN_SIDES,
    SpuriousCriteria,
    format_table,
    run_spurious_sweep,
    sweep_table,
    write_json,
    write_sweep_csv,
)

ALPHAS = [1 / 32, 1 / 16, 1 / 4, 1, 4, 16, 32]
FAMILIES = ["midpoint-quads", "midpoint-triangles"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--neumann", nargs="*", default=list(MIXED_NEUMANN_SIDES),
                    help="Neumann sides of (0,1)^2; the rest are Dirichlet")
    ap.add_argument("--refine-alpha", type=float, default=1 / 16)
    ap.add_argument("--ns", nargs="+", type=int, default=[8, 16, 32, 64])
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for family in FAMILIES:
        sw = run_spurious_sweep(family, args.n, ALPHAS, k=args.k, criteria=SpuriousCriteria(tau=args.tau),
                                neumann_sides=args.neumann)
        print(f"\n{family}, n={args.n}, Neumann sides {args.neumann}; [x] = flagged")
        print(format_table(*sweep_table(sw)))
        print("flags per alphaE:", sw.counts)
        write_sweep_csv(sw, out / f"spurious_{family}_n{args.n}.csv")
        write_json(sw, out / f"spurious_{family}_n{args.n}.json")

    # refinement at fixed alphaE; the 2n refinement flag would need n=128 meshes, so rho only
    rho_only = SpuriousCriteria(tau=args.tau, refinement=False)
    for family in FAMILIES:
        print(f"\n{family}, alphaE={args.refine_alpha:g}, refinement")
        for n in args.ns:
            sw = run_spurious_sweep(family, n, [args.refine_alpha], k=args.k, criteria=rho_only,
                                    neumann_sides=args.neumann)
            p = sw.points[0]
            vals = " ".join(f"[{v.real:.4f}]" if f else f"{v.real:.4f}" for v, f in zip(p.values, p.flags))
            print(f"  n={n:3d} flags={p.n_flags:2d}  {vals}")
            write_json(sw, out / f"spurious_{family}_alpha{args.refine_alpha:g}_n{n}.json")


if __name__ == "__main__":
    main()
