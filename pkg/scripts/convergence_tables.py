"""Refinement studies on the convex square and the L-shaped domain.

Writes one CSV (table layout) and one JSON report per case into --out-dir and
echoes the tables.  Example:

    python scripts/convergence_tables.py --cases distorted voronoi --out-dir results
"""

import argparse
import time
from pathlib import Path

from oseen_vem.study import convergence_table, format_table, run_convergence, write_convergence_csv, write_json
from oseen_vem.vem_local import PhysicalParams

# name -> (family, ns, domain, params)
CASES = {
    "stokes": ("distorted", [8, 16, 32, 64], "square", PhysicalParams(beta=(0.0, 0.0))),
    "distorted": ("distorted", [16, 32, 64], "square", PhysicalParams()),
    "voronoi": ("voronoi", [16, 32, 64], "square", PhysicalParams()),
    "trapezoidal": ("trapezoidal", [16, 32, 64], "square", PhysicalParams()),
    "lshape": ("lshape", [38, 54, 70, 90], "lshape", PhysicalParams()),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", nargs="+", default=list(CASES), choices=list(CASES))
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for name in args.cases:
        family, ns, domain, params = CASES[name]
        t0 = time.perf_counter()
        st = run_convergence(family, ns, params, k=args.k, domain=domain, seed=args.seed, threads=args.threads)
        dt = time.perf_counter() - t0
        print(f"\n{name}: {family} on {domain}, ns={ns}, {dt:.1f}s")
        print(format_table(*convergence_table(st)))
        print("min eigenvector overlap between levels:", f"{st.overlaps.min():.3f}")
        write_convergence_csv(st, out / f"convergence_{name}.csv")
        write_json(st, out / f"convergence_{name}.json", meta={"case": name, "seed": args.seed, "seconds": dt})


if __name__ == "__main__":
    main()
