#!/usr/bin/env python3
"""Randomized residual suite over every family; prints one line per family.

Usage: python3 scripts/run_family_suite.py [--draws 5] [--points 200] [--n-max 5] [--fd-points 0]
"""

import argparse
import sys
import time

import numpy as np

from jmkd import FAMILY_IDS, build, random_spec, verify_field


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=5)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--n-max", type=int, default=5)
    ap.add_argument("--fd-points", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ok = True
    start = time.perf_counter()
    for fam in FAMILY_IDS:
        t0 = time.perf_counter()
        worst, exact, fd, passed = 0.0, set(), 0.0, True
        for d in range(args.draws):
            rng = np.random.default_rng([args.seed, d])
            spec = random_spec(fam, rng, n_max=args.n_max, polynomial=(d % 2 == 1))
            rep = verify_field(build(spec), count=args.points, seed=args.seed + d, fd_points=args.fd_points)
            worst = max(worst, *rep.max_residual.values())
            exact.add(rep.exact)
            fd = max(fd, rep.fd_max_error or 0.0)
            passed &= rep.passed
        ok &= passed
        fd_txt = f"  fd {fd:.1e}" if args.fd_points else ""
        print(f"{fam:8s} {'PASS' if passed else 'FAIL'}  max residual {worst:.2e}{fd_txt}  "
              f"exact {'/'.join(sorted(exact))}  {time.perf_counter() - t0:.2f}s")
    print(f"total {time.perf_counter() - start:.2f}s")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
