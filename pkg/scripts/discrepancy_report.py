#!/usr/bin/env python3
"""Write the recurrence-versus-closed-form report and print its mismatches.

Usage: python3 scripts/discrepancy_report.py [--out report.json] [--n-max 5]
"""

import argparse
import json
from collections import Counter

from jmkd.coeffs import discrepancy_report, standard_tables


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="discrepancies.json")
    ap.add_argument("--n-max", type=int, default=5)
    args = ap.parse_args()
    text = discrepancy_report(standard_tables(args.n_max))
    with open(args.out, "w") as fh:
        fh.write(text)
    records = json.loads(text)["records"]
    bad = Counter((r["family"], r["quantity"], r["form"]) for r in records if not r["match"])
    total = Counter((r["family"], r["quantity"], r["form"]) for r in records)
    for key in sorted(total):
        fam, qty, form = key
        print(f"{fam:8s} {qty:9s} {form:18s} {total[key] - bad[key]:3d}/{total[key]:3d} match")
    print(f"report written to {args.out}")


if __name__ == "__main__":
    main()
