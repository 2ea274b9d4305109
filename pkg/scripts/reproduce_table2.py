"""Minimal admissible sets for every discriminant with |disc| < 50, against the reference values."""

import argparse
import json
import time

from iqcf.cli import load_reference, run_table2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-abs", type=int, default=49)
    ap.add_argument("--json", help="write the full report here")
    args = ap.parse_args()
    discs = [r["disc"] for r in load_reference("table2.json")["rows"] if abs(r["disc"]) <= args.max_abs]
    t0 = time.perf_counter()
    rep = run_table2(discs)
    print(f"{'disc':>5}  {'mu^2':>4}  {'eps^2':>14}  {'reference':>14}  {'error':>10}  status  B")
    for r in rep["rows"]:
        ref = r.get("reference", {})
        print(
            f"{r['disc']:>5}  {r['mu_sq']:>4}  {r['eps_sq']:>14.10f}  {ref.get('eps_sq_value', float('nan')):>14.10f}"
            f"  {r.get('eps_sq_error', float('nan')):>10.2e}  {r['status']:<8}{{{', '.join(r['B'])}}}"
        )
    print(f"{rep['matched']}/{rep['compared']} rows match; {time.perf_counter() - t0:.1f}s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rep, fh, indent=2)


if __name__ == "__main__":
    main()
