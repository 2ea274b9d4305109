"""Random exact expansions checked against every bound; prints per-discriminant counts."""

import argparse

from iqcf.cli import verify_runs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--discs", default="-15,-20,-23,-24,-47")
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--steps", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    discs = [int(d) for d in args.discs.split(",")]
    rep = verify_runs(discs, args.runs, args.steps, args.seed)
    for d, s in rep["per_disc"].items():
        print(f"disc {d:>4}: {s['runs']} runs, {s['checks']} checks, {s['violations']} violations")
    for v in rep["violations"][:20]:
        print("violation:", v)
    print("passed" if rep["passed"] else "FAILED")


if __name__ == "__main__":
    main()
