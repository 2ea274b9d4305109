"""Steps needed to reach |q z - p| <= 1/delta, against the ceil(log delta / log(1/eps)) bound."""

import argparse
import math

from iqcf.cli import run_bench, slope_fit
from iqcf.covering import find_minimal_admissible_set
from iqcf.numerics import parse_complex
from iqcf.ring_ideals import Ring


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--disc", type=int, default=-23)
    ap.add_argument("--max-log2", type=int, default=20)
    args = ap.parse_args()
    ring = Ring(args.disc)
    params = find_minimal_admissible_set(ring)
    z = parse_complex(f"1/10*sqrt({ring.d})+1/3i", ring.d)
    rows = run_bench(ring, z, params, [2.0**k for k in range(1, args.max_log2 + 1)])
    print(f"{'delta':>9}  {'steps':>5}  {'bound':>5}")
    for r in rows:
        print(f"{r['delta']:>9.0f}  {r['steps']:>5}  {r['bound']:>5}")
    eps = math.sqrt(float(params.disc_bound()))
    print(f"fitted slope {slope_fit(rows):.3f}; 1/log(1/eps) = {1 / math.log(1 / eps):.3f}")


if __name__ == "__main__":
    main()
