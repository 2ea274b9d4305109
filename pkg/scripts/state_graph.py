"""State graph of z = 3/4 + 5/4 i over disc -11 with B = {1}, written as Graphviz DOT."""

import argparse

from iqcf.analysis import OPEN, detect_periodicity, explore_states
from iqcf.numerics import parse_complex
from iqcf.ring_ideals import Ring


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dot", default="state_graph.dot")
    args = ap.parse_args()
    ring = Ring(-11)
    g = explore_states(parse_complex("3/4+5/4i", 11), ring, OPEN, B=[(1, 0)])
    print(f"{len(g.vertices)} states, {len(g.edges)} edges, closed={g.closed}")
    for c, t in g.successors(g.root):
        print(f"root -> v{t} via a={ring.format_elem(c.a)}, b={ring.format_elem(c.b)}")
    pre, period, coeffs = detect_periodicity(g)
    fmt = " ".join(f"{ring.format_elem(c.a)}/{ring.format_elem(c.b)}" for c in coeffs)
    print(f"first cycle: preperiod {pre}, period {period}: {fmt}")
    with open(args.dot, "w") as fh:
        fh.write(g.to_dot() + "\n")
    print(f"wrote {args.dot}")


if __name__ == "__main__":
    main()
