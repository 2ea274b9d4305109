"""Replay the ten-step reference expansion over disc -23 and print each convergent."""

from iqcf.cli import run_table1


def main():
    rep = run_table1()
    print(f"{'n':>2}  {'a':>6}  {'b':>2}  {'p':>10}  {'q':>10}  {'|q|^2':>6}  {'|qz-p|':>9}  ref      ok")
    for r in rep["rows"]:
        ok = r["convergent_match"] and r["quality_match"]
        print(
            f"{r['n']:>2}  {r['a']:>6}  {r['b']:>2}  {r['p']:>10}  {r['q']:>10}  {r['q_norm']:>6}"
            f"  {r['quality']:>9.5f}  {r['quality_reference']:<7}  {'yes' if ok else 'NO'}"
        )
    for e in rep["errors"]:
        print("error:", e)
    print("passed" if rep["passed"] else "FAILED")


if __name__ == "__main__":
    main()
