"""Run benchmark suites and write their CSV tables.

    python3 scripts/run_benchmarks.py --out results/            # every suite
    python3 scripts/run_benchmarks.py hard-er cascade --seeds 5 --out results/
"""

import argparse
import sys
import time
from pathlib import Path

from sword.bench import SUITES, run_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("suites", nargs="*", help=f"subset of: {', '.join(SUITES)}")
    ap.add_argument("--out", default="results")
    ap.add_argument("--seeds", type=int, default=None, help="seeds per suite (suite default if omitted)")
    ap.add_argument("--seed", type=int, default=0, help="first seed")
    args = ap.parse_args(argv)

    names = args.suites or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        ap.error(f"unknown suite(s) {unknown}; available: {', '.join(SUITES)}")
    kw = {"seed": args.seed}
    if args.seeds is not None:
        kw["n_seeds"] = args.seeds
    for name in names:
        out = Path(args.out) / name
        t0 = time.perf_counter()
        tables = run_suite(name, out, **kw)
        print(f"{name}: {', '.join(tables)} -> {out} ({time.perf_counter() - t0:.1f}s)", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
