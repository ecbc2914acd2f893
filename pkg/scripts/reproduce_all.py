"""Run every CLI experiment with default settings into one output tree.

Usage: python3 scripts/reproduce_all.py [--out results] [--quick]

Each experiment gets its own subdirectory holding the CSV and JSON-lines
reports.  ``--quick`` shrinks the sweeps so the whole thing finishes in
well under a minute.
"""

import argparse
import sys
import time
from pathlib import Path

from quatern.cli import main as cli


def run(name, argv):
    t0 = time.perf_counter()
    code = cli(argv)
    print(f"[{name}] exit={code} in {time.perf_counter() - t0:.1f}s\n")
    return code


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)

    codes = [run("selftest", ["selftest", "--out", str(out / "selftest")])]
    sizes = "20,40" if args.quick else "20,50,100"
    codes.append(run("bench", ["bench", "--sizes", sizes, "--methods", "qns,qsai,qrapid,qhpi19,qsvd",
                               "--out", str(out / "bench")]))
    if args.quick:
        here = Path(__file__).resolve().parents[1] / "data" / "synthetic10.mtx"
        codes.append(run("precond", ["precond", "--input", str(here), "--m", "3",
                                     "--out", str(out / "precond")]))
    else:
        codes.append(run("precond", ["precond", "--m", "3,6", "--out", str(out / "precond")]))
    for backend in ("qsvd", "qsai", "qrapid", "qhpi19"):
        iters = "10" if args.quick else "40"
        codes.append(run(f"cur-{backend}", ["cur", "--rank", "10", "--iters", iters, "--redraw",
                                             "--method", backend, "--out", str(out / f"cur_{backend}")]))
    codes.append(run("lorenz", ["lorenz", "--dt", "0.02,0.05", "--dump-signal", "--out", str(out / "lorenz")]))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
