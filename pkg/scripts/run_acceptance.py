"""Run the acceptance checks and print one PASS/FAIL/SKIP line per criterion.

Usage: python3 scripts/run_acceptance.py [--fast]

``--fast`` leaves out the preconditioning comparison, which takes a few
minutes on one core.
"""

import argparse
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fast", action="store_true", help="skip the Krylov preconditioning criterion")
    args = ap.parse_args()
    argv = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if args.fast:
        argv += ["-k", "not criterion_10"]
    return pytest.main(argv)


if __name__ == "__main__":
    sys.exit(main())
