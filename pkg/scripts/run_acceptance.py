"""Run the statistical acceptance battery and print one line per criterion.

    python scripts/run_acceptance.py               # every criterion
    python scripts/run_acceptance.py one_arm russo # a subset, by name
"""

import argparse
import sys

from isingperc.acceptance import CRITERIA, Context, run_criterion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="criteria to run (default: all)")
    args = ap.parse_args()
    known = dict(CRITERIA)
    unknown = [n for n in args.names if n not in known]
    if unknown:
        ap.error(f"unknown criteria {unknown}; choose from {list(known)}")
    ctx = Context()
    failed = 0
    for name in args.names or list(known):
        out = run_criterion(known[name], ctx)
        print(out.line(), flush=True)
        failed += not out.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
