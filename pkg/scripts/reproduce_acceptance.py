#!/usr/bin/env python3
"""Run the acceptance checks and write a JSON report alongside a PASS/FAIL table.

    python scripts/reproduce_acceptance.py --out acceptance.json
    python scripts/reproduce_acceptance.py --only 3 7
"""
import argparse
import sys
from pathlib import Path

from convex_billiards.serialize import dumps
from convex_billiards.verify import CHECKS, run_check


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", type=int, nargs="+", choices=sorted(CHECKS), help="subset of check numbers")
    ap.add_argument("--out", type=Path, help="JSON report path")
    args = ap.parse_args(argv)
    results = [run_check(n) for n in (args.only or sorted(CHECKS))]
    for r in results:
        print(f"{r.number:>3}  {r.name:<28} {'PASS' if r.passed else 'FAIL':<5} {r.seconds:7.2f} s")
    if args.out:
        args.out.write_text(dumps([r.__dict__ for r in results]))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
