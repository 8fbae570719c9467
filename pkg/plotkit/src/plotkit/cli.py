"""plotkit command line: render one figure from simulator CSV output.

    plotkit <kind> --in <csv> [--in2 <csv>] --out <png> [--bins K] [--log]
            [--step S] [--frames DIR]

Exit codes: 0 success, 1 usage/schema error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, render
from .schemas import SchemaError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    p = _Parser(prog="plotkit", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--in", dest="in1", required=True, help="input CSV")
    p.add_argument("--in2", help="second input CSV (mean track or rule overlay)")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--bins", type=int, help="density/triangle bin count")
    p.add_argument("--log", action="store_true", default=None,
                   help="log-scaled counts (default)")
    p.add_argument("--linear", action="store_true", help="linear count scale")
    p.add_argument("--step", type=int, help="simplex: single recorded step")
    p.add_argument("--frames", help="simplex: directory for per-step frames")
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    inputs = [args.in1] + ([args.in2] if args.in2 else [])
    try:
        job = PlotJob(kind=args.kind, inputs=inputs, out=args.out,
                      bins=args.bins, log=not args.linear,
                      step=args.step, frames=args.frames)
        result = render(job)
    except (SchemaError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {result.out}")
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
