"""Command line entry point: plot <kind> --in <csv...> --out <img>."""

import argparse
import sys

from .render import KINDS, STYLES, PlotJob, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from simulator CSV output.",
    )
    parser.add_argument("kind", choices=sorted(KINDS), help="figure kind")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--style", choices=sorted(STYLES), default="default",
                        help="style preset (default: default)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = PlotJob(kind=args.kind, inputs=tuple(args.inputs), out=args.out,
                  style=args.style)
    try:
        render(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
