"""Command-line entry point: render histogram panels from harness CSVs."""

import argparse
import sys

from .errors import PlotsError
from .panels import render_panels, spec_from_csvs


def _bins(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render per-statistic histogram panel figures from a "
                    "harness summary/raw CSV pair.")
    parser.add_argument("--summary", required=True, help="summary CSV path")
    parser.add_argument("--raw", required=True, help="raw replicate CSV path")
    parser.add_argument("--out", required=True, help="output directory for PNGs")
    parser.add_argument("--bins", default="fd", type=_bins,
                        help="histogram bin rule or count (default: fd)")
    parser.add_argument("--dpi", default=150, type=int, help="figure DPI")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the written-files notice")
    args = parser.parse_args(argv)

    try:
        spec = spec_from_csvs(args.summary, args.raw, args.out,
                              bins=args.bins, dpi=args.dpi)
        written = render_panels(spec)
    except PlotsError as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"wrote {len(written)} figures to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
