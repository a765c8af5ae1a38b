"""Command line interface: sdeplots --csv FILE --kind KIND --out IMG [--ref-slope S].

Exit codes: 0 figure written, 2 bad input (unknown kind, schema mismatch,
empty data, missing file), 3 unexpected rendering failure.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, PlotError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdeplots",
        description="render publication-style figures from sdelab results.csv",
    )
    parser.add_argument("--csv", required=True, help="canonical results.csv")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--ref-slope",
        type=float,
        default=None,
        help="draw a reference power law with this log-log slope",
    )
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            csv_path=args.csv,
            kind=args.kind,
            out_path=args.out,
            ref_slope=args.ref_slope,
        )
        out = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"render failed: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
