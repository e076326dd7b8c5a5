"""bandit-plots render --csv PATH --kind KIND --out PATH [--log-y] [--title TEXT]"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit-plots",
                                     description="Render deceptive-bandits experiment CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one CSV into one image")
    p.add_argument("--csv", required=True, help="input CSV from the experiment harness")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--out", required=True, help="output image path (png)")
    p.add_argument("--log-y", action="store_true", help="log-scale the y axis")
    p.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(input_csv=args.csv, figure_kind=args.kind,
                          output_image=args.out, log_y=args.log_y, title=args.title)
        render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
