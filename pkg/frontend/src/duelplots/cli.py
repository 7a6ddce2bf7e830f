"""Command-line entry point: duelplots render ..."""

from __future__ import annotations

import argparse
import sys

from .figure import FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duelplots")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render regret curves from an aggregate CSV")
    p.add_argument("--csv", required=True, help="aggregate CSV path")
    p.add_argument("--axis", choices=["T", "K"], default="T")
    p.add_argument("--policies", help="comma-separated policy names to include")
    p.add_argument("--kind", help="keep only this regret kind")
    p.add_argument("--benchmark", help="keep only this benchmark")
    p.add_argument("--ref", type=float, help="reference growth exponent in (0, 1]")
    p.add_argument("--loglog", action="store_true")
    p.add_argument("-o", "--output", required=True, help="output image path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec_kwargs = dict(
        csv_path=args.csv,
        output_path=args.output,
        axis=args.axis,
        policies=args.policies.split(",") if args.policies else None,
        regret_kind=args.kind,
        benchmark=args.benchmark,
        reference_exponent=args.ref,
        loglog=args.loglog,
    )
    try:
        image, sidecar = render(FigureSpec(**spec_kwargs))
    except (RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(image)
    print(sidecar)
    return 0


if __name__ == "__main__":
    sys.exit(main())
