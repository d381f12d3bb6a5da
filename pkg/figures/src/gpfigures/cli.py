"""Command line: figures <kind> --in <dir> --case n=1000,eps=0.1 --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureJob, MissingCaseError, parse_case, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from gpmean Monte Carlo output files",
    )
    parser.add_argument("kind", choices=KINDS, help="figure type")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="directory with the emitted files")
    parser.add_argument("--case", required=True, help="case selector, e.g. n=1000,eps=0.1")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--component", type=int, default=1,
                        help="1-based parameter component (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        n, eps = parse_case(args.case)
        job = FigureJob(
            input_dir=args.input_dir, kind=args.kind, out_path=args.out,
            n=n, eps=eps, component=args.component,
        )
        meta = render(job)
    except (MissingCaseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {meta['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
