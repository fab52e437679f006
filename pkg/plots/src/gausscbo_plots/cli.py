"""Command-line interface: `plot kl|contour|sweep --in ... --out ...`.

Exit codes: 0 success, 1 schema mismatch or bad input, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot_contour_ellipse, plot_kl, plot_sensitivity_panel
from .io import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from gausscbo benchmark output files")
    sub = parser.add_subparsers(dest="command", required=True)

    p_kl = sub.add_parser("kl", help="median KL curves with IQR bands")
    p_kl.add_argument("--in", dest="inputs", action="append", required=True,
                      metavar="SUMMARY_JSON")
    p_kl.add_argument("--out", required=True, metavar="IMAGE")
    p_kl.add_argument("--linear", action="store_true",
                      help="linear y-axis (default: log scale)")

    p_ct = sub.add_parser(
        "contour", help="target contours with final-Gaussian 1-sigma ellipses")
    p_ct.add_argument("--in", dest="inputs", action="append", required=True,
                      metavar="PATH", help="give twice: target file, finals JSON")
    p_ct.add_argument("--out", required=True, metavar="IMAGE")

    p_sw = sub.add_parser("sweep", help="sensitivity panel from a sweep summary")
    p_sw.add_argument("--in", dest="inputs", action="append", required=True,
                      metavar="SWEEP_JSON")
    p_sw.add_argument("--out", required=True, metavar="IMAGE")
    p_sw.add_argument("--linear", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    log_scale = not getattr(args, "linear", False)
    try:
        if args.command == "kl":
            spec = FigureSpec(tuple(args.inputs), "kl_curve", args.out, log_scale)
            path = plot_kl(spec)
        elif args.command == "contour":
            spec = FigureSpec(tuple(args.inputs), "contour_ellipse", args.out)
            path = plot_contour_ellipse(spec)
        else:
            spec = FigureSpec(tuple(args.inputs), "sensitivity_panel", args.out,
                              log_scale)
            path = plot_sensitivity_panel(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
