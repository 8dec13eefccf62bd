"""plots <figure_kind> --in <csv> [--traj <csv>] --out <png> [slice selectors]"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, PlotDataError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render airtune CSV outputs as comparison figures"
    )
    parser.add_argument("figure_kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_csv", required=True, help="input CSV")
    parser.add_argument("--traj", dest="trajectory_csv", default=None,
                        help="trajectory CSV overlaid on throughput_vs_frm")
    parser.add_argument("--out", dest="out_path", required=True, help="output image path")
    parser.add_argument("--model", default=None, help="traffic model slice selector")
    parser.add_argument("--snr", type=float, default=None, help="SNR slice selector")
    parser.add_argument("--stas", type=int, default=None, help="station count slice selector")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        figure_kind=args.figure_kind,
        out_path=args.out_path,
        trajectory_csv=args.trajectory_csv,
        traffic_model=args.model,
        snr_db=args.snr,
        num_sta=args.stas,
    )
    try:
        path = render(spec)
    except (PlotDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
