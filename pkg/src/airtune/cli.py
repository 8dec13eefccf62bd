"""Command-line entry point.

Subcommands: simulate, sweep, optimize, compare, gradcheck, report.
The output directory resolves as --out, then $AIRTUNE_OUT, then ./airtune_out.
Exit code 0 on success; validation failures print one line and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .config import ConfigError, expand_matrix, load_config
from .harness import (
    COMPARISON_HEADER,
    emit_reports,
    gradcheck,
    measure_scenario,
    measure_fifo,
    online_loop,
    run_comparison,
    sweep_max_throughput,
)
from .mac_sim import AggregationPolicy


def _out_dir(args) -> str:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get("AIRTUNE_OUT", "airtune_out")


def _cmd_simulate(args) -> int:
    scenario, _ = load_config(args.config)
    frm = args.frm if args.frm is not None else scenario.controller.frm_min
    if args.policy == "fifo":
        policy = AggregationPolicy.fifo(scenario.fifo_max_mpdus)
    else:
        policy = AggregationPolicy.airtime_equalizing()

    trace_rows = []

    def on_txop(report):
        trace_rows.append(
            (
                len(trace_rows),
                report.txop_duration_s * 1e6,
                report.wasted_airtime_s * 1e6,
                report.delivered_bytes,
            )
        )

    thr = measure_scenario(
        scenario, policy, frm, on_txop=on_txop if args.trace else None
    )
    if args.trace:
        with open(args.trace, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["txop_id", "duration_us", "wasted_us", "delivered_bytes"])
            for row in trace_rows:
                writer.writerow([row[0], f"{row[1]:.3f}", f"{row[2]:.3f}", row[3]])
        print(f"trace written to {args.trace}")
    print(f"scenario={scenario.name} policy={args.policy} frm_bytes={frm:.0f} throughput_mbps={thr:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    scenario, _ = load_config(args.config)
    result = sweep_max_throughput(scenario)
    out = _out_dir(args)
    manifest = emit_reports([], {scenario.name: result.curve}, {}, out)
    print(f"frm_opt_bytes={result.frm_opt:.0f} thr_max_mbps={result.thr_max:.6f}")
    for path in manifest:
        print(f"wrote {path}")
    return 0


def _cmd_optimize(args) -> int:
    scenario, _ = load_config(args.config)
    run = online_loop(scenario, rounds=args.rounds)
    out = _out_dir(args)
    manifest = emit_reports([], {}, {scenario.name: run.history}, out)
    print(
        f"final_frm_bytes={run.final_frm:.0f} final_thr_mbps={run.final_thr_mbps:.6f} "
        f"rounds={run.rounds_run}"
    )
    for path in manifest:
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    scenario, matrix = load_config(args.config)
    if matrix is None:
        cells = [scenario]
        seeds_per_cell = args.seeds or 1
    else:
        cells = expand_matrix(scenario, matrix)
        seeds_per_cell = args.seeds or matrix.seeds_per_cell
    rows, curves, histories = run_comparison(cells, seeds_per_cell=seeds_per_cell)
    manifest = emit_reports(rows, curves, histories, _out_dir(args))
    for row in rows:
        print(
            f"{row.traffic_model} snr={row.snr_db:g} sta={row.num_sta} "
            f"fifo={row.fifo_mbps:.2f} max={row.max_mbps:.2f} ml={row.ml_mbps:.2f} "
            f"ratio={row.ml_over_max_ratio:.4f}"
        )
    for path in manifest:
        print(f"wrote {path}")
    return 0


def _cmd_gradcheck(args) -> int:
    result = gradcheck(args.trials, args.seed)
    status = "pass" if result.passed else "FAIL"
    print(f"gradcheck {status}: max_rel_err={result.max_rel_err:.3e} over {args.trials} trials")
    return 0 if result.passed else 1


def _cmd_report(args) -> int:
    path = os.path.join(args.dir, "comparison.csv")
    if not os.path.exists(path):
        raise ConfigError(f"no comparison.csv in {args.dir}")
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != COMPARISON_HEADER:
            raise ConfigError(f"unexpected comparison.csv header: {header}")
        rows = list(reader)
    print(" | ".join(header))
    for row in rows:
        print(" | ".join(row))
    others = sorted(
        f for f in os.listdir(args.dir) if f.startswith(("sweep_", "trajectory_"))
    )
    for name in others:
        print(f"found {os.path.join(args.dir, name)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airtune",
        description="WLAN downlink MU-MIMO aggregation simulator with an online "
        "neural frame-size optimizer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one fixed-frame-size simulation")
    p.add_argument("config")
    p.add_argument("--frm", type=float, default=None, help="system frame size in bytes")
    p.add_argument("--policy", choices=["fifo", "airtime"], default="airtime")
    p.add_argument("--trace", default=None, help="write per-TXOP trace CSV here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="brute-force frame-size sweep")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("optimize", help="run the online optimization loop")
    p.add_argument("config")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("compare", help="FIFO vs sweep maximum vs online ML matrix")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, default=None, help="replicates per cell")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference check of the input gradient")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("report", help="print tables from an output directory")
    p.add_argument("dir")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
