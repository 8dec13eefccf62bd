"""Experiment harness: scenario measurements, the brute-force frame-size
sweep, the online optimization run, the FIFO/Maximum/ML comparison matrix,
gradient self-checks, and CSV report emission.

Seeding convention: every throughput measurement carries a measurement seed;
seed 0 is the shared evaluation arm, so FIFO, sweep points, and the final
ML measurement of one scenario all see identical arrival and error
processes.  Controller probes use per-(round, probe) seeds.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .channel import phy_rate
from .config import MatrixSpec, ScenarioConfig, expand_matrix
from .controller import LoopParams, RoundRecord, probe_points, run_online_loop
from .mac_sim import AggregationPolicy, ApState, measure_throughput
from .neural import Mlp
from .traffic import make_generator

EVAL_SEED = 0  # measurement seed shared by FIFO / sweep / final-ML arms


def make_generators(scenario: ScenarioConfig, measurement_seed: int):
    if scenario.traffic is None:
        return []
    root = np.random.SeedSequence((scenario.seeds.traffic, measurement_seed))
    return [
        make_generator(scenario.traffic, sta, child)
        for sta, child in enumerate(root.spawn(scenario.num_sta))
    ]


def make_ap(scenario: ScenarioConfig) -> ApState:
    return ApState(
        num_sta=scenario.num_sta,
        n_antennas=scenario.n_antennas,
        overheads=scenario.overheads,
        retry_limit=scenario.retry_limit,
    )


def measure_scenario(
    scenario: ScenarioConfig,
    policy: AggregationPolicy,
    frm: float,
    duration_s: float | None = None,
    measurement_seed: int = EVAL_SEED,
    on_txop=None,
) -> float:
    """Fresh simulation of one (policy, frm) operating point; delivered Mbps."""
    ap = make_ap(scenario)
    gens = make_generators(scenario, measurement_seed)
    err_seed = np.random.SeedSequence((scenario.seeds.channel, measurement_seed))
    return measure_throughput(
        ap,
        gens,
        policy,
        frm,
        scenario.channel,
        scenario.duration_s if duration_s is None else duration_s,
        err_seed,
        on_txop=on_txop,
    )


def measure_fifo(scenario: ScenarioConfig, measurement_seed: int = EVAL_SEED) -> float:
    policy = AggregationPolicy.fifo(scenario.fifo_max_mpdus)
    # frm is ignored by the FIFO policy; any positive value works.
    return measure_scenario(scenario, policy, scenario.controller.frm_min, measurement_seed=measurement_seed)


@dataclass
class SweepResult:
    frm_opt: float
    thr_max: float
    curve: list[tuple[float, float]]


def sweep_max_throughput(scenario: ScenarioConfig) -> SweepResult:
    """Exhaustive reference: adaptive-aggregation throughput at every grid
    point under identical seeds; argmax ties resolve toward smaller frm."""
    if not scenario.sweep_grid:
        raise ValueError("sweep grid is empty")
    policy = AggregationPolicy.airtime_equalizing()
    curve = [
        (frm, measure_scenario(scenario, policy, frm)) for frm in scenario.sweep_grid
    ]
    thrs = np.array([t for _, t in curve])
    best = int(np.argmax(thrs))  # first max -> smaller frm on ties
    return SweepResult(curve[best][0], float(thrs[best]), curve)


@dataclass
class OnlineRunResult:
    final_frm: float
    final_thr_mbps: float
    history: list[RoundRecord]
    rounds_run: int


def _probe_seed(round_idx: int, probe_idx: int) -> int:
    # Distinct from EVAL_SEED and unique per (round, probe).
    return 1 + round_idx * 100_000 + probe_idx


def collect_patterns(
    scenario: ScenarioConfig,
    frm_center: float,
    n: int | None = None,
    window_s: float | None = None,
    round_idx: int = 0,
):
    """One collection pass: n probe frame sizes spread around frm_center,
    each simulated for window_s seconds on a fresh seed stream.  Returns the
    raw (frm, Mbps) pairs; n probes of window_s cover n * window_s seconds
    of simulated time."""
    settings = scenario.controller
    if n is None:
        n = settings.samples_per_round
    if window_s is None:
        window_s = settings.sample_window_s
    policy = AggregationPolicy.airtime_equalizing()
    probes = probe_points(
        frm_center, (settings.frm_min, settings.frm_max), n, settings.probe_spread
    )
    return [
        (
            float(frm),
            measure_scenario(
                scenario,
                policy,
                float(frm),
                duration_s=window_s,
                measurement_seed=_probe_seed(round_idx, k),
            ),
        )
        for k, frm in enumerate(probes)
    ]


def online_loop(
    scenario: ScenarioConfig, rounds: int | None = None, mlp: Mlp | None = None
) -> OnlineRunResult:
    """Run the collect/train/step cycle on the simulator, then evaluate the
    final frame size under the shared evaluation seed and duration."""
    settings = scenario.controller
    policy = AggregationPolicy.airtime_equalizing()

    def measure(frm: float, round_idx: int, probe_idx: int) -> float:
        return measure_scenario(
            scenario,
            policy,
            frm,
            duration_s=settings.sample_window_s,
            measurement_seed=_probe_seed(round_idx, probe_idx),
        )

    params = LoopParams(
        frm_min=settings.frm_min,
        frm_max=settings.frm_max,
        thr_max=scenario.aggregate_phy_mbps,
        mu=settings.mu,
        start_frm=settings.start_frm,
        probe_spread=settings.probe_spread,
        samples_per_round=settings.samples_per_round,
    )
    result = run_online_loop(
        measure,
        params,
        rounds=settings.rounds if rounds is None else rounds,
        init_seed=scenario.seeds.init,
        shuffle_seed=scenario.seeds.shuffle,
        mlp=mlp,
    )
    final_thr = measure_scenario(scenario, policy, result.final_frm)
    return OnlineRunResult(result.final_frm, final_thr, result.history, result.rounds_run)


@dataclass
class ComparisonRow:
    traffic_model: str
    snr_db: float
    num_sta: int
    fifo_mbps: float
    max_mbps: float
    ml_mbps: float
    ml_over_max_ratio: float
    frm_opt_bytes: float


def compare_cell(scenario: ScenarioConfig, seeds_per_cell: int = 1):
    """FIFO, sweep maximum, and online-ML throughput for one cell, averaged
    over independent replicates; arms share evaluation seeds within each
    replicate.  Returns (row, sweep of replicate 0, history of replicate 0)."""
    fifo_vals, max_vals, ml_vals, frm_opts = [], [], [], []
    first_sweep = None
    first_history = None
    for rep in range(seeds_per_cell):
        cell = scenario.reseeded(rep)
        fifo_vals.append(measure_fifo(cell))
        sweep = sweep_max_throughput(cell)
        run = online_loop(cell)
        if rep == 0:
            first_sweep, first_history = sweep, run.history
        max_vals.append(sweep.thr_max)
        frm_opts.append(sweep.frm_opt)
        ml_vals.append(run.final_thr_mbps)
    max_mean = float(np.mean(max_vals))
    ml_mean = float(np.mean(ml_vals))
    row = ComparisonRow(
        traffic_model=scenario.traffic.kind if scenario.traffic else "none",
        snr_db=scenario.channel.snr_db,
        num_sta=scenario.num_sta,
        fifo_mbps=float(np.mean(fifo_vals)),
        max_mbps=max_mean,
        ml_mbps=ml_mean,
        ml_over_max_ratio=ml_mean / max_mean if max_mean > 0 else math.nan,
        frm_opt_bytes=float(np.mean(frm_opts)),
    )
    return row, first_sweep, first_history


def run_comparison(scenarios, seeds_per_cell: int = 1):
    """Full matrix: one ComparisonRow per scenario plus per-cell sweep curves
    and optimization trajectories keyed by scenario name."""
    rows, curves, histories = [], {}, {}
    for scenario in scenarios:
        row, sweep, history = compare_cell(scenario, seeds_per_cell)
        rows.append(row)
        curves[scenario.name] = sweep.curve
        histories[scenario.name] = history
    return rows, curves, histories


@dataclass
class GradCheckResult:
    max_rel_err: float
    passed: bool


def gradcheck(
    n_trials: int,
    seed,
    h: float = 1e-5,
    tol: float = 1e-3,
    gradient_fn=None,
) -> GradCheckResult:
    """Compare the analytic input gradient against central finite differences
    on random networks and inputs.  Relative error is guarded so exact-zero
    gradients (e.g. all output weights zero) compare cleanly."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if gradient_fn is None:
        gradient_fn = Mlp.input_gradient
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(n_trials):
        if trial == 0:
            # Degenerate case: zero output weights force an exactly-zero gradient.
            mlp = Mlp([0.3, -0.4, 0.1, 0.7], [0.1, 0.2, -0.1, 0.0], [0.0] * 4, 0.2)
        else:
            draws = rng.uniform(-2.0, 2.0, 13)
            mlp = Mlp(draws[0:4], draws[4:8], draws[8:12], draws[12])
        x = float(rng.uniform(-0.5, 1.5))
        mlp.forward(x)
        analytic = gradient_fn(mlp)
        fd = (mlp.forward(x + h) - mlp.forward(x - h)) / (2.0 * h)
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
        worst = max(worst, rel)
    return GradCheckResult(worst, worst < tol)


# -- report emission ---------------------------------------------------------

COMPARISON_HEADER = [
    "traffic_model",
    "snr_db",
    "num_sta",
    "fifo_mbps",
    "max_mbps",
    "ml_mbps",
    "ml_over_max_ratio",
    "frm_opt_bytes",
]
SWEEP_HEADER = ["frm_bytes", "thr_mbps"]
TRAJECTORY_HEADER = ["round", "frm_bytes", "thr_mbps", "gradient", "mse", "epochs"]


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def emit_reports(rows, curves, histories, out_dir) -> list[str]:
    """Write comparison.csv plus per-scenario sweep/trajectory CSVs.

    Output is deterministic: rows sort by (model, snr, stations) and floats
    use fixed formatting.  Returns the list of written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = []

    path = os.path.join(out_dir, "comparison.csv")
    ordered = sorted(rows, key=lambda r: (r.traffic_model, r.snr_db, r.num_sta))
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARISON_HEADER)
        for r in ordered:
            writer.writerow(
                [
                    r.traffic_model,
                    f"{r.snr_db:g}",
                    r.num_sta,
                    _fmt(r.fifo_mbps),
                    _fmt(r.max_mbps),
                    _fmt(r.ml_mbps),
                    _fmt(r.ml_over_max_ratio),
                    f"{r.frm_opt_bytes:.1f}",
                ]
            )
    manifest.append(path)

    for name in sorted(curves):
        path = os.path.join(out_dir, f"sweep_{name}.csv")
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_HEADER)
            for frm, thr in curves[name]:
                writer.writerow([f"{frm:.1f}", _fmt(thr)])
        manifest.append(path)

    for name in sorted(histories):
        path = os.path.join(out_dir, f"trajectory_{name}.csv")
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_HEADER)
            for rec in histories[name]:
                writer.writerow(
                    [
                        rec.round,
                        f"{rec.frm:.1f}",
                        _fmt(rec.thr_mbps),
                        f"{rec.gradient:.9e}",
                        f"{rec.mse:.9e}",
                        rec.epochs,
                    ]
                )
        manifest.append(path)
    return manifest
