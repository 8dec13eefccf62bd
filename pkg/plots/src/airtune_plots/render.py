"""Render airtune CSV outputs as the standard comparison figures.

Four figure kinds, all consuming the documented CSV headers only (nothing is
recomputed here):

* by_traffic_model - grouped bars of FIFO / Maximum / Proposed ML per model,
* by_snr           - the three series against SNR for one traffic model,
* by_stations      - the three series against station count for one model,
* throughput_vs_frm - a sweep curve, optionally with the optimization
  trajectory overlaid in round order.

Rendering is read-only and deterministic: the same inputs produce the same
image bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

FIGURE_KINDS = ("by_traffic_model", "by_snr", "by_stations", "throughput_vs_frm")

COMPARISON_COLUMNS = (
    "traffic_model",
    "snr_db",
    "num_sta",
    "fifo_mbps",
    "max_mbps",
    "ml_mbps",
)
SWEEP_COLUMNS = ("frm_bytes", "thr_mbps")
TRAJECTORY_COLUMNS = ("round", "frm_bytes", "thr_mbps")

# Series labels mirror the comparison legends the CSVs were built for.
SERIES = (
    ("fifo_mbps", "FIFO (Baseline)", "#b3b3b3"),
    ("max_mbps", "Maximum Throughput", "#1f77b4"),
    ("ml_mbps", "Proposed ML", "#d62728"),
)


class PlotDataError(ValueError):
    """Unusable input data: missing columns, empty tables, ambiguous slices."""


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    figure_kind: str
    out_path: str
    trajectory_csv: str | None = None
    traffic_model: str | None = None  # slice selector where the kind needs one
    snr_db: float | None = None
    num_sta: int | None = None

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise PlotDataError(
                f"unknown figure kind {self.figure_kind!r}; expected one of {FIGURE_KINDS}"
            )


def read_table(path, required_columns) -> list[dict]:
    """Read a CSV into row dicts, insisting on the documented columns."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required_columns:
            if column not in header:
                raise PlotDataError(f"missing column {column!r} in {path}")
        rows = list(reader)
    if not rows:
        raise PlotDataError(f"no data rows in {path}")
    return rows


def _unique_or_selected(rows, key, selected, cast, what):
    if selected is not None:
        chosen = [r for r in rows if cast(r[key]) == selected]
        if not chosen:
            raise PlotDataError(f"no rows with {key} == {selected} in the input")
        return chosen, selected
    values = sorted({cast(r[key]) for r in rows})
    if len(values) > 1:
        raise PlotDataError(
            f"input holds several {what} values {values}; pick one with the "
            f"matching selector"
        )
    return rows, values[0]


def _comparison_slice(spec: PlotSpec, need_model=False, need_snr=False, need_sta=False):
    rows = read_table(spec.input_csv, COMPARISON_COLUMNS)
    title_bits = []
    if need_model:
        rows, model = _unique_or_selected(
            rows, "traffic_model", spec.traffic_model, str, "traffic model"
        )
        title_bits.append(model)
    if need_snr:
        rows, snr = _unique_or_selected(rows, "snr_db", spec.snr_db, float, "SNR")
        title_bits.append(f"{snr:g} dB")
    if need_sta:
        rows, sta = _unique_or_selected(rows, "num_sta", spec.num_sta, int, "station count")
        title_bits.append(f"{sta} STA")
    return rows, ", ".join(title_bits)


def _new_axes():
    fig, ax = plt.subplots(figsize=(7.0, 4.2), dpi=120)
    ax.grid(True, axis="y", alpha=0.3)
    return fig, ax


def _finish(fig, ax, title, ylabel, out_path):
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _render_by_traffic_model(spec: PlotSpec) -> None:
    rows, slice_title = _comparison_slice(spec, need_snr=True, need_sta=True)
    rows = sorted(rows, key=lambda r: r["traffic_model"])
    models = [r["traffic_model"] for r in rows]
    if len(set(models)) != len(models):
        raise PlotDataError("duplicate traffic_model rows in the selected slice")
    fig, ax = _new_axes()
    width = 0.25
    for offset, (column, label, color) in zip((-width, 0.0, width), SERIES):
        xs = [i + offset for i in range(len(models))]
        ax.bar(xs, [float(r[column]) for r in rows], width=width, label=label, color=color)
    ax.set_xticks(range(len(models)))
    ax.set_xticklabels(models)
    ax.set_xlabel("traffic model")
    _finish(fig, ax, f"Throughput by traffic model ({slice_title})",
            "throughput [Mbps]", spec.out_path)


def _render_by_snr(spec: PlotSpec) -> None:
    rows, slice_title = _comparison_slice(spec, need_model=True, need_sta=True)
    rows = sorted(rows, key=lambda r: float(r["snr_db"]))
    snrs = [float(r["snr_db"]) for r in rows]
    fig, ax = _new_axes()
    for column, label, color in SERIES:
        ax.plot(snrs, [float(r[column]) for r in rows], marker="o", label=label, color=color)
    ax.set_xlabel("SNR [dB]")
    _finish(fig, ax, f"Throughput vs SNR ({slice_title})", "throughput [Mbps]", spec.out_path)


def _render_by_stations(spec: PlotSpec) -> None:
    rows, slice_title = _comparison_slice(spec, need_model=True, need_snr=True)
    rows = sorted(rows, key=lambda r: int(r["num_sta"]))
    stas = [int(r["num_sta"]) for r in rows]
    fig, ax = _new_axes()
    for column, label, color in SERIES:
        ax.plot(stas, [float(r[column]) for r in rows], marker="s", label=label, color=color)
    ax.set_xlabel("number of stations")
    ax.set_xticks(stas)
    _finish(fig, ax, f"Throughput vs stations ({slice_title})",
            "throughput [Mbps]", spec.out_path)


def _render_throughput_vs_frm(spec: PlotSpec) -> None:
    rows = read_table(spec.input_csv, SWEEP_COLUMNS)
    frms = [float(r["frm_bytes"]) for r in rows]
    thrs = [float(r["thr_mbps"]) for r in rows]
    fig, ax = _new_axes()
    ax.plot(frms, thrs, marker=".", color="#1f77b4", label="Maximum Throughput sweep")
    if spec.trajectory_csv is not None:
        traj = read_table(spec.trajectory_csv, TRAJECTORY_COLUMNS)
        traj = sorted(traj, key=lambda r: int(r["round"]))
        ax.plot(
            [float(r["frm_bytes"]) for r in traj],
            [float(r["thr_mbps"]) for r in traj],
            marker="o", linestyle="--", color="#d62728", label="Proposed ML trajectory",
        )
    ax.set_xscale("log")
    ax.set_xlabel("system frame size [bytes]")
    _finish(fig, ax, "Throughput vs system frame size", "throughput [Mbps]", spec.out_path)


_RENDERERS = {
    "by_traffic_model": _render_by_traffic_model,
    "by_snr": _render_by_snr,
    "by_stations": _render_by_stations,
    "throughput_vs_frm": _render_throughput_vs_frm,
}


def render(spec: PlotSpec) -> str:
    """Render one figure; returns the output path.

    Raises PlotDataError before any file is written when the input is
    unusable, so a failed render never leaves an empty image behind.
    """
    _RENDERERS[spec.figure_kind](spec)
    return spec.out_path
