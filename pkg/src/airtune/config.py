"""Scenario configuration: dataclasses plus the sectioned key-value file format.

A config file has sections traffic / channel / mac / controller / sweep /
seeds and an optional matrix section describing a model x SNR x station
cross product for comparison runs.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import DEFAULT_BER_TABLE, DEFAULT_RATE_TABLE, ChannelProfile, phy_rate
from .mac_sim import Overheads
from .traffic import FBM, KINDS, PARETO, WEIBULL, TrafficModel


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


# Shape parameter defaults: heavy-tailed / self-similar regimes.
DEFAULT_SHAPES = {PARETO: 1.5, WEIBULL: 0.8, FBM: 0.8}
SHAPE_KEYS = {PARETO: "alpha", WEIBULL: "k", FBM: "hurst"}

DEFAULT_FRM_MIN = 65536
DEFAULT_FRM_MAX = 4194304
DEFAULT_SWEEP_POINTS = 32


def log_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    """n logarithmically spaced frame sizes in [lo, hi], rounded to whole bytes."""
    if not (lo > 0 and hi > lo and n >= 1):
        raise ConfigError("grid needs 0 < lo < hi and n >= 1")
    if n == 1:
        return (float(round(lo)),)
    pts = np.geomspace(lo, hi, n)
    out = tuple(float(round(p)) for p in pts)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError("grid points collapse after rounding; use fewer points")
    return out


@dataclass(frozen=True)
class Seeds:
    traffic: int = 1
    channel: int = 2
    init: int = 3
    shuffle: int = 4


@dataclass(frozen=True)
class ControllerSettings:
    rounds: int = 16
    mu: float | None = None  # None -> derived default
    frm_min: float = DEFAULT_FRM_MIN
    frm_max: float = DEFAULT_FRM_MAX
    probe_spread: float = 0.10
    samples_per_round: int = 50
    sample_window_s: float = 1.0
    start_frm: float | None = None  # None -> frm_min

    def __post_init__(self):
        if not 0 < self.frm_min < self.frm_max:
            raise ConfigError("need 0 < frm_min < frm_max")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.samples_per_round < 2:
            raise ConfigError("samples_per_round must be >= 2")
        if not self.sample_window_s > 0:
            raise ConfigError("sample_window_s must be > 0")
        if not 0 < self.probe_spread <= 1:
            raise ConfigError("probe_spread must lie in (0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one experiment cell needs: traffic, channel, MAC, control, seeds."""

    traffic: TrafficModel | None
    channel: ChannelProfile
    num_sta: int = 4
    n_antennas: int = 4
    retry_limit: int = 4
    fifo_max_mpdus: int = 64
    overheads: Overheads = field(default_factory=Overheads)
    duration_s: float = 20.0
    seeds: Seeds = field(default_factory=Seeds)
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    sweep_grid: tuple[float, ...] = ()
    name: str = "scenario"

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be > 0")
        grid = self.sweep_grid
        if grid:
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("sweep grid must be strictly increasing")
            if grid[0] < self.controller.frm_min or grid[-1] > self.controller.frm_max:
                raise ConfigError("sweep grid must lie within [frm_min, frm_max]")

    @property
    def aggregate_phy_mbps(self) -> float:
        return self.num_sta * phy_rate(self.channel)

    def with_name(self, name: str) -> "ScenarioConfig":
        return dataclasses.replace(self, name=name)

    def reseeded(self, replicate: int) -> "ScenarioConfig":
        """Shift all seeds for an independent replicate; replicate 0 is identity."""
        if replicate == 0:
            return self
        s = self.seeds
        off = 7919 * replicate
        return dataclasses.replace(
            self,
            seeds=Seeds(s.traffic + off, s.channel + off, s.init + off, s.shuffle + off),
        )


@dataclass(frozen=True)
class MatrixSpec:
    models: tuple[str, ...]
    snrs: tuple[float, ...]
    stas: tuple[int, ...]
    seeds_per_cell: int = 5
    # Per-cell offered load per station as a multiple of the cell's
    # per-stream PHY rate; None reuses the base scenario's absolute load.
    load_per_rate: float | None = None


def scenario_slug(model_kind: str | None, snr_db: float, num_sta: int) -> str:
    kind = model_kind or "none"
    snr = f"{snr_db:g}".replace("-", "m").replace(".", "p")
    return f"{kind}_{snr}db_{num_sta}sta"


def build_scenario(
    model_kind: str | None,
    snr_db: float,
    num_sta: int,
    *,
    load_mbps: float | None = None,
    load_per_rate: float | None = None,
    shape: float | None = None,
    rate_table=DEFAULT_RATE_TABLE,
    ber_table=DEFAULT_BER_TABLE,
    ber_exp=None,
    duration_s: float = 20.0,
    seeds: Seeds = Seeds(),
    controller: ControllerSettings = ControllerSettings(),
    sweep_grid: tuple[float, ...] | None = None,
    **mac_kwargs,
) -> ScenarioConfig:
    """Assemble one scenario; `load_per_rate` scales the per-stream PHY rate."""
    channel = ChannelProfile(snr_db, rate_table, ber_table, ber_exp)
    if model_kind is None:
        traffic = None
    else:
        if (load_mbps is None) == (load_per_rate is None):
            raise ConfigError("give exactly one of load_mbps or load_per_rate")
        load = load_mbps if load_mbps is not None else load_per_rate * phy_rate(channel)
        traffic = TrafficModel(model_kind, DEFAULT_SHAPES[model_kind] if shape is None else shape, load)
    if sweep_grid is None:
        sweep_grid = log_grid(controller.frm_min, controller.frm_max, DEFAULT_SWEEP_POINTS)
    return ScenarioConfig(
        traffic=traffic,
        channel=channel,
        num_sta=num_sta,
        duration_s=duration_s,
        seeds=seeds,
        controller=controller,
        sweep_grid=sweep_grid,
        name=scenario_slug(model_kind, snr_db, num_sta),
        **mac_kwargs,
    )


# -- file parsing -----------------------------------------------------------


def _get(parser, section, key, cast, default=None):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _parse_pairs(raw: str, what: str) -> tuple:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split(":")
            out.append((float(a), float(b)))
        except ValueError as exc:
            raise ConfigError(f"{what}: expected snr:value pairs, got {item!r}") from exc
    if not out:
        raise ConfigError(f"{what}: empty pair list")
    return tuple(out)


def _parse_grid(raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if raw.startswith("log:"):
        try:
            _, lo, hi, n = raw.split(":")
            return log_grid(float(lo), float(hi), int(n))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"grid: expected log:lo:hi:n, got {raw!r}") from exc
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"grid: cannot parse {raw!r}") from exc


def _parse_list(raw: str, cast, what: str) -> tuple:
    try:
        return tuple(cast(v.strip()) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{what}: cannot parse {raw!r}") from exc


def load_config(path) -> tuple[ScenarioConfig, MatrixSpec | None]:
    """Parse a scenario file; returns the base scenario and the optional matrix."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    model_kind = _get(parser, "traffic", "model", str, "none").lower()
    if model_kind in ("none", "off"):
        model_kind = None
    elif model_kind not in KINDS:
        raise ConfigError(f"[traffic] model must be one of {KINDS} or none")
    shape = None
    if model_kind is not None:
        shape = _get(parser, "traffic", SHAPE_KEYS[model_kind], float)
    load_mbps = _get(parser, "traffic", "load_mbps", float)
    load_per_rate = _get(parser, "traffic", "load_per_rate", float)
    if model_kind is not None and load_mbps is None and load_per_rate is None:
        raise ConfigError("[traffic] needs load_mbps or load_per_rate")

    snr_db = _get(parser, "channel", "snr_db", float, 10.0)
    rate_table = DEFAULT_RATE_TABLE
    if parser.has_option("channel", "rate_table"):
        rate_table = _parse_pairs(parser.get("channel", "rate_table"), "rate_table")
    ber_table: tuple | None = DEFAULT_BER_TABLE
    ber_exp = None
    if parser.has_option("channel", "ber_exp"):
        vals = _parse_list(parser.get("channel", "ber_exp"), float, "ber_exp")
        if len(vals) != 2:
            raise ConfigError("ber_exp needs exactly c1, c2")
        ber_exp = vals
        ber_table = None
    elif parser.has_option("channel", "ber_table"):
        ber_table = _parse_pairs(parser.get("channel", "ber_table"), "ber_table")

    controller = ControllerSettings(
        rounds=_get(parser, "controller", "rounds", int, 16),
        mu=_get(parser, "controller", "mu", float),
        frm_min=_get(parser, "controller", "frm_min", float, DEFAULT_FRM_MIN),
        frm_max=_get(parser, "controller", "frm_max", float, DEFAULT_FRM_MAX),
        probe_spread=_get(parser, "controller", "probe_spread", float, 0.25),
        samples_per_round=_get(parser, "controller", "samples_per_round", int, 50),
        sample_window_s=_get(parser, "controller", "sample_window_s", float, 1.0),
        start_frm=_get(parser, "controller", "start_frm", float),
    )

    grid_raw = _get(parser, "sweep", "grid", str)
    if grid_raw is None:
        sweep_grid = log_grid(controller.frm_min, controller.frm_max, DEFAULT_SWEEP_POINTS)
    else:
        sweep_grid = _parse_grid(grid_raw)

    # [traffic] seed is an alias for [seeds] traffic.
    traffic_seed = _get(parser, "traffic", "seed", int)
    if traffic_seed is None:
        traffic_seed = _get(parser, "seeds", "traffic", int, 1)
    seeds = Seeds(
        traffic=traffic_seed,
        channel=_get(parser, "seeds", "channel", int, 2),
        init=_get(parser, "seeds", "init", int, 3),
        shuffle=_get(parser, "seeds", "shuffle", int, 4),
    )

    overheads = Overheads(
        preamble_us=_get(parser, "mac", "preamble_us", float, 40.0),
        sifs_us=_get(parser, "mac", "sifs_us", float, 16.0),
        block_ack_us=_get(parser, "mac", "block_ack_us", float, 32.0),
    )

    try:
        scenario = build_scenario(
            model_kind,
            snr_db,
            _get(parser, "mac", "num_sta", int, 4),
            load_mbps=load_mbps,
            load_per_rate=load_per_rate,
            shape=shape,
            rate_table=rate_table,
            ber_table=ber_table,
            ber_exp=ber_exp,
            duration_s=_get(parser, "mac", "duration_s", float, 20.0),
            seeds=seeds,
            controller=controller,
            sweep_grid=sweep_grid,
            n_antennas=_get(parser, "mac", "n_antennas", int, 4),
            retry_limit=_get(parser, "mac", "retry_limit", int, 4),
            fifo_max_mpdus=_get(parser, "mac", "fifo_max_mpdus", int, 64),
            overheads=overheads,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    matrix = None
    if parser.has_section("matrix"):
        models = _parse_list(parser.get("matrix", "models", fallback="pareto, weibull, fbm"), str, "models")
        models = tuple(m.lower() for m in models)
        for m in models:
            if m not in KINDS:
                raise ConfigError(f"[matrix] unknown model {m!r}")
        matrix = MatrixSpec(
            models=models,
            snrs=_parse_list(parser.get("matrix", "snrs", fallback="3, 10, 20"), float, "snrs"),
            stas=_parse_list(parser.get("matrix", "stas", fallback="4"), int, "stas"),
            seeds_per_cell=_get(parser, "matrix", "seeds_per_cell", int, 5),
            load_per_rate=load_per_rate,
        )
    return scenario, matrix


def expand_matrix(base: ScenarioConfig, matrix: MatrixSpec) -> list[ScenarioConfig]:
    """Cross the matrix axes into concrete scenarios derived from the base.

    With `matrix.load_per_rate` set, each cell's offered load per station is
    that multiple of the cell's per-stream PHY rate; otherwise the base
    scenario's absolute load is reused in every cell.
    """
    load_per_rate = matrix.load_per_rate
    cells = []
    for model_kind in matrix.models:
        for snr in matrix.snrs:
            for sta in matrix.stas:
                channel = dataclasses.replace(base.channel, snr_db=snr)
                if load_per_rate is not None:
                    load = load_per_rate * phy_rate(channel)
                elif base.traffic is not None:
                    load = base.traffic.load_mbps
                else:
                    raise ConfigError("matrix expansion needs a traffic load")
                shape = DEFAULT_SHAPES[model_kind]
                if base.traffic is not None and base.traffic.kind == model_kind:
                    shape = base.traffic.shape
                cells.append(
                    dataclasses.replace(
                        base,
                        traffic=TrafficModel(model_kind, shape, load),
                        channel=channel,
                        num_sta=sta,
                        name=scenario_slug(model_kind, snr, sta),
                    )
                )
    return cells
