"""Per-station packet arrival processes.

Three stochastic arrival models (Pareto, Weibull, fractional-Brownian-motion
rate modulation) drive a 50/50 VoIP/video payload mix at a configurable
offered load per station.  Generators are seeded and fully deterministic:
the same (model, seed) pair always yields the same packet stream.

Packets are produced in array blocks internally and materialized only as
far as consumption demands; `next_packet` is a convenience cursor for
callers that want one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PARETO = "pareto"
WEIBULL = "weibull"
FBM = "fbm"
KINDS = (PARETO, WEIBULL, FBM)

VOIP_PAYLOAD = 100
VIDEO_PAYLOAD = 1000
# 50/50 class mix -> expected payload per packet.
MEAN_PAYLOAD = (VOIP_PAYLOAD + VIDEO_PAYLOAD) / 2.0

# Renewal models draw inter-arrivals in blocks of this many packets.
_RENEWAL_BLOCK = 16384

# fBM rate process: interval width, intervals per fGn block (power of two
# for the circulant embedding; bounds how far long-range dependence
# reaches), packet-materialization chunk, and the relative std-dev of the
# modulating noise before clipping at zero.
FBM_INTERVAL_S = 0.01
FBM_BLOCK_INTERVALS = 4096
FBM_SIGMA_REL = 0.6
_FBM_CHUNK = 128


@dataclass(frozen=True)
class TrafficModel:
    """Arrival model for one station: kind, shape parameter, offered load.

    `shape` is the Pareto tail index alpha, the Weibull shape k, or the
    fBM Hurst exponent H depending on `kind`.
    """

    kind: str
    shape: float
    load_mbps: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown traffic model kind {self.kind!r}")
        if not math.isfinite(self.shape):
            raise ValueError("shape parameter must be finite")
        if self.kind == PARETO and self.shape <= 1.0:
            raise ValueError(
                f"pareto shape must be > 1 for a finite mean inter-arrival, got {self.shape}"
            )
        if self.kind == WEIBULL and self.shape <= 0.0:
            raise ValueError(f"weibull shape must be > 0, got {self.shape}")
        if self.kind == FBM and not 0.5 <= self.shape < 1.0:
            raise ValueError(f"fbm hurst exponent must be in [0.5, 1), got {self.shape}")
        if not self.load_mbps > 0.0:
            raise ValueError(f"target load must be > 0 Mbps, got {self.load_mbps}")

    @property
    def packets_per_second(self) -> float:
        return self.load_mbps * 1e6 / (8.0 * MEAN_PAYLOAD)


@dataclass(frozen=True)
class Packet:
    """One MAC service data unit bound for a station."""

    sta_id: int
    traffic_class: str  # "voip" | "video"
    payload: int  # bytes
    arrival: float  # seconds


def _fgn_davies_harte(n: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """Exact fractional Gaussian noise (unit variance) via circulant embedding."""
    k = np.arange(n + 1, dtype=np.float64)
    h2 = 2.0 * hurst
    gamma = 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    # The embedding is non-negative definite for fGn; clip fp dust.
    lam = np.clip(lam, 0.0, None)
    m = 2 * n
    w = np.zeros(m, dtype=np.complex128)
    w[0] = math.sqrt(lam[0] / m) * rng.standard_normal()
    re = rng.standard_normal(n - 1)
    im = rng.standard_normal(n - 1)
    w[1:n] = np.sqrt(lam[1:n] / (2.0 * m)) * (re + 1j * im)
    w[n] = math.sqrt(lam[n] / m) * rng.standard_normal()
    w[n + 1 :] = np.conj(w[n - 1 : 0 : -1])
    return np.fft.fft(w)[:n].real


class PacketGenerator:
    """Deterministic, seeded arrival stream for one station.

    `take_until` hands out everything that has arrived up to a given time
    as (arrivals, payloads) arrays; that is the bulk path the simulator
    uses.
    """

    def __init__(self, model: TrafficModel, sta_id: int, seed):
        self.model = model
        self.sta_id = sta_id
        self._rng = np.random.default_rng(seed)
        self._arrivals = np.empty(0, dtype=np.float64)
        self._payloads = np.empty(0, dtype=np.int32)
        self._pos = 0
        self.consumed_until = 0.0  # high-water mark of take_until windows
        if model.kind == FBM:
            self._rates = np.empty(0)
            self._rate_pos = 0
            self._rate_t0 = 0.0  # absolute time of self._rates[self._rate_pos]
            self._fbm_carry = 0.0
        else:
            self._t_last = 0.0  # arrival time of the last generated packet

    # -- block generation -------------------------------------------------

    def _draw_payloads(self, n: int) -> np.ndarray:
        flips = self._rng.random(n)
        return np.where(flips < 0.5, VOIP_PAYLOAD, VIDEO_PAYLOAD).astype(np.int32)

    def _refill(self) -> None:
        model = self.model
        if model.kind == FBM:
            self._refill_fbm()
            return
        mean_ia = 1.0 / model.packets_per_second
        if model.kind == PARETO:
            xm = mean_ia * (model.shape - 1.0) / model.shape
            u = self._rng.random(_RENEWAL_BLOCK)
            ia = xm * (1.0 - u) ** (-1.0 / model.shape)
        else:
            scale = mean_ia / math.gamma(1.0 + 1.0 / model.shape)
            ia = scale * self._rng.weibull(model.shape, _RENEWAL_BLOCK)
        arrivals = self._t_last + np.cumsum(ia)
        self._arrivals = arrivals
        self._payloads = self._draw_payloads(arrivals.size)
        self._pos = 0
        self._t_last = float(arrivals[-1])

    def _next_rate_block(self) -> None:
        n = FBM_BLOCK_INTERVALS
        while True:
            g = _fgn_davies_harte(n, self.model.shape, self._rng)
            rates = np.clip(1.0 + FBM_SIGMA_REL * g, 0.0, None)
            total = rates.sum()
            if total > 0.0:
                break
        # Rescale the block so its mean rate hits the target load exactly.
        self._rates = rates * (n / total)
        self._rate_pos = 0

    def _refill_fbm(self) -> None:
        """Materialize the next chunk of rate intervals into packets."""
        dt = FBM_INTERVAL_S
        base = self.model.packets_per_second * dt
        while True:
            if self._rate_pos >= self._rates.size:
                self._next_rate_block()
            take = min(_FBM_CHUNK, self._rates.size - self._rate_pos)
            rates = self._rates[self._rate_pos : self._rate_pos + take]
            cum = np.cumsum(rates * base) + self._fbm_carry
            whole = np.floor(cum).astype(np.int64)
            counts = np.diff(whole, prepend=0)
            total_pkts = int(whole[-1])
            t0 = self._rate_t0
            self._rate_pos += take
            self._rate_t0 = t0 + take * dt
            self._fbm_carry = float(cum[-1] - whole[-1])
            if total_pkts == 0:
                continue  # empty chunk (tiny load or deep rate dip): advance time
            starts = np.repeat(t0 + np.arange(take) * dt, counts)
            counts_rep = np.repeat(counts, counts)
            offsets = np.arange(total_pkts) - np.repeat(np.cumsum(counts) - counts, counts)
            self._arrivals = starts + (offsets + 1.0) / (counts_rep + 1.0) * dt
            self._payloads = self._draw_payloads(total_pkts)
            self._pos = 0
            return

    # -- consumption -----------------------------------------------------

    def peek_arrival(self) -> float:
        """Arrival time of the next not-yet-consumed packet."""
        if self._pos >= self._arrivals.size:
            self._refill()
        return float(self._arrivals[self._pos])

    def take_until(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """All packets with arrival <= t, as (arrivals, payloads) arrays."""
        if t > self.consumed_until:
            self.consumed_until = t
        pos = self._pos
        arr = self._arrivals
        # Fast path: the current block already extends past t.
        if pos < arr.size and arr[-1] > t:
            hi = int(arr.searchsorted(t, side="right"))
            if hi <= pos:
                return _EMPTY_F, _EMPTY_I
            out = arr[pos:hi], self._payloads[pos:hi]
            self._pos = hi
            return out
        out_a, out_p = [], []
        while True:
            if self._pos >= self._arrivals.size:
                self._refill()
            arr = self._arrivals
            hi = int(arr.searchsorted(t, side="right"))
            if hi > self._pos:
                out_a.append(arr[self._pos : hi])
                out_p.append(self._payloads[self._pos : hi])
                self._pos = hi
            if hi < arr.size:
                break
        if not out_a:
            return _EMPTY_F, _EMPTY_I
        if len(out_a) == 1:
            return out_a[0], out_p[0]
        return np.concatenate(out_a), np.concatenate(out_p)

    def next_packet(self) -> Packet:
        """Single-packet cursor over the block stream."""
        if self._pos >= self._arrivals.size:
            self._refill()
        payload = int(self._payloads[self._pos])
        arrival = float(self._arrivals[self._pos])
        self._pos += 1
        if arrival > self.consumed_until:
            self.consumed_until = arrival
        cls = "voip" if payload == VOIP_PAYLOAD else "video"
        return Packet(self.sta_id, cls, payload, arrival)


_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int32)


def make_generator(model: TrafficModel, sta_id: int, seed) -> PacketGenerator:
    """Build a seeded generator; raises ValueError on invalid model parameters."""
    return PacketGenerator(model, sta_id, seed)


def offered_load(gen, window_s: float) -> float:
    """Payload bits arriving in the next `window_s` seconds, as Mbps.

    The window starts at the generator's consumption high-water mark, so a
    fresh generator measures [0, window_s).
    """
    if not window_s > 0.0:
        raise ValueError("window must be > 0 s")
    start = gen.consumed_until
    _, payloads = gen.take_until(start + window_s)
    return float(payloads.sum()) * 8.0 / window_s / 1e6


def arrival_count_cv(
    model: TrafficModel, duration_s: float = 60.0, bin_s: float = 0.1, seed=0
) -> float:
    """Burstiness metric: coefficient of variation of per-bin arrival counts."""
    gen = make_generator(model, 0, seed)
    arrivals, _ = gen.take_until(duration_s)
    n_bins = int(round(duration_s / bin_s))
    counts = np.bincount(
        np.minimum((arrivals / bin_s).astype(np.int64), n_bins - 1), minlength=n_bins
    )
    mean = counts.mean()
    if mean == 0.0:
        return 0.0
    return float(counts.std() / mean)
