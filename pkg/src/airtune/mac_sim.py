"""Discrete-event downlink MU-MIMO engine.

One access point holds a FIFO queue per station.  Each transmission
opportunity (TXOP) aggregates queued packets into one MPDU burst per
spatial stream under a policy, draws independent per-MPDU errors, and
advances the clock by the longest stream airtime plus fixed overheads.
Errored MPDUs are re-queued at the head of their queue until a retry
limit, then dropped.

Queues store packets as contiguous (payload, retries) array segments with
the cumulative on-air byte count cached at push time, so a TXOP reduces to
searchsorted cuts plus one error draw per stream instead of per-packet
work.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelProfile, ber, phy_rate

# Per-MPDU delimiter + MAC header, counted for both airtime and error length.
MPDU_OVERHEAD_BYTES = 40
# Clock advance when every queue is empty (contention is out of scope).
IDLE_SLOT_S = 100e-6
_MIN_MPDU_BYTES = 1 + MPDU_OVERHEAD_BYTES

FIFO_BASELINE = "fifo"
AIRTIME_EQUALIZING = "airtime"


@dataclass(frozen=True)
class Overheads:
    """Fixed per-TXOP time overheads in microseconds."""

    preamble_us: float = 40.0
    sifs_us: float = 16.0
    block_ack_us: float = 32.0

    @property
    def total_s(self) -> float:
        return (self.preamble_us + self.sifs_us + self.block_ack_us) * 1e-6


@dataclass(frozen=True)
class AggregationPolicy:
    kind: str
    fifo_max_mpdus: int = 64

    def __post_init__(self):
        if self.kind not in (FIFO_BASELINE, AIRTIME_EQUALIZING):
            raise ValueError(f"unknown aggregation policy {self.kind!r}")
        if self.fifo_max_mpdus < 1:
            raise ValueError("fifo_max_mpdus must be >= 1")

    @classmethod
    def fifo(cls, max_mpdus: int = 64) -> "AggregationPolicy":
        return cls(FIFO_BASELINE, max_mpdus)

    @classmethod
    def airtime_equalizing(cls) -> "AggregationPolicy":
        return cls(AIRTIME_EQUALIZING)


_EMPTY_P = np.empty(0, dtype=np.int32)
_EMPTY_R = np.empty(0, dtype=np.int16)


class Burst(NamedTuple):
    """One stream's dequeued MPDU batch."""

    payloads: np.ndarray
    retries: np.ndarray
    payload_bytes: int
    onair_bytes: int  # payload plus per-MPDU overhead


_EMPTY_BURST = Burst(_EMPTY_P, _EMPTY_R, 0, 0)


class PacketQueue:
    """FIFO of MPDUs held as (payload, retries, cumulative-on-air) segments."""

    __slots__ = ("_segs", "_count", "_bytes")

    def __init__(self):
        self._segs = deque()  # [payloads, retries, csum, start]
        self._count = 0
        self._bytes = 0

    def __len__(self) -> int:
        return self._count

    @property
    def queued_bytes(self) -> int:
        return self._bytes

    def _push(self, payloads, retries, front: bool) -> int:
        n = payloads.size
        if n == 0:
            return 0
        if retries is None:
            retries = np.zeros(n, dtype=np.int16)
        csum = payloads.cumsum(dtype=np.int64)
        csum += np.arange(MPDU_OVERHEAD_BYTES, (n + 1) * MPDU_OVERHEAD_BYTES, MPDU_OVERHEAD_BYTES)
        seg = [payloads, retries, csum, 0]
        if front:
            self._segs.appendleft(seg)
        else:
            self._segs.append(seg)
        self._count += n
        payload_bytes = int(csum[-1]) - MPDU_OVERHEAD_BYTES * n
        self._bytes += payload_bytes
        return payload_bytes

    def push_back(self, payloads: np.ndarray, retries: np.ndarray | None = None) -> int:
        """Append a packet batch; returns its payload byte count."""
        return self._push(payloads, retries, front=False)

    def push_front(self, payloads: np.ndarray, retries: np.ndarray) -> int:
        return self._push(payloads, retries, front=True)

    def _burst(self, pieces, payload_bytes, onair_bytes, n) -> Burst:
        self._count -= n
        self._bytes -= payload_bytes
        if not pieces:
            return _EMPTY_BURST
        if len(pieces) == 1:
            p, r = pieces[0]
            return Burst(p, r, payload_bytes, onair_bytes)
        return Burst(
            np.concatenate([p for p, _ in pieces]),
            np.concatenate([r for _, r in pieces]),
            payload_bytes,
            onair_bytes,
        )

    def pop_count(self, n: int) -> Burst:
        """Dequeue up to n head-of-line packets."""
        need = min(n, self._count)
        if need == 0:
            return _EMPTY_BURST
        # Fast path: the head segment alone holds enough packets.
        seg = self._segs[0]
        payloads, retries, csum, start = seg
        if payloads.size - start > need:
            end = start + need
            base = int(csum[start - 1]) if start else 0
            onair = int(csum[end - 1]) - base
            seg[3] = end
            self._count -= need
            payload_bytes = onair - MPDU_OVERHEAD_BYTES * need
            self._bytes -= payload_bytes
            return Burst(payloads[start:end], retries[start:end], payload_bytes, onair)
        pieces = []
        payload_bytes = onair_bytes = taken = 0
        while need > 0:
            seg = self._segs[0]
            payloads, retries, csum, start = seg
            avail = payloads.size - start
            take = avail if avail < need else need
            end = start + take
            base = int(csum[start - 1]) if start else 0
            onair = int(csum[end - 1]) - base
            onair_bytes += onair
            payload_bytes += onair - MPDU_OVERHEAD_BYTES * take
            pieces.append((payloads[start:end], retries[start:end]))
            taken += take
            need -= take
            if take == avail:
                self._segs.popleft()
            else:
                seg[3] = end
        return self._burst(pieces, payload_bytes, onair_bytes, taken)

    def pop_budget(self, budget_bytes: float) -> Burst:
        """Dequeue whole packets while cumulative on-air bytes fit the budget."""
        segs = self._segs
        if not segs:
            return _EMPTY_BURST
        remaining = float(budget_bytes)
        # Fast path: the head segment alone settles the whole pop.
        seg = segs[0]
        payloads, retries, csum, start = seg
        base = int(csum[start - 1]) if start else 0
        idx = int(csum.searchsorted(base + remaining, side="right"))
        if idx < payloads.size:
            take = idx - start
            if take <= 0:
                return _EMPTY_BURST
            onair = int(csum[idx - 1]) - base
            seg[3] = idx
            self._count -= take
            payload_bytes = onair - MPDU_OVERHEAD_BYTES * take
            self._bytes -= payload_bytes
            return Burst(payloads[start:idx], retries[start:idx], payload_bytes, onair)
        pieces = []
        payload_bytes = onair_bytes = taken = 0
        while segs and remaining >= _MIN_MPDU_BYTES:
            seg = segs[0]
            payloads, retries, csum, start = seg
            base = int(csum[start - 1]) if start else 0
            idx = int(csum.searchsorted(base + remaining, side="right"))
            take = idx - start
            if take <= 0:
                break
            onair = int(csum[idx - 1]) - base
            remaining -= onair
            onair_bytes += onair
            payload_bytes += onair - MPDU_OVERHEAD_BYTES * take
            pieces.append((payloads[start:idx], retries[start:idx]))
            taken += take
            if idx == payloads.size:
                segs.popleft()
            else:
                seg[3] = idx
                break  # the next packet in this segment would exceed the budget
        return self._burst(pieces, payload_bytes, onair_bytes, taken)


@dataclass
class StreamReport:
    sta_id: int
    bytes_attempted: int  # payload bytes dequeued for this TXOP
    bytes_delivered: int  # payload bytes of non-errored MPDUs
    airtime_s: float  # on-air time incl. per-MPDU overhead bytes
    mpdu_errors: int


@dataclass
class TxopReport:
    per_stream: list[StreamReport]
    txop_duration_s: float
    wasted_airtime_s: float

    @property
    def delivered_bytes(self) -> int:
        return sum(s.bytes_delivered for s in self.per_stream)

    @property
    def idle(self) -> bool:
        return not self.per_stream


class ApState:
    """Mutable access-point state: per-station queues, clock, accounting."""

    def __init__(
        self,
        num_sta: int,
        n_antennas: int = 4,
        overheads: Overheads = Overheads(),
        retry_limit: int = 4,
    ):
        if num_sta < 1:
            raise ValueError("need at least one station")
        if num_sta > n_antennas:
            raise ValueError(
                f"num_sta ({num_sta}) must not exceed n_antennas ({n_antennas}): "
                "one spatial stream per station"
            )
        if retry_limit < 1:
            raise ValueError("retry_limit must be >= 1")
        self.num_sta = num_sta
        self.n_antennas = n_antennas
        self.overheads = overheads
        self.retry_limit = retry_limit
        self.clock = 0.0
        self.queues = [PacketQueue() for _ in range(num_sta)]
        self.enqueued_bytes = 0
        self.delivered_bytes = 0
        self.dropped_bytes = 0


def enqueue_arrivals(ap: ApState, generators, until: float) -> int:
    """Move every packet with arrival <= until into its station queue."""
    if until < ap.clock:
        raise ValueError("cannot enqueue into the past")
    total = 0
    queues = ap.queues
    for gen in generators:
        _, payloads = gen.take_until(until)
        if payloads.size:
            ap.enqueued_bytes += queues[gen.sta_id].push_back(payloads)
            total += payloads.size
    return total


class _UniformPool:
    """Blocked uniform draws; cheaper than one rng call per stream per TXOP."""

    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf = np.empty(0)
        self._pos = 0

    def take(self, n: int) -> np.ndarray:
        if self._pos + n > self._buf.size:
            self._buf = self._rng.random(max(8192, n))
            self._pos = 0
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out


class TxopContext:
    """Constants of one simulation run, hoisted out of the TXOP hot loop."""

    __slots__ = (
        "policy", "rates", "budgets", "bit_err", "err_coef",
        "pool", "overhead_s", "build_reports",
    )

    def __init__(self, ap, policy, frm, profile, rng, rates_mbps=None, build_reports=True):
        if rates_mbps is None:
            rates = [phy_rate(profile)] * ap.num_sta
        else:
            rates = [float(r) for r in rates_mbps]
            if len(rates) != ap.num_sta:
                raise ValueError("need one rate per station")
        if any(r <= 0 for r in rates):
            raise ValueError("per-stream rates must be positive")
        self.policy = policy
        self.rates = rates
        if policy.kind == AIRTIME_EQUALIZING:
            self.budgets = list(airtime_budgets(frm, rates))
        else:
            self.budgets = None
        self.bit_err = ber(profile)
        self.err_coef = (
            8.0 * math.log1p(-self.bit_err) if 0.0 < self.bit_err < 1.0 else None
        )
        self.pool = _UniformPool(rng)
        self.overhead_s = ap.overheads.total_s
        self.build_reports = build_reports


def fifo_aggregate(queue: PacketQueue, fifo_max_mpdus: int) -> Burst:
    """Head-of-line burst for one stream, capped at a fixed MPDU count."""
    return queue.pop_count(fifo_max_mpdus)


def airtime_budgets(frm: float, rates_mbps) -> np.ndarray:
    """Per-stream byte budgets proportional to PHY rate; full budgets equalize airtime."""
    rates = np.asarray(rates_mbps, dtype=np.float64)
    if frm <= 0:
        raise ValueError("system frame size must be > 0 bytes")
    if np.any(rates <= 0):
        raise ValueError("per-stream rates must be positive")
    return frm * rates / rates.sum()


def airtime_equalizing_aggregate(queues, frm: float, rates_mbps) -> list[Burst]:
    """Dequeue whole packets per stream up to rate-proportional byte budgets."""
    budgets = airtime_budgets(frm, rates_mbps)
    return [q.pop_budget(b) for q, b in zip(queues, budgets)]


def run_txop(
    ap: ApState,
    policy: AggregationPolicy,
    frm: float,
    profile: ChannelProfile,
    rng: np.random.Generator,
    rates_mbps=None,
    ctx: TxopContext | None = None,
) -> TxopReport:
    """Aggregate, transmit with independent per-MPDU errors, advance the clock."""
    if ctx is None:
        ctx = TxopContext(ap, policy, frm, profile, rng, rates_mbps)

    queues = ap.queues
    if not any(q._count for q in queues):
        ap.clock += IDLE_SLOT_S
        return TxopReport([], IDLE_SLOT_S, 0.0)

    if ctx.budgets is None:
        fifo_max = ctx.policy.fifo_max_mpdus
        bursts = [q.pop_count(fifo_max) for q in queues]
    else:
        budgets = ctx.budgets
        bursts = [q.pop_budget(budgets[i]) for i, q in enumerate(queues)]

    bit_err = ctx.bit_err
    err_coef = ctx.err_coef
    rates = ctx.rates
    retry_limit = ap.retry_limit

    airtimes = []
    reports = [] if ctx.build_reports else None
    delivered_total = 0
    for sta_id, burst in enumerate(bursts):
        n = burst.payloads.size
        if n == 0:
            airtimes.append(0.0)
            if reports is not None:
                reports.append(StreamReport(sta_id, 0, 0, 0.0, 0))
            continue
        airtime = burst.onair_bytes * 8.0 / (rates[sta_id] * 1e6)
        airtimes.append(airtime)

        n_err = 0
        delivered = burst.payload_bytes
        if bit_err > 0.0:
            payloads = burst.payloads
            if err_coef is None:  # bit_err >= 1: every MPDU fails
                err = np.ones(n, dtype=bool)
                n_err = n
            else:
                p = -np.expm1(err_coef * (payloads + MPDU_OVERHEAD_BYTES))
                err = ctx.pool.take(n) < p
                n_err = int(err.sum())
            if n_err:
                failed = payloads[err]
                delivered -= int(failed.sum())
                new_retries = burst.retries[err] + np.int16(1)
                keep = new_retries < retry_limit
                if keep.all():
                    ap.queues[sta_id].push_front(failed, new_retries)
                else:
                    if keep.any():
                        ap.queues[sta_id].push_front(failed[keep], new_retries[keep])
                    ap.dropped_bytes += int(failed[~keep].sum())

        delivered_total += delivered
        if reports is not None:
            reports.append(StreamReport(sta_id, burst.payload_bytes, delivered, airtime, n_err))

    ap.delivered_bytes += delivered_total
    max_air = max(airtimes)
    duration = max_air + ctx.overhead_s
    ap.clock += duration
    if reports is None:
        return None  # caller opted out of report construction (ctx.build_reports)
    wasted = max(0.0, max_air * len(airtimes) - math.fsum(airtimes))
    return TxopReport(reports, duration, wasted)


def measure_throughput(
    ap: ApState,
    generators,
    policy: AggregationPolicy,
    frm: float,
    profile: ChannelProfile,
    duration_s: float,
    seed,
    on_txop=None,
) -> float:
    """Run arrivals + TXOPs for `duration_s` of simulated time; delivered Mbps.

    Deterministic for fixed (policy, frm, profile, duration, seed) and fixed
    generator seeds.  The divisor is the actual elapsed time (the last TXOP
    may overshoot the requested duration), so the aggregate-PHY capacity
    bound holds exactly.
    """
    if not duration_s > 0.0:
        raise ValueError("duration must be > 0 s")
    rng = np.random.default_rng(seed)
    ctx = TxopContext(ap, policy, frm, profile, rng, build_reports=on_txop is not None)
    t0 = ap.clock
    end = t0 + duration_s
    delivered0 = ap.delivered_bytes
    while ap.clock < end:
        enqueue_arrivals(ap, generators, ap.clock)
        report = run_txop(ap, policy, frm, profile, rng, ctx=ctx)
        if on_txop is not None:
            on_txop(report)
    elapsed = ap.clock - t0
    return (ap.delivered_bytes - delivered0) * 8.0 / elapsed / 1e6
