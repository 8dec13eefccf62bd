"""Online frame-size optimization loop.

Each round: probe the throughput response around the current frame size,
train the surrogate network on the normalized samples, read the surrogate's
input gradient at the current operating point, denormalize it, and take one
gradient-ascent step (clamped to bounds).

The loop is generic over the measurement callable, so it drives either the
MAC simulator or a synthetic objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .neural import Mlp, Normalizer, train

# Step gain in normalized coordinates used to derive the default raw
# adjustment rate: one unit of normalized gradient moves the frame size by
# this fraction of the bounds range.
DEFAULT_STEP_GAIN = 0.05
DEFAULT_PROBE_SPREAD = 0.10
DEFAULT_SAMPLES_PER_ROUND = 50


def default_mu(frm_min: float, frm_max: float, thr_max: float, margin: float = 0.05) -> float:
    """Raw adjustment rate (bytes per Mbps-per-byte) equivalent to stepping
    DEFAULT_STEP_GAIN per unit gradient in normalized coordinates."""
    span = frm_max - frm_min
    return DEFAULT_STEP_GAIN * span * span * (1.0 - 2.0 * margin) / thr_max


@dataclass
class RoundRecord:
    round: int
    frm: float  # operating point the round measured / stepped from
    thr_mbps: float  # measured throughput at the probe nearest frm
    gradient: float  # denormalized gradient, Mbps per byte
    mse: float
    epochs: int


class ControllerState:
    """Current frame size, adjustment rate, bounds, and per-round history.

    `step_cap` bounds one round's movement (bytes); the surrogate's local
    slope can be steep enough that an uncapped mu * gradient step would
    jump across the whole response curve.
    """

    def __init__(
        self,
        frm: float,
        mu: float,
        frm_bounds: tuple[float, float],
        step_cap: float | None = None,
    ):
        lo, hi = frm_bounds
        if not lo < hi:
            raise ValueError("frm_bounds must satisfy min < max")
        self.frm_bounds = (float(lo), float(hi))
        self.frm = min(max(float(frm), lo), hi)
        self.mu = float(mu)
        self.step_cap = step_cap
        self.history: list[RoundRecord] = []

    def step(self, gradient: float) -> float:
        """frm <- clamp(frm + mu * gradient); returns the new frame size."""
        if not math.isfinite(gradient):
            raise ValueError("gradient must be finite")
        delta = self.mu * gradient
        if self.step_cap is not None:
            delta = min(max(delta, -self.step_cap), self.step_cap)
        lo, hi = self.frm_bounds
        self.frm = min(max(self.frm + delta, lo), hi)
        return self.frm

    def record(self, rec: RoundRecord) -> None:
        if self.history and rec.round <= self.history[-1].round:
            raise ValueError("history rounds must be strictly increasing")
        self.history.append(rec)


def probe_points(
    center: float, bounds: tuple[float, float], n: int, spread: float
) -> np.ndarray:
    """n probe frame sizes spanning center +/- spread * (bounds range), clamped."""
    if n < 2:
        raise ValueError("need at least 2 probes to expose local curvature")
    lo, hi = bounds
    half = spread * (hi - lo)
    return np.linspace(max(lo, center - half), min(hi, center + half), n)


# Fraction of the probe window kept clear of the gradient evaluation point:
# a sigmoid surrogate's fitted slope pinches to zero at the edge of its
# training window, so the slope is read no closer than this to an edge.
EDGE_GUARD_FRAC = 0.1


def gradient_eval_point(frm: float, window_lo: float, window_hi: float) -> float:
    """Where to read the surrogate's slope for an operating point `frm`."""
    guard = EDGE_GUARD_FRAC * (window_hi - window_lo)
    return min(max(frm, window_lo + guard), window_hi - guard)


@dataclass
class LoopParams:
    frm_min: float
    frm_max: float
    thr_max: float  # normalization ceiling, Mbps
    mu: float | None = None  # default derived from bounds/thr_max
    start_frm: float | None = None  # default frm_min
    probe_spread: float = DEFAULT_PROBE_SPREAD
    samples_per_round: int = DEFAULT_SAMPLES_PER_ROUND
    margin: float = 0.05
    # One round moves the frame size at most this fraction of the range.
    step_cap_frac: float = 0.1
    # Variable adjustment rate: the working mu halves when the gradient
    # sign flips (the step overshot a maximum) and regrows by this factor
    # on sign-consistent rounds, never above the configured mu.
    mu_shrink: float = 0.5
    mu_regrow: float = 1.25
    mu_floor_frac: float = 0.01
    # Optional early stop: break once the frame size has moved less than
    # stable_tol * range for stable_patience consecutive rounds.
    stable_tol: float | None = None
    stable_patience: int = 8
    # In-loop training budget: per-round re-training of the warm surrogate
    # gives up after this many consecutive low-progress epochs and after
    # train_max_epochs.  When the warm fit stays above refit_mse, a freshly
    # initialized candidate is trained on the same samples and replaces the
    # warm net if it fits better (escapes structural lock-in of a net shaped
    # by earlier rounds' response shapes).
    train_stagnation_patience: int | None = 15
    train_max_epochs: int = 300
    refit_mse: float = 1e-3
    # Throughput spans below this fraction of thr_max are treated as flat:
    # the window's samples are normalized against the floor instead of
    # their own tiny span, so noise is not amplified into fake gradients.
    flat_span_frac: float = 0.02


@dataclass
class LoopResult:
    final_frm: float
    history: list[RoundRecord]
    rounds_run: int


def run_online_loop(
    measure,
    params: LoopParams,
    rounds: int,
    init_seed,
    shuffle_seed,
    mlp: Mlp | None = None,
) -> LoopResult:
    """Drive the collect/train/step cycle for up to `rounds` rounds.

    `measure(frm, round_idx, probe_idx) -> Mbps` supplies throughput samples;
    it owns any seeding of the underlying measurement.  The surrogate
    network persists across rounds (warm start) and re-trains on each
    round's fresh sample set; older samples are discarded.

    Each round's samples are normalized in window coordinates: frame sizes
    against the probe window and throughput as the excess over the window
    minimum.  That keeps the surrogate's inputs and targets spanning the
    unit box whatever sliver of the global range a window covers, and the
    offset drops out of the denormalized gradient.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    mu = params.mu if params.mu is not None else default_mu(
        params.frm_min, params.frm_max, params.thr_max, params.margin
    )
    span = params.frm_max - params.frm_min
    state = ControllerState(
        params.start_frm if params.start_frm is not None else params.frm_min,
        mu,
        (params.frm_min, params.frm_max),
        step_cap=params.step_cap_frac * span if params.step_cap_frac else None,
    )
    if mlp is None:
        mlp = Mlp.random(init_seed)
    round_seeds = np.random.SeedSequence(shuffle_seed).generate_state(2 * rounds)

    stable_run = 0
    rounds_run = 0
    working_mu = mu
    last_gradient = 0.0
    for r in range(rounds):
        rounds_run += 1
        probes = probe_points(
            state.frm, state.frm_bounds, params.samples_per_round, params.probe_spread
        )
        thrs = [float(measure(float(f), r, k)) for k, f in enumerate(probes)]
        thr_floor = min(thrs)
        thr_span = max(max(thrs) - thr_floor, params.flat_span_frac * params.thr_max)
        norm = Normalizer(float(probes[0]), float(probes[-1]), thr_span, params.margin)
        patterns = [norm.normalize(float(f), t - thr_floor) for f, t in zip(probes, thrs)]
        train_kwargs = dict(
            shuffle_seed=round_seeds[2 * r],
            stagnation_patience=params.train_stagnation_patience,
            max_epochs=params.train_max_epochs,
        )
        result = train(mlp, patterns, **train_kwargs)
        if result.final_mse > params.refit_mse:
            fresh = Mlp.random(round_seeds[2 * r + 1])
            fresh_result = train(fresh, patterns, **train_kwargs)
            if fresh_result.final_mse < result.final_mse:
                mlp, result = fresh, fresh_result
        eval_frm = gradient_eval_point(state.frm, float(probes[0]), float(probes[-1]))
        mlp.forward(norm.frm_to_norm(eval_frm))
        g_raw = norm.gradient_to_raw(mlp.input_gradient())
        nearest = int(np.argmin(np.abs(probes - state.frm)))
        state.record(
            RoundRecord(r, state.frm, thrs[nearest], g_raw, result.final_mse, result.epochs_used)
        )
        if g_raw * last_gradient < 0.0:
            working_mu = max(working_mu * params.mu_shrink, mu * params.mu_floor_frac)
        elif g_raw * last_gradient > 0.0:
            working_mu = min(working_mu * params.mu_regrow, mu)
        last_gradient = g_raw
        state.mu = working_mu
        before = state.frm
        state.step(g_raw)
        if params.stable_tol is not None:
            if abs(state.frm - before) < params.stable_tol * span:
                stable_run += 1
                if stable_run >= params.stable_patience:
                    break
            else:
                stable_run = 0
    return LoopResult(state.frm, state.history, rounds_run)
