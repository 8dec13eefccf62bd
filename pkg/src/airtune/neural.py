"""Single-input sigmoid perceptron (1 input, 4 hidden, 1 output).

Three passes:

* forward  - predict normalized throughput from normalized frame size,
* backward - one online delta-rule weight update toward a target,
* input gradient - with weights frozen, propagate local gradients back to
  the input to obtain d(prediction)/d(input), the signal the frame-size
  controller climbs.

The net is deliberately plain Python floats: at 13 parameters that is
faster than array machinery and keeps training bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HIDDEN = 4
N_PARAMS = 3 * HIDDEN + 1  # input weights, hidden biases, output weights, output bias


class StaleCacheError(RuntimeError):
    """Raised when a pass needs activations from a forward call that never happened
    or that predates the latest weight mutation."""


def sigmoid(v: float) -> float:
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def sigmoid_prime(v: float) -> float:
    s = sigmoid(v)
    return s * (1.0 - s)


@dataclass(frozen=True)
class TrainingPattern:
    """One normalized (frame size, measured throughput) sample."""

    frm_norm: float
    thr_norm: float


@dataclass
class TrainResult:
    final_mse: float
    epochs_used: int
    converged: bool


class Mlp:
    """1-4-1 sigmoid network with cached activations from the latest forward pass."""

    __slots__ = ("w1", "b1", "w2", "b2", "eta", "_x", "_v1", "_y1", "_v2", "_y2", "_fresh")

    def __init__(self, w1, b1, w2, b2, eta: float = 0.5):
        if len(w1) != HIDDEN or len(b1) != HIDDEN or len(w2) != HIDDEN:
            raise ValueError(f"expected exactly {HIDDEN} hidden neurons")
        self.w1 = [float(v) for v in w1]
        self.b1 = [float(v) for v in b1]
        self.w2 = [float(v) for v in w2]
        self.b2 = float(b2)
        self.eta = eta
        self._fresh = False

    @classmethod
    def random(cls, seed, eta: float = 0.5) -> "Mlp":
        """Seeded random initialization with hidden thresholds spread over [0, 1].

        Hidden slopes are drawn in +/-[2, 6] and each unit's threshold is
        stratified across the unit input range, so the four units respond
        distinctly from the start; output weights and all the fine structure
        stay small-uniform.  A plain uniform [-0.5, 0.5] draw leaves every
        hidden unit in its linear regime over a unit-box input, and online
        training then cannot break their symmetry within the epoch budget.
        """
        rng = np.random.default_rng(seed)
        slopes = rng.uniform(2.0, 6.0, HIDDEN) * rng.choice([-1.0, 1.0], HIDDEN)
        centers = (np.arange(HIDDEN) + rng.uniform(0.0, 1.0, HIDDEN)) / HIDDEN
        w2 = rng.uniform(-0.5, 0.5, HIDDEN)
        b2 = rng.uniform(-0.5, 0.5)
        return cls(slopes, -slopes * centers, w2, b2, eta=eta)

    # -- passes ------------------------------------------------------------

    def forward(self, frm_norm: float) -> float:
        # Hand-unrolled over the four hidden units: this pair of passes runs
        # tens of millions of times per experiment.
        x = float(frm_norm)
        w1 = self.w1
        b1 = self.b1
        w2 = self.w2
        s = sigmoid
        va = w1[0] * x + b1[0]
        vb = w1[1] * x + b1[1]
        vc = w1[2] * x + b1[2]
        vd = w1[3] * x + b1[3]
        ya = s(va)
        yb = s(vb)
        yc = s(vc)
        yd = s(vd)
        v2 = w2[0] * ya + w2[1] * yb + w2[2] * yc + w2[3] * yd + self.b2
        y2 = s(v2)
        self._x = x
        self._v1 = (va, vb, vc, vd)
        self._y1 = (ya, yb, yc, yd)
        self._v2 = v2
        self._y2 = y2
        self._fresh = True
        return y2

    def _require_fresh(self):
        if not self._fresh:
            raise StaleCacheError("forward pass required before backward/gradient passes")

    def backward(self, target_norm: float, eta: float | None = None) -> float:
        """One online update toward target; returns the squared error before the update."""
        self._require_fresh()
        step = self.eta if eta is None else eta
        y2 = self._y2
        e = float(target_norm) - y2
        d2 = e * y2 * (1.0 - y2)
        x = self._x
        w1 = self.w1
        b1 = self.b1
        w2 = self.w2
        ya, yb, yc, yd = self._y1
        sd2 = step * d2
        da = d2 * w2[0] * ya * (1.0 - ya) * step
        db = d2 * w2[1] * yb * (1.0 - yb) * step
        dc = d2 * w2[2] * yc * (1.0 - yc) * step
        dd = d2 * w2[3] * yd * (1.0 - yd) * step
        w2[0] += sd2 * ya
        w2[1] += sd2 * yb
        w2[2] += sd2 * yc
        w2[3] += sd2 * yd
        w1[0] += da * x
        w1[1] += db * x
        w1[2] += dc * x
        w1[3] += dd * x
        b1[0] += da
        b1[1] += db
        b1[2] += dc
        b1[3] += dd
        self.b2 += sd2
        self._fresh = False  # weights moved; cached activations are stale
        return e * e

    def input_gradient(self) -> float:
        """d(prediction)/d(input) via per-neuron local gradients; mutates nothing."""
        self._require_fresh()
        lam2 = self._y2 * (1.0 - self._y2)
        total = 0.0
        for j in range(HIDDEN):
            y = self._y1[j]
            lam1 = lam2 * self.w2[j] * (y * (1.0 - y))
            total += lam1 * self.w1[j]
        return total

    def input_gradient_factored(self) -> float:
        """Same derivative with the output local gradient factored out of the sum.

        Algebraically identical to `input_gradient`; kept as an independent
        form for cross-checking.
        """
        self._require_fresh()
        lam2 = self._y2 * (1.0 - self._y2)
        acc = 0.0
        for j in range(HIDDEN):
            y = self._y1[j]
            acc += self.w2[j] * (y * (1.0 - y)) * self.w1[j]
        return lam2 * acc

    # -- persistence and snapshots ------------------------------------------

    def snapshot(self) -> tuple:
        return (list(self.w1), list(self.b1), list(self.w2), self.b2)

    def restore(self, snap: tuple) -> None:
        w1, b1, w2, b2 = snap
        self.w1 = list(w1)
        self.b1 = list(b1)
        self.w2 = list(w2)
        self.b2 = b2
        self._fresh = False

    def save_weights(self, path) -> None:
        """Flat text record, one value per line: input weights, hidden biases,
        output weights, output bias."""
        values = self.w1 + self.b1 + self.w2 + [self.b2]
        with open(path, "w", encoding="ascii") as fh:
            for v in values:
                fh.write(f"{v!r}\n")

    @classmethod
    def load_weights(cls, path, eta: float = 0.5) -> "Mlp":
        with open(path, encoding="ascii") as fh:
            values = [float(line) for line in fh if line.strip()]
        if len(values) != N_PARAMS:
            raise ValueError(f"expected {N_PARAMS} values in weight record, got {len(values)}")
        return cls(values[0:4], values[4:8], values[8:12], values[12], eta=eta)


def batch_mse(mlp: Mlp, frm_norms: np.ndarray, thr_norms: np.ndarray) -> float:
    """Mean squared error of the current weights over a pattern set.

    Vectorized forward-only evaluation; does not touch the activation cache.
    """
    v1 = np.outer(frm_norms, mlp.w1) + mlp.b1
    np.clip(v1, -500.0, 500.0, out=v1)
    y1 = 1.0 / (1.0 + np.exp(-v1))
    v2 = y1 @ mlp.w2 + mlp.b2
    np.clip(v2, -500.0, 500.0, out=v2)
    y2 = 1.0 / (1.0 + np.exp(-v2))
    d = thr_norms - y2
    return float(d @ d) / len(frm_norms)


def train(
    mlp: Mlp,
    patterns,
    shuffle_seed,
    mse_threshold: float = 1e-5,
    max_epochs: int = 1000,
    eta_grow: float = 1.05,
    eta_shrink: float = 0.5,
    reject_tol: float = 1e-4,
    eta_bounds: tuple[float, float] = (1e-4, 2.0),
    stagnation_patience: int | None = None,
) -> TrainResult:
    """Shuffled online epochs with a bold-driver learning rate.

    Per epoch: shuffle, one delta-rule update per pattern, then evaluate the
    epoch MSE as the mean e^2 over all patterns at the resulting weights.
    An improving epoch grows the rate 5%; an epoch that worsens MSE by a
    relative factor above `reject_tol` is rolled back and the rate halves,
    so the tracked MSE always describes the weights actually kept and the
    rate can anneal as far down as the error scale demands.  Stops when
    that MSE falls below `mse_threshold` or at `max_epochs`.

    `stagnation_patience`, when set, additionally stops after that many
    consecutive epochs that fail to improve MSE by at least 0.1% relative;
    callers that re-train a warm model every control round use it to skip
    epochs that cannot help.
    """
    patterns = list(patterns)
    if not patterns:
        raise ValueError("training needs at least one pattern")
    lo, hi = eta_bounds
    eta = min(max(mlp.eta, lo), hi)
    rng = np.random.default_rng(shuffle_seed)
    n = len(patterns)
    order = np.arange(n)
    xs = np.array([p.frm_norm for p in patterns])
    ts = np.array([p.thr_norm for p in patterns])
    prev_mse = batch_mse(mlp, xs, ts)
    epochs = 0
    flat_run = 0
    for _ in range(max_epochs):
        epochs += 1
        snap = mlp.snapshot()
        rng.shuffle(order)
        for i in order:
            p = patterns[i]
            mlp.forward(p.frm_norm)
            mlp.backward(p.thr_norm, eta)
        mse = batch_mse(mlp, xs, ts)
        if mse < prev_mse:
            flat_run = 0 if mse < prev_mse * 0.999 else flat_run + 1
            eta = min(eta * eta_grow, hi)
            prev_mse = mse
        elif mse > prev_mse * (1.0 + reject_tol):
            mlp.restore(snap)
            eta = max(eta * eta_shrink, lo)
            flat_run += 1
        else:
            prev_mse = mse
            flat_run += 1
        if prev_mse < mse_threshold:
            return TrainResult(prev_mse, epochs, True)
        if stagnation_patience is not None and flat_run >= stagnation_patience:
            break
    return TrainResult(prev_mse, epochs, False)


@dataclass(frozen=True)
class Normalizer:
    """Maps raw (bytes, Mbps) samples into the sigmoid-friendly unit box.

    Throughput is squeezed into [margin, 1 - margin] so targets stay away
    from sigmoid saturation.
    """

    frm_min: float
    frm_max: float
    thr_max: float
    margin: float = 0.05

    def __post_init__(self):
        if not self.frm_min < self.frm_max:
            raise ValueError("frm_min must be < frm_max")
        if not self.thr_max > 0:
            raise ValueError("thr_max must be > 0")
        if not 0.0 <= self.margin < 0.5:
            raise ValueError("margin must lie in [0, 0.5)")

    def frm_to_norm(self, frm: float) -> float:
        return (frm - self.frm_min) / (self.frm_max - self.frm_min)

    def thr_to_norm(self, thr_mbps: float) -> float:
        if thr_mbps > self.thr_max:
            raise ValueError(f"throughput {thr_mbps} Mbps exceeds thr_max {self.thr_max}")
        return self.margin + (1.0 - 2.0 * self.margin) * thr_mbps / self.thr_max

    def normalize(self, frm: float, thr_mbps: float) -> TrainingPattern:
        return TrainingPattern(self.frm_to_norm(frm), self.thr_to_norm(thr_mbps))

    @property
    def gradient_scale(self) -> float:
        """Raw-units gradient per unit of normalized gradient (Mbps per byte)."""
        return (self.thr_max / (1.0 - 2.0 * self.margin)) / (self.frm_max - self.frm_min)

    def gradient_to_raw(self, g_norm: float) -> float:
        return g_norm * self.gradient_scale
