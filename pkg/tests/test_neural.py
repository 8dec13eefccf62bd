"""Network tests: passes, input gradient vs finite differences, training."""

import math

import numpy as np
import pytest

from airtune.neural import (
    Mlp,
    Normalizer,
    StaleCacheError,
    TrainingPattern,
    batch_mse,
    sigmoid,
    sigmoid_prime,
    train,
)


def fd_gradient(mlp, x, h=1e-5):
    return (mlp.forward(x + h) - mlp.forward(x - h)) / (2.0 * h)


def teacher_targets(xs):
    """Monotone map realizable by a 1-4-1 net (all-positive teacher weights)."""
    w1 = np.array([3.0, 4.0, 5.0, 3.5])
    b1 = np.array([-0.6, -1.6, -3.0, -2.8])
    w2 = np.array([1.2, 0.9, 1.1, 0.8])
    y1 = 1.0 / (1.0 + np.exp(-(np.outer(xs, w1) + b1)))
    return 1.0 / (1.0 + np.exp(-(y1 @ w2 - 2.0)))


class TestSigmoid:
    def test_symmetry_point(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid_prime(0.0) == 0.25

    def test_mirror_identity(self):
        assert sigmoid(3.7) + sigmoid(-3.7) == pytest.approx(1.0, abs=1e-15)

    def test_prime_at_half(self):
        s = sigmoid(0.5)  # independent evaluation of the closed form
        assert sigmoid_prime(0.5) == pytest.approx(s * (1.0 - s), rel=1e-15)
        assert sigmoid_prime(0.5) == pytest.approx(0.23500, abs=1e-5)

    def test_extreme_arguments_stable(self):
        assert sigmoid(800.0) == 1.0
        assert sigmoid(-800.0) == 0.0


class TestForward:
    def test_all_zero_weights(self):
        mlp = Mlp([0.0] * 4, [0.0] * 4, [0.0] * 4, 0.0)
        out = mlp.forward(0.3)
        assert out == 0.5
        assert mlp._y1 == (0.5, 0.5, 0.5, 0.5)
        assert mlp._v2 == 0.0

    def test_single_active_neuron(self):
        # Hidden outputs are all 0.5 at zero input; only the first output
        # weight is nonzero, so v2 = 0.5 and the output is sigmoid(0.5).
        mlp = Mlp([1, 0, 0, 0], [0.0] * 4, [1, 0, 0, 0], 0.0)
        assert mlp.forward(0.0) == pytest.approx(sigmoid(0.5), rel=1e-15)
        assert mlp.forward(0.0) == pytest.approx(0.62246, abs=1e-5)

    def test_output_always_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            d = rng.uniform(-5, 5, 13)
            mlp = Mlp(d[0:4], d[4:8], d[8:12], d[12])
            out = mlp.forward(float(rng.uniform(-2, 2)))
            assert 0.0 < out < 1.0

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            Mlp([0.0] * 3, [0.0] * 4, [0.0] * 4, 0.0)


class TestBackward:
    def test_target_equals_output_no_change(self):
        mlp = Mlp.random(0)
        out = mlp.forward(0.4)
        snap = mlp.snapshot()
        e2 = mlp.backward(out)
        assert e2 == 0.0
        assert mlp.snapshot() == snap

    def test_repeated_updates_decrease_error(self):
        mlp = Mlp.random(3)
        errors = []
        for _ in range(10):
            mlp.forward(0.3)
            errors.append(mlp.backward(0.9, 0.5))
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_positive_error_raises_output_bias(self):
        mlp = Mlp.random(1)
        out = mlp.forward(0.5)
        b2_before = mlp.b2
        mlp.backward(out + 0.2)
        assert mlp.b2 > b2_before

    def test_requires_fresh_forward(self):
        mlp = Mlp.random(2)
        with pytest.raises(StaleCacheError):
            mlp.backward(0.5)
        mlp.forward(0.1)
        mlp.backward(0.5)
        with pytest.raises(StaleCacheError):
            mlp.backward(0.5)  # cache invalidated by the weight update


class TestInputGradient:
    def test_zero_output_weights_zero_gradient(self):
        mlp = Mlp([0.3, -0.4, 0.1, 0.7], [0.1, 0.2, -0.1, 0.0], [0.0] * 4, 0.2)
        mlp.forward(0.3)
        assert mlp.input_gradient() == 0.0
        assert mlp.input_gradient_factored() == 0.0

    def test_single_neuron_hand_value(self):
        # lam2 = sigmoid'(0.5), lam1_1 = lam2 * 1 * sigmoid'(0) = lam2 / 4,
        # gradient = lam1_1 * w1_1.
        mlp = Mlp([1, 0, 0, 0], [0.0] * 4, [1, 0, 0, 0], 0.0)
        mlp.forward(0.0)
        expected = sigmoid_prime(0.5) * 0.25
        got = mlp.input_gradient()
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(0.05875, abs=1e-5)
        mlp.forward(0.0)
        assert fd_gradient(mlp, 0.0) == pytest.approx(expected, rel=1e-6)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(500):
            d = rng.uniform(-2, 2, 13)
            mlp = Mlp(d[0:4], d[4:8], d[8:12], d[12])
            x = float(rng.uniform(-0.5, 1.5))
            mlp.forward(x)
            analytic = mlp.input_gradient()
            fd = fd_gradient(mlp, x)
            worst = max(worst, abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6))
        assert worst < 1e-3

    def test_two_forms_agree_to_ulp_scale(self):
        # The per-neuron-sum and factored forms may cancel internally, so the
        # drift budget is ulps of the term-magnitude scale.
        rng = np.random.default_rng(8)
        for _ in range(1000):
            d = rng.uniform(-2, 2, 13)
            mlp = Mlp(d[0:4], d[4:8], d[8:12], d[12])
            x = float(rng.uniform(-0.5, 1.5))
            y2 = mlp.forward(x)
            a = mlp.input_gradient()
            b = mlp.input_gradient_factored()
            lam2 = y2 * (1 - y2)
            scale = sum(
                abs(lam2 * mlp.w2[j] * sigmoid_prime(mlp.w1[j] * x + mlp.b1[j]) * mlp.w1[j])
                for j in range(4)
            )
            assert abs(a - b) <= 10 * math.ulp(max(scale, 1e-300))

    def test_purity(self):
        mlp = Mlp.random(11)
        out1 = mlp.forward(0.37)
        g1 = mlp.input_gradient()
        g2 = mlp.input_gradient()
        out2 = mlp.forward(0.37)
        assert out1 == out2
        assert g1 == g2

    def test_requires_fresh_cache(self):
        mlp = Mlp.random(12)
        with pytest.raises(StaleCacheError):
            mlp.input_gradient()
        mlp.forward(0.2)
        mlp.backward(0.6)
        with pytest.raises(StaleCacheError):
            mlp.input_gradient()


class TestTrain:
    def test_already_fitted_converges_in_one_epoch(self):
        mlp = Mlp([0.0] * 4, [0.0] * 4, [0.0] * 4, 0.0)  # constant 0.5 output
        patterns = [TrainingPattern(0.5, 0.5)] * 10
        result = train(mlp, patterns, shuffle_seed=0)
        assert result.converged
        assert result.epochs_used == 1
        assert result.final_mse == 0.0

    def test_empty_pattern_set_rejected(self):
        with pytest.raises(ValueError):
            train(Mlp.random(0), [], shuffle_seed=0)

    def test_monotone_teacher_map_converges(self):
        xs = np.linspace(0, 1, 50)
        ts = teacher_targets(xs)
        patterns = [TrainingPattern(float(a), float(b)) for a, b in zip(xs, ts)]
        converged = 0
        for seed in range(5):
            result = train(Mlp.random(100 + seed), patterns, shuffle_seed=seed)
            converged += result.converged
        assert converged >= 4

    def test_concave_bump_reaches_loose_fit(self):
        # 4 f (1-f) bump: the 1e-5 threshold is not reachable but the fit
        # must land below 1e-3.
        xs = np.linspace(0, 1, 50)
        patterns = [
            TrainingPattern(float(x), 0.1 + 0.8 * 4 * float(x) * (1 - float(x)))
            for x in xs
        ]
        result = train(Mlp.random(5), patterns, shuffle_seed=9)
        assert result.final_mse < 1e-3

    def test_deterministic_for_fixed_shuffle_seed(self):
        xs = np.linspace(0, 1, 30)
        ts = teacher_targets(xs)
        patterns = [TrainingPattern(float(a), float(b)) for a, b in zip(xs, ts)]
        snaps = []
        for _ in range(2):
            mlp = Mlp.random(42)
            train(mlp, patterns, shuffle_seed=7, max_epochs=50)
            snaps.append(mlp.snapshot())
        assert snaps[0] == snaps[1]

    def test_stagnation_stop_cuts_epochs(self):
        xs = np.linspace(0, 1, 50)
        patterns = [TrainingPattern(float(x), 0.1 + 0.8 * float(x)) for x in xs]
        full = train(Mlp.random(3), patterns, shuffle_seed=1)
        cut = train(Mlp.random(3), patterns, shuffle_seed=1, stagnation_patience=20)
        assert cut.epochs_used < full.epochs_used

    def test_batch_mse_matches_scalar_forward(self):
        mlp = Mlp.random(17)
        xs = np.linspace(0, 1, 20)
        ts = np.linspace(0.2, 0.8, 20)
        scalar = np.mean([(t - mlp.forward(float(x))) ** 2 for x, t in zip(xs, ts)])
        assert batch_mse(mlp, xs, ts) == pytest.approx(float(scalar), rel=1e-12)


class TestNormalizer:
    def test_frm_endpoints(self):
        norm = Normalizer(1000.0, 5000.0, 800.0)
        assert norm.frm_to_norm(1000.0) == 0.0
        assert norm.frm_to_norm(5000.0) == 1.0

    def test_zero_throughput_maps_to_margin(self):
        norm = Normalizer(0.0, 1.0, 100.0, margin=0.05)
        assert norm.thr_to_norm(0.0) == 0.05

    def test_max_throughput_maps_below_one(self):
        norm = Normalizer(0.0, 1.0, 100.0, margin=0.05)
        assert norm.thr_to_norm(100.0) == pytest.approx(0.95)

    def test_out_of_range_rejected(self):
        norm = Normalizer(0.0, 1.0, 100.0)
        with pytest.raises(ValueError):
            norm.thr_to_norm(100.001)

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            Normalizer(5.0, 5.0, 100.0)
        with pytest.raises(ValueError):
            Normalizer(0.0, 1.0, 0.0)

    def test_gradient_chain_rule_in_raw_units(self):
        # Denormalized network gradient must match finite differences taken
        # in raw (bytes, Mbps) coordinates.
        norm = Normalizer(65536.0, 4194304.0, 780.0)
        mlp = Mlp.random(23)

        def raw_predict(frm):
            out = mlp.forward(norm.frm_to_norm(frm))
            return (out - norm.margin) / (1.0 - 2.0 * norm.margin) * norm.thr_max

        frm = 1_500_000.0
        mlp.forward(norm.frm_to_norm(frm))
        analytic = norm.gradient_to_raw(mlp.input_gradient())
        h = 50.0  # bytes
        fd = (raw_predict(frm + h) - raw_predict(frm - h)) / (2 * h)
        assert analytic == pytest.approx(fd, rel=1e-3)


class TestPersistence:
    def test_save_load_roundtrip_exact(self, tmp_path):
        mlp = Mlp.random(31)
        path = tmp_path / "weights.txt"
        mlp.save_weights(path)
        loaded = Mlp.load_weights(path)
        assert loaded.snapshot() == mlp.snapshot()

    def test_load_rejects_wrong_length(self, tmp_path):
        path = tmp_path / "weights.txt"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(ValueError):
            Mlp.load_weights(path)

    def test_flat_record_order(self, tmp_path):
        mlp = Mlp([1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12], 13.0)
        path = tmp_path / "weights.txt"
        mlp.save_weights(path)
        values = [float(v) for v in path.read_text().split()]
        assert values == list(range(1, 14))
