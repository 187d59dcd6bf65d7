import numpy as np
import numpy.testing as npt
import pytest

from mrlearn.errors import DimensionError, StateError
from mrlearn.nn import (
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool1D,
    MaxPool2D,
    Network,
    NetworkSpec,
    TrainConfig,
    backward,
    build_preset,
    cross_entropy,
    evaluate,
    forward,
    init_weights,
    load_network,
    save_network,
    scaled_relu,
    sgd_step,
    softmax,
    spectrogram_cnn_spec,
    waveform_cnn_spec,
)


def total_loss(network, x, y, weight_decay, relu_slope, dropout_seed=None):
    rng = np.random.default_rng(dropout_seed) if dropout_seed is not None else None
    mode = "train" if dropout_seed is not None else "eval"
    state = forward(network, x, mode, relu_slope, rng=rng)
    loss = cross_entropy(state.logits, y)
    if weight_decay:
        for p in network.params:
            if p is not None:
                loss += 0.5 * weight_decay * float((p["w"] ** 2).sum())
    return loss


def _activation_signature(network, x, relu_slope, dropout_seed):
    """Kink detector: rectifier sign patterns and pooling argmax choices.
    Central differences only estimate the analytic gradient while these
    stay constant across the +/- h evaluations."""
    rng = np.random.default_rng(dropout_seed) if dropout_seed is not None else None
    mode = "train" if dropout_seed is not None else "eval"
    state = forward(network, x, mode, relu_slope, rng=rng)
    parts = []
    for layer, (cache, pre_activation) in zip(network.spec.layers, state.caches):
        if pre_activation is not None:
            parts.append((pre_activation > 0).tobytes())
        if layer.kind in ("maxpool1d", "maxpool2d"):
            parts.append(cache[1].tobytes())  # window argmax indices
    return tuple(parts)


def finite_difference_check(
    spec, x, y, weight_decay=0.0, relu_slope=1.0, dropout_seed=None, n_coords=20, h=1e-5, seed=3
):
    """Central-difference oracle: compare analytic gradients against
    (loss(w+h) - loss(w-h)) / 2h on randomly sampled coordinates.

    Coordinates whose +/- h perturbation crosses a ReLU kink or flips a
    pooling argmax are re-sampled: the difference quotient does not
    approximate the (one-sided) gradient there.
    """
    net = init_weights(spec, seed=seed)
    rng_fwd = np.random.default_rng(dropout_seed) if dropout_seed is not None else None
    mode = "train" if dropout_seed is not None else "eval"
    state = forward(net, x, mode, relu_slope, rng=rng_fwd)
    grads = backward(net, state, y, weight_decay)
    base_signature = _activation_signature(net, x, relu_slope, dropout_seed)
    coord_rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for p, g in zip(net.params, grads):
        if p is None:
            continue
        for name in ("w", "b"):
            arr, grad = p[name], g[name]
            order = coord_rng.permutation(arr.size)
            target = min(n_coords, arr.size)
            checked = 0
            for fi in order:
                if checked >= target:
                    break
                idx = np.unravel_index(fi, arr.shape)
                orig = arr[idx]
                arr[idx] = orig + h
                sig_p = _activation_signature(net, x, relu_slope, dropout_seed)
                lp = total_loss(net, x, y, weight_decay, relu_slope, dropout_seed)
                arr[idx] = orig - h
                sig_m = _activation_signature(net, x, relu_slope, dropout_seed)
                lm = total_loss(net, x, y, weight_decay, relu_slope, dropout_seed)
                arr[idx] = orig
                if sig_p != base_signature or sig_m != base_signature:
                    continue  # straddles a kink; skip this coordinate
                checked += 1
                numeric = (lp - lm) / (2 * h)
                denom = max(1e-8, abs(numeric) + abs(grad[idx]))
                rel = abs(numeric - grad[idx]) / denom
                worst = max(worst, rel)
            assert checked >= max(1, target - 4), (
                f"only {checked} kink-free coordinates found in a {arr.size}-entry tensor"
            )
    return worst


class TestScaledRelu:
    def test_unit_slope_is_relu(self):
        npt.assert_allclose(scaled_relu([-2.0, 0.0, 3.0], 1.0), [0.0, 0.0, 3.0])

    def test_slope_scales_positive_half(self):
        npt.assert_allclose(scaled_relu([2.0], 1.45), [2.9])

    def test_negative_half_is_zero(self):
        for slope in (0.5, 1.0, 1.75):
            npt.assert_allclose(scaled_relu([-5.0], slope), [0.0])

    def test_rejects_nonpositive_slope(self):
        with pytest.raises(ValueError):
            scaled_relu([1.0], 0.0)


class TestSoftmax:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        p = softmax(rng.normal(size=(8, 5)) * 10)
        npt.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(p > 0) and np.all(p < 1)

    def test_stable_for_large_logits(self):
        p = softmax(np.array([[1e3, -1e3, 0.0]]))
        assert np.isfinite(p).all()
        npt.assert_allclose(p.sum(), 1.0, atol=1e-9)
        loss = cross_entropy(np.array([[1e3, -1e3, 0.0]]), np.array([0]))
        assert np.isfinite(loss)


class TestInitWeights:
    def test_deterministic_for_seed(self):
        spec = NetworkSpec(
            (Conv1D(4, 2), MaxPool1D(), Flatten(), Dense(3, activation="linear")), (8, 1), 3
        )
        a, b = init_weights(spec, 42), init_weights(spec, 42)
        for pa, pb in zip(a.params, b.params):
            if pa is not None:
                npt.assert_array_equal(pa["w"], pb["w"])
                npt.assert_array_equal(pa["b"], pb["b"])

    def test_biases_zero_weights_normal_scale(self):
        spec = NetworkSpec((Flatten(), Dense(64), Dense(10, activation="linear")), (32, 1), 10)
        net = init_weights(spec, 0)
        w = net.params[1]["w"]
        npt.assert_array_equal(net.params[1]["b"], 0.0)
        assert abs(w.std() - 0.02) < 0.005
        assert abs(w.mean()) < 0.005

    def test_waveform_preset_parameter_count(self):
        assert waveform_cnn_spec().parameter_count() == 2_232_842
        assert init_weights(waveform_cnn_spec(), 1).parameter_count() == 2_232_842

    def test_waveform_preset_per_layer_counts(self):
        counts = [c for c in waveform_cnn_spec().parameter_counts() if c]
        assert counts == [
            384, 32896, 32896, 65792, 131328, 131328, 131328, 131328, 131328,
            262656, 262656, 917632, 1290,
        ]

    def test_spectrogram_preset_per_layer_counts(self):
        counts = [c for c in spectrogram_cnn_spec().parameter_counts() if c]
        assert counts == [800, 25680, 25680, 25680, 25680, 25680, 1201000, 500500, 250500, 5010]
        assert spectrogram_cnn_spec().parameter_count() == sum(counts) == 2_086_210

    def test_spectrogram_stride_one_variant_builds(self):
        spec = spectrogram_cnn_spec(pool_stride=1)
        assert spec.layer_shapes()[-1] == (10,)

    def test_preset_registry(self):
        assert build_preset("fsdd-samplecnn").parameter_count() == 2_232_842
        with pytest.raises(Exception, match="unknown network preset"):
            build_preset("no-such-preset")


class TestForward:
    def test_probabilities_normalised(self):
        spec = NetworkSpec((Flatten(), Dense(8), Dense(4, activation="linear")), (6, 1), 4)
        net = init_weights(spec, 5)
        state = forward(net, np.random.default_rng(1).normal(size=(7, 6, 1)))
        npt.assert_allclose(state.probabilities.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(state.probabilities > 0) and np.all(state.probabilities < 1)

    def test_zero_weights_give_uniform(self):
        spec = NetworkSpec((Flatten(), Dense(5, activation="linear")), (4, 1), 5)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = 0.0
        state = forward(net, np.ones((3, 4, 1)))
        npt.assert_allclose(state.probabilities, 0.2, atol=1e-12)

    def test_single_unit_network_logit(self):
        # 1x1 conv with weight w, identity dense: logit = w * x
        spec = NetworkSpec(
            (Conv1D(1, 1, activation="linear"), Flatten(), Dense(1, activation="linear")), (1, 1), 1
        )
        net = init_weights(spec, 0)
        net.params[0]["w"][:] = 2.5
        net.params[0]["b"][:] = 0.0
        net.params[2]["w"][:] = 1.0
        net.params[2]["b"][:] = 0.0
        state = forward(net, np.array([[[3.0]]]))
        npt.assert_allclose(state.logits, [[7.5]], atol=1e-12)

    def test_shape_mismatch_raises(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (4, 1), 2)
        with pytest.raises(DimensionError):
            forward(init_weights(spec, 0), np.zeros((1, 5, 1)))

    def test_dropout_train_vs_eval(self):
        spec = NetworkSpec((Flatten(), Dense(50), Dropout(0.5), Dense(2, activation="linear")), (4, 1), 2)
        net = init_weights(spec, 2)
        x = np.random.default_rng(0).normal(size=(3, 4, 1))
        eval_state = forward(net, x, "eval")
        train_state = forward(net, x, "train", rng=np.random.default_rng(0))
        assert not np.allclose(eval_state.logits, train_state.logits)
        npt.assert_array_equal(forward(net, x, "eval").logits, eval_state.logits)

    def test_dropout_train_requires_rng(self):
        spec = NetworkSpec((Flatten(), Dropout(0.5), Dense(2, activation="linear")), (4, 1), 2)
        with pytest.raises(ValueError, match="rng"):
            forward(init_weights(spec, 0), np.zeros((1, 4, 1)), "train")


SMALL_SPECS = {
    "dense": NetworkSpec((Flatten(), Dense(9), Dense(3, activation="linear")), (5, 1), 3),
    "conv1d": NetworkSpec(
        (Conv1D(3, 3), Conv1D(2, 2, stride=2, activation="linear"), Flatten(), Dense(2, activation="linear")),
        (12, 2),
        2,
    ),
    "conv2d": NetworkSpec(
        (Conv2D(3, (2, 2)), Conv2D(2, (3, 3), stride=(2, 2)), Flatten(), Dense(2, activation="linear")),
        (8, 7, 2),
        2,
    ),
    "maxpool1d": NetworkSpec(
        (Conv1D(2, 2), MaxPool1D(2, 2), Flatten(), Dense(2, activation="linear")), (10, 1), 2
    ),
    "maxpool2d": NetworkSpec(
        (Conv2D(2, (2, 2)), MaxPool2D((2, 2), (2, 2)), Flatten(), Dense(2, activation="linear")),
        (7, 7, 1),
        2,
    ),
    "maxpool2d_stride1": NetworkSpec(
        (Conv2D(2, (2, 2)), MaxPool2D((2, 2), (1, 1)), Flatten(), Dense(2, activation="linear")),
        (5, 5, 1),
        2,
    ),
    "dropout": NetworkSpec(
        (Flatten(), Dense(12), Dropout(0.4), Dense(2, activation="linear")), (6, 1), 2
    ),
}


class TestBackward:
    @pytest.mark.parametrize("name", sorted(SMALL_SPECS))
    def test_finite_difference_all_layer_kinds(self, name):
        spec = SMALL_SPECS[name]
        rng = np.random.default_rng(17)
        x = rng.normal(size=(4, *spec.input_shape)) * 2.0
        y = rng.integers(0, spec.num_classes, size=4)
        dropout_seed = 11 if name == "dropout" else None
        worst = finite_difference_check(
            spec, x, y, weight_decay=0.01, relu_slope=1.3, dropout_seed=dropout_seed
        )
        assert worst <= 1e-4, f"{name}: worst relative error {worst:.2e}"

    def test_gradient_zero_at_saturated_optimum(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (2, 1), 2)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = np.array([[60.0, -60.0], [0.0, 0.0]])
        x = np.ones((4, 2, 1))
        y = np.zeros(4, dtype=int)
        grads = backward(net, forward(net, x), y, weight_decay=0.0)
        norm = np.sqrt(sum(float((g["w"] ** 2).sum() + (g["b"] ** 2).sum()) for g in grads if g))
        assert norm <= 1e-6

    def test_weight_decay_component_is_linear(self):
        # same saturated configuration: the data gradient is ~0, so the
        # remaining gradient is the regularisation term, linear in the rate
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (2, 1), 2)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = np.array([[60.0, -60.0], [30.0, -30.0]])
        x = np.ones((4, 2, 1))
        y = np.zeros(4, dtype=int)
        g1 = backward(net, forward(net, x), y, weight_decay=0.01)
        g2 = backward(net, forward(net, x), y, weight_decay=0.02)
        npt.assert_allclose(g2[1]["w"], 2 * g1[1]["w"], atol=1e-10)

    def test_stale_state_rejected(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (2, 1), 2)
        net = init_weights(spec, 0)
        x = np.ones((2, 2, 1))
        y = np.array([0, 1])
        state = forward(net, x)
        grads = backward(net, state, y)
        sgd_step(net, grads, TrainConfig(seed=0))
        with pytest.raises(StateError):
            backward(net, state, y)

    def test_maxpool_routes_gradient_to_argmax_only(self):
        from mrlearn.nn.layers import maxpool2d_backward, maxpool2d_forward

        rng = np.random.default_rng(23)
        x = rng.normal(size=(2, 6, 6, 2)) * 3.0
        out, cache = maxpool2d_forward(x, (2, 2), (2, 2))
        grad_out = np.ones_like(out)
        grad_x = maxpool2d_backward(grad_out, cache)
        # with all-ones upstream gradient, each window's max gets exactly 1
        # and every other position stays 0
        for n in range(2):
            for wr in range(3):
                for wc in range(3):
                    for ch in range(2):
                        window = grad_x[n, 2 * wr : 2 * wr + 2, 2 * wc : 2 * wc + 2, ch]
                        assert window.sum() == 1.0
                        assert (window != 0).sum() == 1
                        src = x[n, 2 * wr : 2 * wr + 2, 2 * wc : 2 * wc + 2, ch]
                        assert window.ravel()[src.ravel().argmax()] == 1.0

    def test_maxpool_backward_scatter_matches_bruteforce(self):
        from mrlearn.nn.layers import maxpool2d_backward, maxpool2d_forward

        rng = np.random.default_rng(29)
        x = rng.normal(size=(2, 6, 5, 3))
        out, cache = maxpool2d_forward(x, (2, 2), (2, 2))
        grad_out = rng.normal(size=out.shape)
        grad_x = maxpool2d_backward(grad_out, cache)
        h = 1e-6
        for _ in range(40):
            idx = tuple(rng.integers(0, s) for s in x.shape)
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            fp = (maxpool2d_forward(xp, (2, 2), (2, 2))[0] * grad_out).sum()
            fm = (maxpool2d_forward(xm, (2, 2), (2, 2))[0] * grad_out).sum()
            numeric = (fp - fm) / (2 * h)
            npt.assert_allclose(grad_x[idx], numeric, atol=1e-5)


class TestSgdStep:
    def _scalar_net(self, w0):
        spec = NetworkSpec((Flatten(), Dense(1, activation="linear")), (1, 1), 1)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = w0
        return net

    def test_vanilla_step(self):
        net = self._scalar_net(1.0)
        grads = [None, {"w": np.array([[0.5]]), "b": np.array([0.0])}]
        sgd_step(net, grads, TrainConfig(learning_rate=0.02, momentum=0.0, seed=0))
        npt.assert_allclose(net.params[1]["w"], [[0.99]], atol=1e-12)

    def test_momentum_accumulates(self):
        net = self._scalar_net(1.0)
        cfg = TrainConfig(learning_rate=0.1, momentum=0.2, seed=0)
        grads = [None, {"w": np.array([[1.0]]), "b": np.array([0.0])}]
        sgd_step(net, grads, cfg)
        npt.assert_allclose(net.params[1]["w"], [[1.0 - 0.1]], atol=1e-12)
        grads = [None, {"w": np.array([[1.0]]), "b": np.array([0.0])}]
        sgd_step(net, grads, cfg)
        npt.assert_allclose(net.params[1]["w"], [[1.0 - 0.1 - 0.12]], atol=1e-12)

    def test_zero_gradient_is_fixed_point(self):
        net = self._scalar_net(0.7)
        grads = [None, {"w": np.zeros((1, 1)), "b": np.zeros(1)}]
        sgd_step(net, grads, TrainConfig(seed=0))
        npt.assert_allclose(net.params[1]["w"], [[0.7]], atol=1e-15)


class TestEvaluate:
    def _saturating_net(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (1, 1), 2)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = np.array([[50.0, -50.0]])
        net.params[1]["b"][:] = 0.0
        return net

    def test_perfect_memorisation(self):
        net = self._saturating_net()
        X = np.array([[[1.0]], [[-1.0]], [[2.0]], [[-2.0]]])
        y = np.array([0, 1, 0, 1])
        acc, loss = evaluate(net, X, y)
        assert acc == 1.0
        assert loss < 1e-6

    def test_constant_predictor_on_balanced_set(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (1, 1), 2)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = 0.0
        net.params[1]["b"][:] = np.array([1.0, 0.0])
        X = np.ones((10, 1, 1))
        y = np.array([0, 1] * 5)
        acc, _ = evaluate(net, X, y)
        assert acc == 0.5

    def test_constant_predictor_on_random_ten_class_labels(self):
        # frozen Monte Carlo estimate: argmax is always class 0, labels are
        # uniform over 10 classes under seed 123
        spec = NetworkSpec((Flatten(), Dense(10, activation="linear")), (1, 1), 10)
        net = init_weights(spec, 0)
        net.params[1]["w"][:] = 0.0
        rng = np.random.default_rng(123)
        y = rng.integers(0, 10, size=2000)
        acc, _ = evaluate(net, np.ones((2000, 1, 1)), y)
        npt.assert_allclose(acc, float((y == 0).mean()), atol=1e-12)
        assert abs(acc - 0.1) < 0.03

    def test_empty_dataset_rejected(self):
        spec = NetworkSpec((Flatten(), Dense(2, activation="linear")), (1, 1), 2)
        with pytest.raises((ValueError, DimensionError)):
            evaluate(init_weights(spec, 0), np.zeros((0, 1, 1)), np.zeros(0, dtype=int))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        spec = NetworkSpec(
            (Conv1D(4, 2), MaxPool1D(), Conv1D(3, 2), Flatten(), Dropout(0.3), Dense(5), Dense(2, activation="linear")),
            (12, 1),
            2,
        )
        net = init_weights(spec, 31)
        path = tmp_path / "model.npz"
        save_network(net, path)
        loaded = load_network(path)
        assert loaded.spec == net.spec
        for pa, pb in zip(net.params, loaded.params):
            if pa is not None:
                npt.assert_array_equal(pa["w"], pb["w"])
                npt.assert_array_equal(pa["b"], pb["b"])
        assert loaded.param_digest() == net.param_digest()

    def test_rejects_non_checkpoint(self, tmp_path):
        path = tmp_path / "junk.npz"
        np.savez(path, a=np.zeros(3))
        from mrlearn.errors import FormatError

        with pytest.raises(FormatError):
            load_network(path)


class TestPresetTrainingStep:
    def test_waveform_preset_forward_backward_step(self):
        # reduced input length keeps this fast while exercising the full
        # eleven-conv stack
        spec = waveform_cnn_spec(input_length=2048)
        net = init_weights(spec, 0)
        x = np.random.default_rng(0).normal(size=(2, 2048, 1))
        y = np.array([3, 7])
        state = forward(net, x, "train", relu_slope=1.45, rng=np.random.default_rng(1))
        npt.assert_allclose(state.probabilities.sum(axis=1), 1.0, atol=1e-9)
        grads = backward(net, state, y, 0.001)
        sgd_step(net, grads, TrainConfig(seed=0))
        assert all(g is None or np.isfinite(g["w"]).all() for g in grads)

    def test_spectrogram_preset_forward_backward_step(self):
        spec = spectrogram_cnn_spec()
        net = init_weights(spec, 0)
        x = np.random.default_rng(2).normal(size=(2, 60, 41, 1))
        state = forward(net, x, "train", relu_slope=1.3, rng=np.random.default_rng(3))
        grads = backward(net, state, np.array([0, 9]), 0.001)
        sgd_step(net, grads, TrainConfig(seed=0))
        npt.assert_allclose(state.probabilities.sum(axis=1), 1.0, atol=1e-9)


class TestSpecValidation:
    def test_incompatible_layers_rejected(self):
        with pytest.raises(DimensionError):
            NetworkSpec((Conv1D(4, 100), Flatten(), Dense(2, activation="linear")), (8, 1), 2)

    def test_output_layer_must_match_classes(self):
        with pytest.raises(ValueError):
            NetworkSpec((Flatten(), Dense(3, activation="linear")), (4, 1), 2)

    def test_spec_json_round_trip(self):
        spec = spectrogram_cnn_spec()
        assert NetworkSpec.from_json(spec.to_json()) == spec
