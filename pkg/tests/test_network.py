import numpy as np
import pytest

from co2occ.errors import DomainError, NumericalError, StructureError
from co2occ.models import layers
from co2occ.models.network import (
    NetworkConfig,
    NetworkWeights,
    forward,
    init_weights,
    loss_and_gradients,
    mean_loss,
    predict,
    tensor_shapes,
)

TINY = NetworkConfig(conv_filters=2, conv_kernel=3, pool_factor=2,
                     recurrent_units=(3,), fc_units=(4,),
                     dropout_probs=(0.5,), input_length=8)


def tiny_weights(seed=0, mean=0.0, std=1.0):
    return init_weights(TINY, np.random.default_rng(seed), mean, std)


def zero_weights(config=TINY):
    tensors = {name: np.zeros(shape) for name, shape in tensor_shapes(config).items()}
    return NetworkWeights(config, 0.0, 1.0, tensors)


class TestConfig:
    def test_derived_lengths_default(self):
        cfg = NetworkConfig()
        assert cfg.conv_length == 13
        assert cfg.pooled_length == 6

    def test_derived_lengths_tiny(self):
        assert TINY.conv_length == 6
        assert TINY.pooled_length == 3

    @pytest.mark.parametrize("kwargs", [
        dict(conv_kernel=16),                      # kernel longer than input
        dict(input_length=3, pool_factor=2),       # pooling eats the sequence
        dict(recurrent_units=()),
        dict(recurrent_units=(0,)),
        dict(dropout_probs=(1.0, 0.3)),
        dict(dropout_probs=(0.1, 0.2, 0.3)),       # more probs than fc layers
        dict(classes=1),
        dict(input_channels=2),
    ])
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(DomainError):
            NetworkConfig(**kwargs)

    def test_dict_roundtrip(self):
        assert NetworkConfig.from_dict(TINY.to_dict()) == TINY

    def test_unknown_key_rejected(self):
        data = TINY.to_dict()
        data["momentum"] = 0.9
        with pytest.raises(StructureError):
            NetworkConfig.from_dict(data)


class TestShapes:
    def test_tiny_tensor_shapes(self):
        shapes = tensor_shapes(TINY)
        assert shapes["conv/w"] == (3, 1, 2)
        assert shapes["conv/b"] == (2,)
        assert shapes["lstm0/fwd/wx"] == (2, 12)
        assert shapes["lstm0/fwd/wh"] == (3, 12)
        assert shapes["lstm0/bwd/b"] == (12,)
        assert shapes["fc0/w"] == (6, 4)   # concatenated final states are 2*3 wide
        assert shapes["out/w"] == (4, 2)

    def test_default_tensor_shapes(self):
        shapes = tensor_shapes(NetworkConfig())
        assert shapes["conv/w"] == (3, 1, 10)
        assert shapes["lstm0/fwd/wx"] == (10, 800)
        assert shapes["lstm1/fwd/wx"] == (400, 600)
        assert shapes["lstm2/bwd/wx"] == (300, 400)
        assert shapes["fc0/w"] == (200, 300)
        assert shapes["fc1/w"] == (300, 200)
        assert shapes["out/w"] == (200, 2)

    def test_check_shapes_reports_offender(self):
        w = tiny_weights()
        del w.tensors["fc0/b"]
        with pytest.raises(StructureError, match="fc0/b"):
            w.check_shapes()
        w = tiny_weights()
        w.tensors["out/w"] = np.zeros((5, 2))
        with pytest.raises(StructureError, match="out/w"):
            w.check_shapes()
        w = tiny_weights()
        w.tensors["spare"] = np.zeros(3)
        with pytest.raises(StructureError, match="spare"):
            w.check_shapes()


class TestInit:
    def test_biases(self):
        w = tiny_weights()
        assert np.all(w.tensors["conv/b"] == 0.0)
        assert np.all(w.tensors["fc0/b"] == 0.0)
        assert np.all(w.tensors["out/b"] == 0.0)
        b = w.tensors["lstm0/fwd/b"]
        assert np.all(b[3:6] == 1.0)   # forget gate opens by default
        assert np.all(b[:3] == 0.0)
        assert np.all(b[6:] == 0.0)

    def test_uniform_limits(self):
        w = tiny_weights(seed=1)
        limits = {
            "conv/w": np.sqrt(6.0 / (3 * 1 + 3 * 2)),
            "lstm0/fwd/wx": np.sqrt(6.0 / (2 + 12)),
            "lstm0/fwd/wh": np.sqrt(6.0 / (3 + 12)),
            "fc0/w": np.sqrt(6.0 / (6 + 4)),
            "out/w": np.sqrt(6.0 / (4 + 2)),
        }
        for name, limit in limits.items():
            t = w.tensors[name]
            assert np.max(np.abs(t)) <= limit
            assert np.max(np.abs(t)) > 0.5 * limit  # actually spread out

    def test_deterministic(self):
        a, b = tiny_weights(seed=3), tiny_weights(seed=3)
        for name in a.tensors:
            assert np.array_equal(a.tensors[name], b.tensors[name])

    def test_nonpositive_std_rejected(self):
        with pytest.raises(DomainError):
            init_weights(TINY, np.random.default_rng(0), 0.0, 0.0)


class TestForward:
    def test_outputs_are_distributions(self):
        w = tiny_weights(seed=2)
        x = np.random.default_rng(0).normal(500.0, 80.0, size=(9, 8))
        p = forward(w, x)
        assert p.shape == (9, 2)
        assert p.sum(axis=1) == pytest.approx(np.ones(9), abs=1e-6)
        assert np.all((p >= 0) & (p <= 1))

    def test_zero_weights_are_indifferent(self):
        p = forward(zero_weights(), np.full((3, 8), 700.0))
        assert np.array_equal(p, np.full((3, 2), 0.5))

    def test_wrong_width_rejected(self):
        with pytest.raises(StructureError):
            forward(tiny_weights(), np.zeros((4, 9)))

    def test_one_dimensional_input_rejected(self):
        with pytest.raises(StructureError):
            forward(tiny_weights(), np.zeros(8))

    def test_train_mode_dropout_needs_rng(self):
        with pytest.raises(DomainError):
            forward(tiny_weights(), np.zeros((2, 8)), train_mode=True)

    def test_normalization_uses_stored_statistics(self):
        w = tiny_weights(seed=4, mean=500.0, std=120.0)
        raw = NetworkWeights(TINY, 0.0, 1.0, w.tensors)
        x = np.random.default_rng(1).normal(500.0, 120.0, size=(6, 8))
        assert np.array_equal(forward(w, x), forward(raw, (x - 500.0) / 120.0))

    def test_predict_matches_forward_argmax(self):
        w = tiny_weights(seed=5)
        x = np.random.default_rng(2).normal(0.0, 1.0, size=(20, 8))
        assert np.array_equal(predict(w, x, batch_size=7),
                              forward(w, x).argmax(axis=1))


class TestLoss:
    def test_uniform_predictions_give_ln2(self):
        w = zero_weights()
        x = np.random.default_rng(0).normal(size=(10, 8))
        y = np.random.default_rng(1).integers(0, 2, 10)
        assert mean_loss(w, x, y) == pytest.approx(np.log(2.0), abs=1e-12)
        loss, _ = loss_and_gradients(w, x, y)
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_confident_correct_predictions_drive_loss_to_zero(self):
        w = zero_weights()
        w.tensors["out/b"] = np.array([40.0, -40.0])
        x = np.zeros((5, 8))
        assert mean_loss(w, x, np.zeros(5, dtype=int)) < 1e-10

    def test_gradient_shapes_match_tensors(self):
        w = tiny_weights(seed=6)
        x = np.random.default_rng(3).normal(size=(4, 8))
        y = np.array([0, 1, 0, 1])
        _, grads = loss_and_gradients(w, x, y)
        assert set(grads) == set(w.tensors)
        for name, g in grads.items():
            assert g.shape == w.tensors[name].shape

    def test_bad_labels_rejected(self):
        w = tiny_weights()
        x = np.zeros((2, 8))
        with pytest.raises(DomainError):
            loss_and_gradients(w, x, np.array([0, 2]))

    def test_empty_batch_rejected(self):
        w = tiny_weights()
        with pytest.raises(DomainError):
            loss_and_gradients(w, np.zeros((0, 8)), np.zeros(0, dtype=int))

    def test_certain_wrong_prediction_raises_numerical_error(self):
        w = zero_weights()
        w.tensors["out/b"] = np.array([5000.0, -5000.0])
        x = np.zeros((3, 8))
        with pytest.raises(NumericalError) as err:
            loss_and_gradients(w, x, np.array([0, 1, 0]))
        assert err.value.index == 1


def gradcheck_rel_errors(weights, x, y, eps=1e-4):
    """Worst relative disagreement between analytic and central-difference
    gradients, per tensor."""
    _, grads = loss_and_gradients(weights, x, y)
    worst = {}
    for name, tensor in weights.tensors.items():
        numeric = np.zeros_like(tensor)
        flat, nflat = tensor.ravel(), numeric.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = mean_loss(weights, x, y)
            flat[i] = orig - eps
            lo = mean_loss(weights, x, y)
            flat[i] = orig
            nflat[i] = (hi - lo) / (2 * eps)
        denom = np.maximum(np.maximum(np.abs(grads[name]), np.abs(numeric)), 1e-2)
        worst[name] = float(np.max(np.abs(grads[name] - numeric) / denom))
    return worst


class TestGradients:
    def test_match_finite_differences(self):
        w = tiny_weights(seed=7, mean=500.0, std=120.0)
        rng = np.random.default_rng(4)
        x = rng.normal(500.0, 120.0, size=(4, 8))
        y = np.array([0, 1, 1, 0])
        worst = gradcheck_rel_errors(w, x, y)
        assert max(worst.values()) < 1e-4, worst


def stack_forward(x, params, final=True):
    """The bidirectional stack exactly as the full pipeline composes it."""
    h = x
    for i, (fwd, bwd) in enumerate(params):
        hf, _ = layers.lstm_forward(h, *fwd)
        hb, _ = layers.lstm_forward(h, *bwd, reverse=True)
        if i < len(params) - 1:
            h = np.concatenate([hf, hb], axis=2)
        else:
            h = np.concatenate([hf[:, -1, :], hb[:, 0, :]], axis=1)
    return h


def swap_rows(wx, width):
    out = wx.copy()
    out[:width], out[width:] = wx[width:], wx[:width]
    return out


class TestBidirectionality:
    def test_reversed_input_with_swapped_directions_swaps_halves(self):
        rng = np.random.default_rng(8)
        units = (3, 2)
        channels = 2
        params = []
        in_dim = channels
        for u in units:
            fwd = (rng.normal(scale=0.5, size=(in_dim, 4 * u)),
                   rng.normal(scale=0.5, size=(u, 4 * u)),
                   rng.normal(scale=0.5, size=4 * u))
            bwd = (rng.normal(scale=0.5, size=(in_dim, 4 * u)),
                   rng.normal(scale=0.5, size=(u, 4 * u)),
                   rng.normal(scale=0.5, size=4 * u))
            params.append((fwd, bwd))
            in_dim = 2 * u
        x = rng.normal(size=(3, 5, channels))

        # mirror run: reversed input, direction roles exchanged; deeper
        # layers also see their concatenated halves exchanged, which the
        # input-weight rows must follow
        mirrored = []
        prev_u = None
        for (fwd, bwd) in params:
            if prev_u is None:
                mfwd, mbwd = bwd, fwd
            else:
                mfwd = (swap_rows(bwd[0], prev_u), bwd[1], bwd[2])
                mbwd = (swap_rows(fwd[0], prev_u), fwd[1], fwd[2])
            mirrored.append((mfwd, mbwd))
            prev_u = fwd[1].shape[0]

        v = stack_forward(x, params)
        v_mirror = stack_forward(x[:, ::-1], mirrored)
        u_last = units[-1]
        swapped = np.concatenate([v_mirror[:, u_last:], v_mirror[:, :u_last]], axis=1)
        assert np.allclose(v, swapped, rtol=1e-12, atol=1e-12)
