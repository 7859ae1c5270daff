import numpy as np
import pytest

from traitnet.errors import NumericError, ShapeError, ValidationError
from traitnet.nnkit import (
    Adam,
    AdamConfig,
    Dropout,
    Linear,
    Module,
    ReLU,
    Sigmoid,
    adam_update,
    fully_connected_forward,
    init_uniform,
    load_container,
    logistic,
    save_container,
    sigmoid_head,
)


class TestLinear:
    def test_forward_matches_matmul(self, rng):
        layer = Linear(4, 3, rng)
        x = rng.standard_normal((6, 4))
        expected = x @ layer.W.value + layer.b.value
        np.testing.assert_array_equal(layer(x), expected)

    def test_backward_shapes_and_accumulation(self, rng):
        layer = Linear(4, 3, rng)
        x = rng.standard_normal((6, 4))
        layer(x)
        dx = layer.backward(np.ones((6, 3)))
        assert dx.shape == x.shape
        assert layer.W.grad.shape == (4, 3)
        np.testing.assert_allclose(layer.b.grad, np.full(3, 6.0))

    def test_init_scale(self, rng):
        vals = init_uniform(rng, (1000,), fan_in=16)
        assert np.abs(vals).max() <= 0.25
        assert np.abs(vals).max() > 0.2


class TestActivations:
    def test_logistic_stable_at_extremes(self):
        assert logistic(1000.0) == 1.0
        assert logistic(-1000.0) == 0.0
        assert logistic(0.0) == 0.5

    def test_sigmoid_backward(self, rng):
        s = Sigmoid()
        x = rng.standard_normal(10)
        y = s(x)
        np.testing.assert_allclose(s.backward(np.ones(10)), y * (1 - y))

    def test_relu(self):
        r = ReLU()
        y = r(np.array([-1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(y, [0.0, 0.0, 2.0])
        np.testing.assert_array_equal(r.backward(np.ones(3)), [0.0, 0.0, 1.0])

    def test_fully_connected_hand_case(self):
        w = np.array([[1.0, 0.0], [0.0, 2.0]])
        b = np.array([0.5, -0.5])
        np.testing.assert_array_equal(
            fully_connected_forward(w, b, np.array([[1.0, 1.0]])), [[1.5, 1.5]])

    def test_sigmoid_head_returns_trait_vector(self):
        v = sigmoid_head(np.zeros(5))
        assert v.as_list() == [0.5] * 5


class TestDropout:
    def test_eval_is_identity(self, rng):
        d = Dropout(0.5, rng)
        x = rng.standard_normal((8, 8))
        np.testing.assert_array_equal(d(x, train=False), x)

    def test_zero_rate_is_identity_in_train(self, rng):
        d = Dropout(0.0, rng)
        x = rng.standard_normal((8, 8))
        np.testing.assert_array_equal(d(x, train=True), x)

    def test_inverted_scaling_preserves_mean(self):
        d = Dropout(0.3, np.random.default_rng(0))
        x = np.ones((200, 200))
        y = d(x, train=True)
        kept = y[y != 0]
        np.testing.assert_allclose(kept[0], 1.0 / 0.7)
        assert abs(y.mean() - 1.0) < 0.02
        assert abs((y == 0).mean() - 0.3) < 0.02

    def test_backward_uses_same_mask(self):
        d = Dropout(0.5, np.random.default_rng(0))
        x = np.ones((50, 50))
        y = d(x, train=True)
        dx = d.backward(np.ones_like(x))
        np.testing.assert_array_equal(dx, y)

    def test_invalid_rate(self, rng):
        with pytest.raises(ValidationError):
            Dropout(1.0, rng)


class TestAdam:
    def test_single_step_hand_oracle(self):
        # one Adam step from zero moments: update = -lr * g/|g| regardless of scale
        config = AdamConfig(learning_rate=0.1)
        p = np.array([1.0, -2.0])
        g = np.array([10.0, -0.5])
        new_p, m, v, config = adam_update(config, p, g, np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(new_p, p - 0.1 * np.sign(g), atol=1e-6)
        np.testing.assert_allclose(m, 0.1 * g)
        np.testing.assert_allclose(v, 0.001 * g * g)
        assert config.step_count == 1

    def test_bias_correction_two_steps(self):
        config = AdamConfig(learning_rate=0.01, beta1=0.9, beta2=0.999, epsilon=1e-8)
        p = np.array([0.0])
        g = np.array([2.0])
        m = np.zeros(1)
        v = np.zeros(1)
        for t in (1, 2):
            p, m, v, config = adam_update(config, p, g, m, v)
            m_hat = m / (1 - 0.9 ** t)
            v_hat = v / (1 - 0.999 ** t)
            np.testing.assert_allclose(m_hat, g)
            np.testing.assert_allclose(v_hat, g * g)
        np.testing.assert_allclose(p, -0.02 * 2.0 / (2.0 + 1e-8), rtol=1e-12)

    def test_nonfinite_gradient_raises(self):
        config = AdamConfig(learning_rate=0.01)
        with pytest.raises(NumericError, match="param"):
            adam_update(config, np.zeros(1), np.array([np.nan]), np.zeros(1), np.zeros(1))

    def test_driver_skips_frozen(self, rng):
        layer = Linear(3, 3, rng)
        frozen = Linear(3, 3, rng)
        named = [("head.w", layer.W), ("backbone.w", frozen.W)]
        opt = Adam(named, learning_rate=0.1, frozen_prefixes=("backbone.",))
        layer.W.grad[:] = 1.0
        frozen.W.grad[:] = 1.0
        before_frozen = frozen.W.value.copy()
        before_live = layer.W.value.copy()
        opt.step()
        np.testing.assert_array_equal(frozen.W.value, before_frozen)
        assert not np.array_equal(layer.W.value, before_live)

    def test_invalid_config(self):
        with pytest.raises(ValidationError):
            AdamConfig(learning_rate=-1.0)


class TestModuleState:
    def test_state_dict_round_trip(self, rng):
        class Net(Module):
            def __init__(self):
                super().__init__()
                self.fc1 = self.add_module("fc1", Linear(3, 4, rng))
                self.fc2 = self.add_module("fc2", Linear(4, 2, rng))

        a, b = Net(), Net()
        b.load_state_dict(a.state_dict())
        for (na, pa), (nb, pb) in zip(a.named_params(), b.named_params()):
            assert na == nb
            np.testing.assert_array_equal(pa.value, pb.value)

    def test_load_rejects_shape_mismatch(self, rng):
        a = Linear(3, 4, rng)
        state = a.state_dict()
        state["W"] = np.zeros((2, 2))
        with pytest.raises(ShapeError):
            a.load_state_dict(state)


class TestCheckpointContainer:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        tensors = {"a.w": rng.standard_normal((3, 4)), "b": rng.standard_normal(7)}
        config = {"kind": "test", "n": 3}
        meta = {"note": "hello"}
        path = tmp_path / "c.ckpt"
        save_container(path, config, tensors, meta)
        got_config, got_tensors, got_meta = load_container(path)
        assert got_config == config and got_meta == meta
        for k in tensors:
            assert got_tensors[k].dtype == np.float64
            np.testing.assert_array_equal(got_tensors[k], tensors[k])

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValidationError):
            load_container(path)

    def test_truncation_detected(self, tmp_path, rng):
        path = tmp_path / "t.ckpt"
        save_container(path, {}, {"w": rng.standard_normal(16)})
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValidationError):
            load_container(path)

    def test_identical_content_same_bytes(self, tmp_path, rng):
        tensors = {"w": rng.standard_normal((2, 2))}
        p1, p2 = tmp_path / "1.ckpt", tmp_path / "2.ckpt"
        save_container(p1, {"x": 1}, tensors)
        save_container(p2, {"x": 1}, tensors)
        assert p1.read_bytes() == p2.read_bytes()
