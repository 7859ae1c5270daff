import numpy as np
import pytest

from traitnet.errors import ConfigurationError
from traitnet.nnkit import (
    GATE_NAMES,
    LstmCellParams,
    LstmLayer,
    LstmStack,
    LstmStackConfig,
    lstm_cell_step,
    lstm_stack_forward,
)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def make_cell(rng, d_in, hidden):
    return LstmCellParams(
        input_weights=rng.standard_normal((d_in, 4 * hidden)) * 0.3,
        recurrent_weights=rng.standard_normal((hidden, 4 * hidden)) * 0.3,
        biases=rng.standard_normal(4 * hidden) * 0.1,
    )


class TestCell:
    def test_gate_order(self):
        assert GATE_NAMES == ("input", "forget", "output", "candidate")

    def test_hand_evaluated_step(self, rng):
        # recompute one step gate by gate from the packed parameters
        d_in, hidden = 3, 2
        params = make_cell(rng, d_in, hidden)
        x = rng.standard_normal(d_in)
        h_prev = rng.standard_normal(hidden)
        c_prev = rng.standard_normal(hidden)
        pre = x @ params.input_weights + h_prev @ params.recurrent_weights + params.biases
        i = sigmoid(pre[0:2])
        f = sigmoid(pre[2:4])
        o = sigmoid(pre[4:6])
        g = np.tanh(pre[6:8])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        got_h, got_c = lstm_cell_step(params, x, h_prev, c_prev)
        np.testing.assert_allclose(got_h, h, rtol=1e-12)
        np.testing.assert_allclose(got_c, c, rtol=1e-12)

    def test_gate_slices(self, rng):
        params = make_cell(rng, 3, 2)
        assert params.gate_slice("input") == slice(0, 2)
        assert params.gate_slice("forget") == slice(2, 4)
        assert params.gate_slice("output") == slice(4, 6)
        assert params.gate_slice("candidate") == slice(6, 8)

    def test_zero_params_zero_output(self):
        params = LstmCellParams(np.zeros((3, 8)), np.zeros((2, 8)), np.zeros(8))
        h, c = lstm_cell_step(params, np.ones(3), np.zeros(2), np.zeros(2))
        np.testing.assert_array_equal(h, 0.0)
        np.testing.assert_array_equal(c, 0.0)

    def test_forget_gate_retains_memory(self):
        # huge forget bias, closed input gate: cell state carries through unchanged
        bias = np.zeros(8)
        bias[0:2] = -100.0   # input gate shut
        bias[2:4] = 100.0    # forget gate open
        params = LstmCellParams(np.zeros((3, 8)), np.zeros((2, 8)), bias)
        c = np.array([0.7, -0.4])
        h = np.zeros(2)
        for _ in range(20):
            h, c = lstm_cell_step(params, np.zeros(3), h, c)
        np.testing.assert_allclose(c, [0.7, -0.4], atol=1e-12)


class TestLayer:
    def test_matches_manual_unroll(self, rng):
        layer = LstmLayer(3, 4, rng)
        x = rng.standard_normal((1, 5, 3))
        out = layer(x)
        params = layer.cell_params()
        h = np.zeros(4)
        c = np.zeros(4)
        for t in range(5):
            h, c = lstm_cell_step(params, x[0, t], h, c)
            np.testing.assert_allclose(out[0, t], h, rtol=1e-12)

    def test_forget_bias_initialized_to_one(self, rng):
        layer = LstmLayer(3, 4, rng)
        np.testing.assert_array_equal(layer.cell_params().biases[4:8], 1.0)
        assert np.all(layer.cell_params().biases[0:4] == 0.0)

    def test_batch_rows_independent(self, rng):
        layer = LstmLayer(3, 4, rng)
        x = rng.standard_normal((2, 5, 3))
        out = layer(x)
        assert out.shape == (2, 5, 4)
        np.testing.assert_allclose(out[1], layer(x[1:2])[0], rtol=1e-12)


class TestStack:
    def test_matches_functional_oracle(self, rng):
        config = LstmStackConfig(num_layers=3, hidden_size=4, residual=True, dropout_p=0.0)
        stack = LstmStack(config, input_size=4, rng=rng)
        x = rng.standard_normal((6, 4))
        expected = lstm_stack_forward(config, [l.cell_params() for l in stack.layers], x)
        np.testing.assert_allclose(stack(x[None])[0], expected, rtol=1e-12)

    def test_non_residual_matches_layer_composition(self, rng):
        config = LstmStackConfig(num_layers=2, hidden_size=4, residual=False, dropout_p=0.0)
        stack = LstmStack(config, input_size=3, rng=rng)
        x = rng.standard_normal((2, 5, 3))
        manual = stack.layers[1](stack.layers[0](x))
        np.testing.assert_allclose(stack(x), manual, rtol=1e-12)

    def test_residual_adds_input(self, rng):
        config = LstmStackConfig(num_layers=1, hidden_size=4, residual=True, dropout_p=0.0)
        stack = LstmStack(config, input_size=4, rng=rng)
        x = rng.standard_normal((2, 5, 4))
        np.testing.assert_allclose(stack(x), stack.layers[0](x) + x, rtol=1e-12)

    def test_residual_identity_with_zero_params(self, rng):
        config = LstmStackConfig(num_layers=2, hidden_size=4, residual=True, dropout_p=0.0)
        stack = LstmStack(config, input_size=4, rng=rng)
        for _, p in stack.named_params():
            p.value[:] = 0.0
        for _ in range(10):
            x = rng.standard_normal((1, 7, 4))
            np.testing.assert_array_equal(stack(x), x)

    def test_residual_requires_matching_dims(self, rng):
        config = LstmStackConfig(num_layers=2, hidden_size=4, residual=True, dropout_p=0.0)
        with pytest.raises(ConfigurationError):
            LstmStack(config, input_size=3, rng=rng)

    def test_invalid_config(self):
        with pytest.raises(ConfigurationError):
            LstmStackConfig(num_layers=0, hidden_size=4, residual=False, dropout_p=0.0)
