import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdml.errors import InputError, NumericalError
from kdml.learn import (
    LstmParams,
    LstmState,
    backward,
    check_gradient,
    dense_forward,
    forward,
    init_lstm,
    lstm_step,
    mse_loss,
)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def step_oracle(p, h, c, x):
    """Gate-by-gate update written independently of the stacked kernel."""
    z = np.concatenate([x, h])
    f = sigmoid(z @ p.w_f + p.b_f)
    i = sigmoid(z @ p.w_i + p.b_i)
    c_bar = np.tanh(z @ p.w_c + p.b_c)
    c_new = f * c + i * c_bar
    o = sigmoid(z @ p.w_o + p.b_o)
    return o * np.tanh(c_new), c_new


def zero_params(i=2, m=4, l=2):
    return init_lstm(i, m, l, np.random.default_rng(0)).zeros_like()


def random_params(rng, i=2, m=4, l=2, scale=0.5):
    p = init_lstm(i, m, l, rng)
    return p.from_vector(rng.normal(0, scale, p.size))


class TestParams:
    def test_shapes(self, rng):
        p = init_lstm(2, 8, 4, rng)
        assert p.w_f.shape == (10, 8) and p.w_g.shape == (8, 4)
        assert (p.input_dim, p.hidden_dim, p.output_dim) == (2, 8, 4)

    def test_init_bounds(self, rng):
        p = init_lstm(2, 64, 2, rng)
        for name in ("w_f", "w_i", "w_c", "w_o", "w_g"):
            assert np.max(np.abs(getattr(p, name))) <= 1 / 8
        assert not np.any(p.b_f) and not np.any(p.b_g)

    def test_forget_bias_flag(self, rng):
        assert np.all(init_lstm(2, 4, 2, rng, forget_bias=1.0).b_f == 1.0)

    def test_mismatched_gates(self, rng):
        p = init_lstm(2, 4, 2, rng)
        arrays = p.arrays()
        arrays["w_i"] = np.zeros((5, 4))
        with pytest.raises(InputError):
            LstmParams(**arrays)

    def test_vector_round_trip(self, rng):
        p = init_lstm(2, 4, 2, rng)
        q = p.from_vector(p.to_vector())
        for a, b in zip(p.arrays().values(), q.arrays().values()):
            np.testing.assert_array_equal(a, b)


class TestStep:
    def test_zero_params(self):
        s = lstm_step(zero_params(), LstmState.zeros(4), np.array([3.0, -1.0]))
        assert not np.any(s.cell) and not np.any(s.hidden)

    def test_zero_params_decay(self):
        c = np.array([1.0, -2.0, 0.5, 4.0])
        s = lstm_step(zero_params(), LstmState(np.zeros(4), c), np.ones(2))
        np.testing.assert_allclose(s.cell, 0.5 * c, atol=1e-15)
        np.testing.assert_allclose(s.hidden, 0.5 * np.tanh(0.5 * c), atol=1e-15)

    def test_matches_oracle(self, rng):
        p = random_params(rng)
        h, c, x = rng.normal(size=4), rng.normal(size=4), rng.normal(size=2)
        s = lstm_step(p, LstmState(h, c), x)
        h_ref, c_ref = step_oracle(p, h, c, x)
        assert np.max(np.abs(s.hidden - h_ref)) < 1e-12
        assert np.max(np.abs(s.cell - c_ref)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            lstm_step(zero_params(), LstmState.zeros(4), np.ones(3))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            lstm_step(zero_params(), LstmState(np.zeros(4), np.full(4, np.inf)), np.ones(2))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 20.0))
    def test_gate_ranges(self, seed, scale):
        r = np.random.default_rng(seed)
        p = random_params(r, scale=scale)
        z = np.concatenate([r.normal(size=2), r.normal(size=4)])
        a = z @ p.stacked()[0] + p.stacked()[1]
        gates = 0.5 * (1 + np.tanh(0.5 * a[:12]))
        cand = np.tanh(a[12:])
        # saturation to exactly 0 or 1 is a float artefact; the open interval holds before rounding
        assert np.all((gates >= 0) & (gates <= 1)) and np.all(np.abs(cand) <= 1)
        h, c = step_oracle(p, z[2:], np.zeros(4), z[:2])
        s = lstm_step(p, LstmState(z[2:], np.zeros(4)), z[:2])
        np.testing.assert_allclose(s.hidden, h, atol=1e-12)


class TestDense:
    def test_zero_weights(self, rng):
        p = zero_params()
        p.b_g[:] = [1.5, -2.0]
        np.testing.assert_array_equal(dense_forward(p, rng.normal(size=4)), [1.5, -2.0])

    def test_identity(self, rng):
        p = init_lstm(2, 4, 4, rng)
        p.w_g[:] = np.eye(4)
        p.b_g[:] = 0
        h = rng.normal(size=4)
        np.testing.assert_allclose(dense_forward(p, h), h, atol=1e-15)

    def test_naive_product(self, rng):
        p = random_params(rng)
        h = rng.normal(size=4)
        expected = [sum(h[r] * p.w_g[r, k] for r in range(4)) + p.b_g[k] for k in range(2)]
        assert np.max(np.abs(dense_forward(p, h) - expected)) < 1e-12

    def test_mismatch(self):
        with pytest.raises(InputError):
            dense_forward(zero_params(), np.ones(3))


class TestForward:
    def test_single_step(self, rng):
        p = random_params(rng)
        x = rng.normal(size=(1, 2))
        expected = dense_forward(p, lstm_step(p, LstmState.zeros(4), x[0]).hidden)
        np.testing.assert_allclose(forward(p, x), expected, atol=1e-15)

    def test_zero_params_give_bias(self, rng):
        p = zero_params()
        p.b_g[:] = [0.25, 0.75]
        np.testing.assert_array_equal(forward(p, rng.normal(size=(6, 2))), [0.25, 0.75])

    def test_two_step_oracle(self, rng):
        p = random_params(rng, m=3)
        x = rng.normal(size=(2, 2))
        h, c = step_oracle(p, np.zeros(3), np.zeros(3), x[0])
        h, c = step_oracle(p, h, c, x[1])
        assert np.max(np.abs(forward(p, x) - (h @ p.w_g + p.b_g))) < 1e-12

    def test_batch_matches_single(self, rng):
        p = random_params(rng)
        x = rng.normal(size=(5, 8, 2))
        batch = forward(p, x)
        for k in range(5):
            np.testing.assert_allclose(batch[k], forward(p, x[k]), atol=1e-14)

    def test_bad_window(self):
        with pytest.raises(InputError):
            forward(zero_params(), np.ones((3, 3)))


class TestLoss:
    def test_zero(self):
        assert mse_loss([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_three_four_five(self):
        assert mse_loss([3.0, 4.0], [0.0, 0.0]) == 25.0

    def test_naive_loop(self, rng):
        p, t = rng.normal(size=6), rng.normal(size=6)
        total = sum(abs(complex(p[2 * k], p[2 * k + 1]) - complex(t[2 * k], t[2 * k + 1])) ** 2 for k in range(3))
        assert abs(mse_loss(p, t) - total / 3) < 1e-12

    def test_mismatch(self):
        with pytest.raises(InputError):
            mse_loss([1.0, 2.0], [1.0, 2.0, 3.0, 4.0])


class TestBackward:
    def test_zero_residual(self, rng):
        p = random_params(rng)
        x = rng.normal(size=(3, 2))
        loss, g = backward(p, x, forward(p, x))
        assert loss == 0.0 and not np.any(g.w_g) and not np.any(g.b_g)

    def test_finite_differences(self, rng):
        p = random_params(rng, m=4)
        x, y = rng.normal(size=(3, 2)), rng.normal(size=2)
        assert check_gradient(lambda q: backward(q, x, y), p, step=1e-5) < 1e-5

    def test_batch_finite_differences(self, rng):
        p = random_params(rng, m=3, l=4)
        x, y = rng.normal(size=(4, 5, 2)), rng.normal(size=(4, 4))
        assert check_gradient(lambda q: backward(q, x, y), p) < 1e-5

    def test_duplicated_batch(self, rng):
        p = random_params(rng)
        x, y = rng.normal(size=(3, 2)), rng.normal(size=2)
        _, single = backward(p, x, y)
        _, double = backward(p, np.stack([x, x]), np.stack([y, y]))
        np.testing.assert_allclose(double.to_vector(), single.to_vector(), atol=1e-14)

    def test_loss_matches_forward(self, rng):
        p = random_params(rng)
        x, y = rng.normal(size=(7, 8, 2)), rng.normal(size=(7, 2))
        loss, _ = backward(p, x, y)
        assert loss == pytest.approx(mse_loss(forward(p, x), y), abs=1e-14)
