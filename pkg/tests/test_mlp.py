import numpy as np
import pytest

from kdml.errors import InputError
from kdml.learn import check_gradient, init_mlp, mlp_backward, mlp_forward, mlp_train
from kdml.learn.train import WindowedDataset


class TestMlp:
    def test_layer_count_and_shapes(self, rng):
        p = init_mlp(16, 8, 2, rng)
        assert p.n_layers == 6
        assert [w.shape for w in p.weights] == [(16, 8)] + [(8, 8)] * 4 + [(8, 2)]

    def test_zero_weights(self, rng):
        p = init_mlp(16, 8, 2, rng).zeros_like()
        p.biases[-1][:] = [0.3, -0.7]
        np.testing.assert_array_equal(mlp_forward(p, rng.normal(size=(8, 2))), [0.3, -0.7])

    def test_matches_manual_stack(self, rng):
        p = init_mlp(6, 5, 2, rng)
        x = rng.normal(size=(3, 2))
        a = x.ravel()
        for k in range(6):
            a = a @ p.weights[k] + p.biases[k]
            if k < 5:
                a = np.where(a > 0, a, 0.0)
        np.testing.assert_allclose(mlp_forward(p, x), a, atol=1e-13)

    def test_finite_differences(self, rng):
        p = init_mlp(6, 8, 2, rng)
        p = p.from_vector(p.to_vector() + rng.normal(0, 0.05, p.size))
        x, y = rng.normal(size=(4, 3, 2)), rng.normal(size=(4, 2))
        assert check_gradient(lambda q: mlp_backward(q, x, y), p) < 1e-5

    def test_wrong_input(self, rng):
        with pytest.raises(InputError):
            mlp_forward(init_mlp(16, 8, 2, rng), np.ones((3, 2)))

    def test_training_is_deterministic(self, rng):
        data = WindowedDataset(rng.normal(size=(64, 4, 2)), rng.normal(size=(64, 2)))
        p = init_mlp(8, 8, 2, np.random.default_rng(1))
        a = mlp_train(p, data, 3, 16, np.random.default_rng(2))
        b = mlp_train(p, data, 3, 16, np.random.default_rng(2))
        assert a.losses == b.losses
        np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())
