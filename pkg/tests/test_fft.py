import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn, dft_direct
from kdml.errors import InputError
from kdml.fft import fft, ifft


class TestFft:
    @pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32, 64])
    def test_matches_direct_dft(self, rng, n):
        x = crandn(rng, n)
        np.testing.assert_allclose(fft(x), dft_direct(x), rtol=0, atol=1e-10)

    def test_batched_last_axis(self, rng):
        x = crandn(rng, 5, 32)
        np.testing.assert_allclose(fft(x), dft_direct(x), rtol=0, atol=1e-10)

    @pytest.mark.parametrize("n", [8, 1024])
    def test_round_trip(self, rng, n):
        x = crandn(rng, 3, n)
        assert np.max(np.abs(ifft(fft(x)) - x)) < 1e-10

    def test_parseval(self, rng):
        x = crandn(rng, 1024)
        X = fft(x)
        assert abs(np.sum(np.abs(x) ** 2) - np.sum(np.abs(X) ** 2) / 1024) < 1e-9

    def test_impulse_is_flat(self):
        x = np.zeros(16, complex)
        x[0] = 1.0
        np.testing.assert_array_equal(fft(x), np.ones(16))

    @pytest.mark.parametrize("n", [3, 6, 100])
    def test_rejects_non_power_of_two(self, n):
        with pytest.raises(InputError):
            fft(np.zeros(n))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 7), st.integers(0, 2**31 - 1))
    def test_linearity(self, log_n, seed):
        r = np.random.default_rng(seed)
        n = 2**log_n
        a, b = crandn(r, n), crandn(r, n)
        c = complex(*r.standard_normal(2))
        np.testing.assert_allclose(fft(a + c * b), fft(a) + c * fft(b), atol=1e-10)
