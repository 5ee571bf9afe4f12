import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from kdml.errors import ConfigError, InputError
from kdml.fading import ChannelRealization, draw_profile, realize_channel
from kdml.ofdm import (
    OfdmConfig,
    apply_channel,
    build_tx_grid,
    ofdm_demodulate,
    ofdm_modulate,
    pilot_sequence,
    propagate_time_domain,
    qpsk_demodulate,
    qpsk_modulate,
)

S = 1 / math.sqrt(2)


def flat_channel(value, shape):
    return ChannelRealization(np.zeros((shape[0], 1), complex), np.full(shape, value, complex))


class TestOfdmConfig:
    def test_defaults(self):
        cfg = OfdmConfig()
        assert cfg.fft_size * cfg.subcarrier_spacing == cfg.sample_rate
        assert cfg.cp_len == 128

    @pytest.mark.parametrize("kw", [{"cp_len": 0}, {"cp_len": 1024}, {"nps": 3}, {"fft_size": 1000}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            OfdmConfig(**kw)

    @pytest.mark.parametrize("nps", [1, 2, 4, 8, 16])
    def test_pilot_mask(self, nps):
        mask = OfdmConfig(nps=nps).pilot_mask(3)
        k = np.arange(1024)
        assert np.array_equal(mask, np.tile(k % nps == 0, (3, 1)))


class TestQpsk:
    def test_mapping(self):
        z = qpsk_modulate([0, 0, 0, 1, 1, 0, 1, 1])
        np.testing.assert_allclose(z, [S + S * 1j, S - S * 1j, -S + S * 1j, -S - S * 1j], atol=1e-15)

    def test_unit_energy(self, rng):
        z = qpsk_modulate(rng.integers(0, 2, 2000))
        assert np.max(np.abs(np.abs(z) - 1)) < 1e-15

    def test_odd_bits(self):
        with pytest.raises(InputError):
            qpsk_modulate([0, 1, 1])

    def test_decisions(self):
        assert list(qpsk_demodulate([0.9 + 0.1j])) == [0, 0]
        assert list(qpsk_demodulate([-0.1 - 0.9j])) == [1, 1]

    def test_round_trip(self, rng):
        bits = rng.integers(0, 2, 10_000)
        assert np.array_equal(qpsk_demodulate(qpsk_modulate(bits)), bits)

    def test_pilots_are_fixed(self):
        cfg = OfdmConfig(nps=4)
        np.testing.assert_array_equal(pilot_sequence(cfg), pilot_sequence(cfg))
        assert pilot_sequence(cfg).size == 256


class TestOfdmModulation:
    small = OfdmConfig(fft_size=8, subcarrier_spacing=15e3, sample_rate=8 * 15e3, cp_len=2, nps=2)

    def test_zero_row(self):
        assert not np.any(ofdm_modulate(OfdmConfig(), np.zeros(1024)))

    def test_dc_impulse(self):
        x = np.zeros(8, complex)
        x[0] = 1
        out = ofdm_modulate(self.small, x)
        assert out.shape == (10,)
        np.testing.assert_allclose(out, np.full(10, 1 / math.sqrt(8)), atol=1e-15)

    def test_cyclic_prefix_exact(self, rng):
        cfg = OfdmConfig()
        out = ofdm_modulate(cfg, crandn(rng, 1024))
        np.testing.assert_array_equal(out[:128], out[-128:])

    @pytest.mark.parametrize("cfg", [OfdmConfig(), small])
    def test_round_trip(self, rng, cfg):
        x = crandn(rng, 4, cfg.fft_size)
        assert np.max(np.abs(ofdm_demodulate(cfg, ofdm_modulate(cfg, x)) - x)) < 1e-10

    def test_parseval(self, rng):
        cfg = OfdmConfig()
        x = crandn(rng, 1024)
        body = ofdm_modulate(cfg, x)[128:]
        assert abs(np.sum(np.abs(body) ** 2) - np.sum(np.abs(x) ** 2)) < 1e-9

    def test_wrong_lengths(self):
        with pytest.raises(InputError):
            ofdm_modulate(self.small, np.zeros(7))
        with pytest.raises(InputError):
            ofdm_demodulate(self.small, np.zeros(8))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_round_trip_property(self, seed):
        x = crandn(np.random.default_rng(seed), self.small.fft_size)
        np.testing.assert_allclose(
            ofdm_demodulate(self.small, ofdm_modulate(self.small, x)), x, atol=1e-10
        )


class TestApplyChannel:
    cfg = OfdmConfig(nps=4)

    def test_identity_noiseless(self, rng):
        grid = build_tx_grid(self.cfg, 3, rng)
        out = apply_channel(grid, flat_channel(1.0, grid.shape), math.inf, rng)
        np.testing.assert_array_equal(out.rx_symbols, grid.tx_symbols)
        assert out.noise_var == 0.0

    def test_scalar_gain(self, rng):
        grid = build_tx_grid(self.cfg, 3, rng)
        out = apply_channel(grid, flat_channel(2.0, grid.shape), math.inf, rng)
        np.testing.assert_array_equal(out.rx_symbols, 2 * grid.tx_symbols)

    def test_noise_calibration(self, rng):
        grid = build_tx_grid(self.cfg, 100, rng)
        h = flat_channel(0.7 - 0.2j, grid.shape)
        out = apply_channel(grid, h, 10.0, rng)
        clean = h.freq_response * grid.tx_symbols
        ratio = np.mean(np.abs(out.rx_symbols - clean) ** 2) / np.mean(np.abs(clean) ** 2)
        assert abs(ratio - 0.1) <= 0.005

    def test_shape_mismatch(self, rng):
        grid = build_tx_grid(self.cfg, 3, rng)
        with pytest.raises(InputError):
            apply_channel(grid, flat_channel(1.0, (2, 1024)), 10.0, rng)

    def test_time_domain_chain_matches_multiplicative_model(self, rng):
        cfg = OfdmConfig()
        prof = draw_profile(rng, cfg.sample_rate, n_paths=3, max_delay_taps=64)
        chan = realize_channel(prof, np.arange(4) * cfg.symbol_duration, 1024, cfg.sample_rate, cfg.cp_len)
        grid = build_tx_grid(cfg, 4, rng)
        rx = propagate_time_domain(cfg, grid.tx_symbols, chan)
        assert np.max(np.abs(rx / chan.freq_response - grid.tx_symbols)) < 1e-9
        np.testing.assert_allclose(rx, apply_channel(grid, chan, math.inf, rng).rx_symbols, atol=1e-10)
