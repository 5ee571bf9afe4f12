"""QPSK/OFDM transmit and receive chain with comb pilots and an AWGN channel.

The channel is applied per subcarrier (``y = h * x + w``) on the
frequency-domain grid. The time-domain path through IFFT, cyclic prefix and
circular convolution is available in :func:`propagate_time_domain` and gives
the same result whenever the cyclic prefix covers the delay spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from kdml.errors import ConfigError, InputError
from kdml.fading import ChannelRealization
from kdml.fft import fft, ifft

PILOT_SEED = 0x5EED

_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class OfdmConfig:
    fft_size: int = 1024
    subcarrier_spacing: float = 15e3
    sample_rate: float = 15.36e6
    cp_len: int = 128
    nps: int = 2

    def __post_init__(self):
        n = self.fft_size
        if n < 2 or n & (n - 1):
            raise ConfigError(f"fft_size must be a power of two, got {n}")
        if not 0 < self.cp_len < n:
            raise ConfigError(f"cp_len must lie in (0, {n}), got {self.cp_len}")
        if self.nps < 1 or n % self.nps:
            raise ConfigError(f"nps={self.nps} must divide fft_size={n}")
        if not math.isclose(self.sample_rate, n * self.subcarrier_spacing, rel_tol=1e-9):
            raise ConfigError("sample_rate must equal fft_size * subcarrier_spacing")

    @property
    def symbol_duration(self) -> float:
        """Duration of one OFDM symbol including its cyclic prefix, in seconds."""
        return (self.fft_size + self.cp_len) / self.sample_rate

    @property
    def pilot_indices(self) -> np.ndarray:
        return np.arange(0, self.fft_size, self.nps)

    def pilot_mask(self, n_symbols: int) -> np.ndarray:
        mask = np.zeros((n_symbols, self.fft_size), dtype=bool)
        mask[:, self.pilot_indices] = True
        return mask


@dataclass
class FrameGrid:
    """Time x subcarrier grid of one frame.

    ``noise_var`` is the per-sample AWGN power actually used (0 when noise is
    disabled); the receiver is allowed to know it.
    """

    tx_symbols: np.ndarray
    rx_symbols: np.ndarray
    pilot_mask: np.ndarray
    snr_db: float = math.inf
    noise_var: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.tx_symbols.shape


# -- QPSK ---------------------------------------------------------------------


def qpsk_modulate(bits) -> np.ndarray:
    """Gray-mapped unit-energy QPSK; bit 0 maps to +, bit 1 to -."""
    b = np.asarray(bits, dtype=np.int8).ravel()
    if b.size % 2:
        raise InputError(f"QPSK needs an even number of bits, got {b.size}")
    if np.any((b != 0) & (b != 1)):
        raise InputError("bits must be 0 or 1")
    pairs = b.reshape(-1, 2)
    return ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])) * _SQRT1_2


def qpsk_demodulate(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    bits = np.empty((s.size, 2), dtype=np.int8)
    bits[:, 0] = s.real < 0
    bits[:, 1] = s.imag < 0
    return bits.ravel()


def pilot_sequence(cfg: OfdmConfig) -> np.ndarray:
    """Fixed pseudo-random QPSK pilot values, one per pilot subcarrier."""
    rng = np.random.default_rng(PILOT_SEED)
    bits = rng.integers(0, 2, size=2 * cfg.pilot_indices.size)
    return qpsk_modulate(bits)


# -- OFDM modulation ----------------------------------------------------------


def ofdm_modulate(cfg: OfdmConfig, freq_symbols) -> np.ndarray:
    """IFFT (unitary scaling) followed by cyclic-prefix insertion.

    Accepts one row of ``fft_size`` symbols or a ``[symbol, fft_size]`` block.
    """
    x = np.asarray(freq_symbols, dtype=np.complex128)
    if x.shape[-1] != cfg.fft_size:
        raise InputError(f"expected rows of length {cfg.fft_size}, got {x.shape[-1]}")
    body = ifft(x) * math.sqrt(cfg.fft_size)
    return np.concatenate((body[..., -cfg.cp_len:], body), axis=-1)


def ofdm_demodulate(cfg: OfdmConfig, time_samples) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary FFT."""
    y = np.asarray(time_samples, dtype=np.complex128)
    expected = cfg.fft_size + cfg.cp_len
    if y.shape[-1] != expected:
        raise InputError(f"expected {expected} samples per symbol, got {y.shape[-1]}")
    return fft(y[..., cfg.cp_len:]) / math.sqrt(cfg.fft_size)


# -- framing and channel ------------------------------------------------------


def build_tx_grid(cfg: OfdmConfig, n_symbols: int, rng: np.random.Generator) -> FrameGrid:
    """Random QPSK data with the comb pilots inserted on every symbol."""
    if n_symbols < 1:
        raise InputError("a frame needs at least one OFDM symbol")
    bits = rng.integers(0, 2, size=2 * n_symbols * cfg.fft_size)
    tx = qpsk_modulate(bits).reshape(n_symbols, cfg.fft_size)
    tx[:, cfg.pilot_indices] = pilot_sequence(cfg)
    return FrameGrid(
        tx_symbols=tx,
        rx_symbols=np.zeros_like(tx),
        pilot_mask=cfg.pilot_mask(n_symbols),
    )


def apply_channel(
    grid: FrameGrid,
    chan: ChannelRealization,
    snr_db: float,
    rng: np.random.Generator,
) -> FrameGrid:
    """Return a copy of ``grid`` with ``rx = h * tx + w``.

    The noise power is set relative to the received signal power measured
    over the frame; ``snr_db = inf`` disables noise.
    """
    h = np.asarray(chan.freq_response)
    if h.shape != grid.tx_symbols.shape:
        raise InputError(f"channel shape {h.shape} != grid shape {grid.tx_symbols.shape}")
    clean = h * grid.tx_symbols
    if math.isinf(snr_db) and snr_db > 0:
        return replace(grid, rx_symbols=clean, snr_db=snr_db, noise_var=0.0)
    noise_var = float(np.mean(np.abs(clean) ** 2)) * 10.0 ** (-snr_db / 10.0)
    w = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
    w *= math.sqrt(noise_var / 2.0)
    return replace(grid, rx_symbols=clean + w, snr_db=snr_db, noise_var=noise_var)


def propagate_time_domain(
    cfg: OfdmConfig, tx_symbols: np.ndarray, chan: ChannelRealization
) -> np.ndarray:
    """Noiseless transmission through the time-domain chain.

    Each symbol is modulated, linearly convolved with that symbol's impulse
    response, truncated back to one symbol length and demodulated.
    """
    if int(chan.taps.max()) > cfg.cp_len:
        raise ConfigError("delay spread exceeds the cyclic prefix")
    tx_time = ofdm_modulate(cfg, tx_symbols)
    impulse = chan.impulse_response()
    rx_time = np.zeros_like(tx_time)
    length = tx_time.shape[-1]
    for tap in range(impulse.shape[1]):
        if not np.any(impulse[:, tap]):
            continue
        rx_time[:, tap:] += impulse[:, tap, None] * tx_time[:, : length - tap]
    return ofdm_demodulate(cfg, rx_time)
