"""Time-selective Rayleigh fading (Jakes sum of sinusoids) and tapped delay lines.

Each propagation path carries its own Jakes oscillator bank; the paths are
summed at integer sample delays and the resulting sparse impulse response is
transformed to a per-subcarrier frequency response once per OFDM symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from kdml.errors import ConfigError, InputError
from kdml.fft import fft


@dataclass(frozen=True)
class JakesConfig:
    """One Jakes oscillator bank.

    Attributes
    ----------
    e0 : float
        Average amplitude of the fading process.
    t_oscillators : int
        Number of arriving plane waves. Must satisfy ``t_oscillators % 4 == 2``
        so that the number of distinct oscillators ``(T/2 - 1)/2`` is integral.
    doppler_max : float
        Maximum Doppler shift in rad/s.
    phase_offset : float
        Common phase added to every oscillator of the bank. Zero reproduces the
        textbook fixed phases exactly.
    """

    e0: float = 1.0
    t_oscillators: int = 34
    doppler_max: float = 2 * math.pi * 100.0
    phase_offset: float = 0.0

    def __post_init__(self):
        t = self.t_oscillators
        if t < 6 or t % 4 != 2:
            raise ConfigError(
                f"t_oscillators must be >= 6 and congruent to 2 mod 4, got {t}"
            )
        if not math.isfinite(self.doppler_max) or self.doppler_max < 0:
            raise ConfigError(f"doppler_max must be finite and >= 0, got {self.doppler_max}")

    @property
    def n_oscillators(self) -> int:
        return (self.t_oscillators // 2 - 1) // 2

    @property
    def frequencies(self) -> np.ndarray:
        m = np.arange(1, self.n_oscillators + 1)
        return self.doppler_max * np.cos(2 * np.pi * m / self.t_oscillators)

    @property
    def phases(self) -> np.ndarray:
        m = np.arange(1, self.n_oscillators + 1)
        return np.pi * m / (self.n_oscillators + 1) + self.phase_offset


def jakes_gain(cfg: JakesConfig, t):
    """Complex fading gain of one oscillator bank at time(s) ``t`` (seconds).

    Scalar input gives a Python complex, array input gives an array of the
    same shape.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t_arr)):
        raise InputError("time instants must be finite")
    m_count = cfg.n_oscillators
    weights = 2.0 * np.exp(1j * cfg.phases)
    tt = t_arr[..., None]
    bank = np.cos(tt * cfg.frequencies) @ weights
    direct = math.sqrt(2.0) * np.exp(1j * cfg.phase_offset) * np.cos(cfg.doppler_max * t_arr)
    g = cfg.e0 / math.sqrt(2 * m_count + 1) * (bank + direct)
    if t_arr.ndim == 0:
        return complex(g)
    return g


@dataclass(frozen=True)
class PathSpec:
    power: float
    delay: float
    jakes: JakesConfig


@dataclass(frozen=True)
class MultipathProfile:
    """Tapped-delay-line description: linear powers, delays in seconds."""

    paths: tuple[PathSpec, ...]

    def __post_init__(self):
        if not self.paths:
            raise ConfigError("a multipath profile needs at least one path")
        powers = np.array([p.power for p in self.paths])
        if np.any(powers < 0) or abs(powers.sum() - 1.0) > 1e-12:
            raise ConfigError(f"path powers must be >= 0 and sum to 1, got {powers.sum()!r}")
        delays = np.array([p.delay for p in self.paths])
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ConfigError("path delays must be non-negative and strictly increasing")

    @property
    def path_count(self) -> int:
        return len(self.paths)


@dataclass
class ChannelRealization:
    """Channel sampled once per OFDM symbol.

    ``path_gains`` is ``[symbol, path]`` and already includes ``sqrt(P_i)``;
    ``freq_response`` is ``[symbol, subcarrier]``; ``taps`` are the integer
    sample delays of the paths.
    """

    path_gains: np.ndarray
    freq_response: np.ndarray
    taps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_symbols(self) -> int:
        return self.freq_response.shape[0]

    @property
    def fft_size(self) -> int:
        return self.freq_response.shape[1]

    def impulse_response(self) -> np.ndarray:
        """Sparse impulse response ``[symbol, max_tap + 1]``."""
        out = np.zeros((self.n_symbols, int(self.taps.max()) + 1), dtype=np.complex128)
        for i, tap in enumerate(self.taps):
            out[:, tap] += self.path_gains[:, i]
        return out


def delay_taps(profile: MultipathProfile, sample_rate: float) -> np.ndarray:
    return np.array([round(p.delay * sample_rate) for p in profile.paths], dtype=np.int64)


def realize_channel(
    profile: MultipathProfile,
    symbol_times,
    fft_size: int,
    sample_rate: float,
    cp_len: int | None = None,
) -> ChannelRealization:
    """Sample every path at the symbol instants and build ``h_s`` per symbol."""
    times = np.asarray(symbol_times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise InputError("symbol_times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise InputError("symbol_times must be strictly increasing")
    taps = delay_taps(profile, sample_rate)
    if np.any(taps < 0) or np.any(taps >= fft_size):
        raise ConfigError(f"delay taps {taps.tolist()} fall outside [0, {fft_size})")
    if cp_len is not None and np.any(taps >= cp_len):
        raise ConfigError(
            f"delay taps {taps.tolist()} reach the cyclic prefix length {cp_len}; ISI would occur"
        )

    gains = np.empty((times.size, profile.path_count), dtype=np.complex128)
    for i, path in enumerate(profile.paths):
        gains[:, i] = math.sqrt(path.power) * jakes_gain(path.jakes, times)

    impulse = np.zeros((times.size, fft_size), dtype=np.complex128)
    for i, tap in enumerate(taps):
        impulse[:, tap] += gains[:, i]
    return ChannelRealization(path_gains=gains, freq_response=fft(impulse), taps=taps)


def draw_profile(
    rng: np.random.Generator,
    sample_rate: float,
    *,
    n_paths: int = 3,
    max_delay_taps: int = 64,
    doppler_range_hz: tuple[float, float] = (5.0, 300.0),
    power_decay: float = 0.5,
    t_oscillators: int = 34,
    random_phase: bool = True,
) -> MultipathProfile:
    """Draw a random multipath profile.

    Delays are distinct integer taps in ``[0, max_delay_taps]``; powers decay
    geometrically with delay order and are normalized to unit sum; each path
    gets an independent maximum Doppler shift and, optionally, a random
    phase offset shared by its oscillators.
    """
    if n_paths < 1 or n_paths > max_delay_taps + 1:
        raise ConfigError(f"cannot place {n_paths} distinct taps in [0, {max_delay_taps}]")
    lo, hi = doppler_range_hz
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad doppler range {doppler_range_hz}")
    taps = np.sort(rng.choice(max_delay_taps + 1, size=n_paths, replace=False))
    powers = power_decay ** np.arange(n_paths, dtype=np.float64)
    powers /= powers.sum()
    dopplers = rng.uniform(lo, hi, size=n_paths)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_paths) if random_phase else np.zeros(n_paths)
    paths = tuple(
        PathSpec(
            power=float(p),
            delay=float(tap) / sample_rate,
            jakes=JakesConfig(
                e0=1.0,
                t_oscillators=t_oscillators,
                doppler_max=2 * math.pi * float(fd),
                phase_offset=float(ph),
            ),
        )
        for p, tap, fd, ph in zip(powers, taps, dopplers, phases)
    )
    return MultipathProfile(paths=paths)
