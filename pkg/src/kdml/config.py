"""Run configuration with a plain ``key=value`` text form and a stable hash."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, fields
from pathlib import Path

from kdml.errors import ConfigError
from kdml.ofdm import OfdmConfig

FULL_TRAIN_WINDOWS = 27_000
FULL_TEST_WINDOWS = 3_000


@dataclass(frozen=True)
class RunConfig:
    # link
    fft_size: int = 1024
    subcarrier_spacing: float = 15e3
    sample_rate: float = 15.36e6
    cp_len: int = 128
    symbols_per_frame: int = 40
    # multipath draws
    n_paths: int = 3
    max_delay_taps: int = 8
    doppler_min_hz: float = 5.0
    doppler_max_hz: float = 300.0
    power_decay: float = 0.5
    jakes_oscillators: int = 34
    random_path_phase: bool = True
    # knowledge module
    mmse_window: int = 32
    # learner
    hidden: int = 128
    n_steps: int = 8
    horizon: int = 1
    epochs: int = 100
    batch_size: int = 500
    lr: float = 0.01
    mlp_width: int = 64
    forget_bias: float = 0.0
    normalize: bool = False
    # experiment grid
    train_windows: int = FULL_TRAIN_WINDOWS
    test_windows: int = FULL_TEST_WINDOWS
    windows_per_frame: int = 128
    snr_list: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0)
    nps_list: tuple[int, ...] = (2,)
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.snr_list or not self.nps_list or not self.seeds:
            raise ConfigError("snr_list, nps_list and seeds must be non-empty")
        for nps in self.nps_list:
            self.ofdm(nps)
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.max_delay_taps >= self.cp_len:
            raise ConfigError("max_delay_taps must stay below cp_len")
        if self.symbols_per_frame < self.n_steps + self.horizon:
            raise ConfigError("symbols_per_frame must cover n_steps + horizon")
        positive = ("hidden", "n_steps", "horizon", "batch_size", "mlp_width",
                    "train_windows", "test_windows", "windows_per_frame", "mmse_window")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.epochs < 0 or not self.lr > 0:
            raise ConfigError("epochs must be >= 0 and lr > 0")

    def ofdm(self, nps: int) -> OfdmConfig:
        return OfdmConfig(
            fft_size=self.fft_size,
            subcarrier_spacing=self.subcarrier_spacing,
            sample_rate=self.sample_rate,
            cp_len=self.cp_len,
            nps=nps,
        )

    def scaled(self, scale: float) -> "RunConfig":
        """Scale the train/test instance counts relative to the full 27,000/3,000."""
        if not scale > 0:
            raise ConfigError("scale must be positive")
        return dataclasses.replace(
            self,
            train_windows=max(1, round(FULL_TRAIN_WINDOWS * scale)),
            test_windows=max(1, round(FULL_TEST_WINDOWS * scale)),
        )

    # -- text form ------------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(_fmt(v) for v in value)
            else:
                value = _fmt(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def from_mapping(cls, raw: dict[str, str], base: "RunConfig | None" = None) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        defaults = base if base is not None else cls()
        values = {}
        for key, text in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(getattr(defaults, key), text, key)
        return dataclasses.replace(defaults, **values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def config_hash(self) -> str:
        """First 16 hex digits of the SHA-256 of the text form; ignores ``out_dir``."""
        text = dataclasses.replace(self, out_dir="").to_text()
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(default, text: str, key: str):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, tuple):
            item = type(default[0]) if default else float
            return tuple(item(v) for v in text.split(",") if v.strip())
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
            return value
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc
