"""Knowledge module followed by a trained refiner, plus the baselines.

One experiment *cell* is a ``(snr_db, nps, seed)`` triple. A cell simulates
disjoint training and test frames, runs every knowledge estimator on them,
cuts supervised windows at one shared set of positions and then trains and
scores each learner. Every estimator in a cell sees the same channels and
noise draws.
"""

from __future__ import annotations

import enum
import math
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from kdml.config import RunConfig
from kdml.errors import InputError
from kdml.estimators import EstimateSeries, knowledge_estimate, mse
from kdml.fading import ChannelRealization, MultipathProfile, draw_profile, realize_channel
from kdml.learn import (
    TrainResult,
    WindowedDataset,
    init_lstm,
    init_mlp,
    predict,
    train,
)
from kdml.ofdm import FrameGrid, OfdmConfig, apply_channel, build_tx_grid

# frames start at a random instant so the deterministic Jakes phases do not
# pin every realization to the same value at t = 0
FRAME_START_SPAN_S = 100.0


class Knowledge(str, enum.Enum):
    LS = "ls"
    MMSE = "mmse"
    TRUE_CSI = "true_csi"


class Learner(str, enum.Enum):
    LSTM = "lstm"
    MLP = "mlp"


@dataclass(frozen=True)
class KdmlVariant:
    knowledge: Knowledge
    learner: Learner = Learner.LSTM

    @property
    def label(self) -> str:
        if self.learner is Learner.MLP:
            return "MLP" if self.knowledge is Knowledge.LS else f"MLP({_SHORT[self.knowledge]})"
        return f"KDML({_SHORT[self.knowledge]})"


_SHORT = {Knowledge.LS: "LS", Knowledge.MMSE: "MMSE", Knowledge.TRUE_CSI: "H"}

VARIANTS = {
    "kdml-ls": KdmlVariant(Knowledge.LS),
    "kdml-mmse": KdmlVariant(Knowledge.MMSE),
    "kdml-h": KdmlVariant(Knowledge.TRUE_CSI),
    "mlp": KdmlVariant(Knowledge.LS, Learner.MLP),
}
KNOWLEDGE_ONLY = {"ls": "LS", "mmse": "MMSE-Sim"}


@dataclass
class ExperimentResult:
    snr_db: float
    nps: int
    estimator: str
    mse: float
    train_loss_curve: list[float] = field(default_factory=list)
    seed: int = 0
    wall_ms: float = 0.0

    def __post_init__(self):
        if not self.mse >= 0:
            raise InputError(f"mse must be non-negative, got {self.mse}")


@dataclass
class SimFrame:
    grid: FrameGrid
    channel: ChannelRealization
    profile: MultipathProfile
    start_time: float


@dataclass
class Normalizer:
    """Affine map applied to windows before the learner sees them."""

    offset_re: float = 0.0
    offset_im: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, inputs: np.ndarray) -> "Normalizer":
        flat = inputs.reshape(-1, 2)
        mean = flat.mean(axis=0)
        scale = float(np.sqrt(np.mean(np.sum((flat - mean) ** 2, axis=1) / 2.0)))
        return cls(float(mean[0]), float(mean[1]), scale if scale > 0 else 1.0)

    def _offset(self, width: int) -> np.ndarray:
        return np.tile([self.offset_re, self.offset_im], width // 2)

    def apply_inputs(self, x: np.ndarray) -> np.ndarray:
        return (x - np.array([self.offset_re, self.offset_im])) / self.scale

    def apply_targets(self, y: np.ndarray) -> np.ndarray:
        return (y - self._offset(y.shape[-1])) / self.scale

    def invert_targets(self, y: np.ndarray) -> np.ndarray:
        return y * self.scale + self._offset(y.shape[-1])


@dataclass
class CellData:
    """Windows for one cell, keyed by knowledge source.

    ``truth`` holds the true channel at the target positions of the test
    windows, laid out like the targets.
    """

    snr_db: float
    nps: int
    seed: int
    train: dict[str, WindowedDataset]
    test: dict[str, WindowedDataset]
    truth: np.ndarray
    path_gains: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0), complex))
    taps: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), np.int64))


@dataclass
class VariantOutcome:
    result: ExperimentResult
    training: TrainResult
    normalizer: Normalizer


# -- random streams -----------------------------------------------------------


def cell_seed(seed: int, snr_db: float, nps: int) -> np.random.SeedSequence:
    """Private stream for one cell, derived from the master seed and the cell id."""
    cell_id = zlib.crc32(f"{float(snr_db)!r}|{int(nps)}".encode())
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(cell_id,))


def channel_seed(seed: int) -> np.random.SeedSequence:
    """Stream shared by every cell of one seed.

    Channel draws and window positions come from here, so all SNR and NPS
    cells of a seed see the same channels (common random numbers).
    """
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(b"channel"),))


def _stream(parent: np.random.SeedSequence, name: str) -> np.random.Generator:
    child = np.random.SeedSequence(
        entropy=parent.entropy, spawn_key=parent.spawn_key + (zlib.crc32(name.encode()),)
    )
    return np.random.default_rng(child)


# -- simulation ---------------------------------------------------------------


def simulate_frames(
    config: RunConfig,
    ofdm: OfdmConfig,
    n_frames: int,
    snr_db: float,
    rng: np.random.Generator,
    signal_rng: np.random.Generator | None = None,
) -> list[SimFrame]:
    """``rng`` drives the channel draws, ``signal_rng`` the data bits and noise.

    Without ``signal_rng`` everything comes from ``rng``.
    """
    signal_rng = rng if signal_rng is None else signal_rng
    frames = []
    for _ in range(n_frames):
        profile = draw_profile(
            rng,
            ofdm.sample_rate,
            n_paths=config.n_paths,
            max_delay_taps=config.max_delay_taps,
            doppler_range_hz=(config.doppler_min_hz, config.doppler_max_hz),
            power_decay=config.power_decay,
            t_oscillators=config.jakes_oscillators,
            random_phase=config.random_path_phase,
        )
        start = float(rng.uniform(0.0, FRAME_START_SPAN_S))
        times = start + ofdm.symbol_duration * np.arange(config.symbols_per_frame)
        chan = realize_channel(profile, times, ofdm.fft_size, ofdm.sample_rate, ofdm.cp_len)
        tx = build_tx_grid(ofdm, config.symbols_per_frame, signal_rng)
        grid = apply_channel(tx, chan, snr_db, signal_rng)
        frames.append(SimFrame(grid, chan, profile, start))
    return frames


def rough_estimates(frame: SimFrame, knowledge: Knowledge, nps: int, mmse_window: int) -> np.ndarray:
    """Full-grid estimate ``[symbol, subcarrier]`` from one knowledge source."""
    if knowledge is Knowledge.TRUE_CSI:
        return frame.channel.freq_response
    return knowledge_estimate(frame.grid, nps, knowledge.value, mmse_window).estimates


# -- windowing ----------------------------------------------------------------


def _split(values: np.ndarray) -> np.ndarray:
    return np.stack((values.real, values.imag), axis=-1)


def build_dataset(rough, n_steps: int, horizon: int, frame: int = 0) -> WindowedDataset:
    """Every sliding window over the time axis of every subcarrier.

    Inputs are ``n_steps`` consecutive estimates, targets the next ``horizon``
    estimates of the same series.
    """
    h = rough.estimates if isinstance(rough, EstimateSeries) else np.asarray(rough)
    n_sym, n_sc = h.shape
    per_sc = n_sym - n_steps - horizon + 1
    if n_steps < 1 or horizon < 1 or per_sc < 1:
        raise InputError(
            f"series of {n_sym} symbols is too short for n_steps={n_steps}, horizon={horizon}"
        )
    starts = np.repeat(np.arange(per_sc), n_sc)
    subcarriers = np.tile(np.arange(n_sc), per_sc)
    positions = np.column_stack(
        (np.full(starts.size, frame), starts + n_steps, subcarriers)
    )
    return _gather([h], positions, n_steps, horizon)


def _gather(series: list[np.ndarray], positions: np.ndarray, n_steps: int, horizon: int) -> WindowedDataset:
    f, t, k = positions.T
    steps = np.arange(-n_steps, horizon)
    # index every frame's series with (time, subcarrier) per window
    rows = np.empty((positions.shape[0], steps.size), dtype=np.complex128)
    for frame_idx in np.unique(f):
        sel = f == frame_idx
        rows[sel] = series[frame_idx][t[sel, None] + steps, k[sel, None]]
    inputs = _split(rows[:, :n_steps])
    targets = _split(rows[:, n_steps:]).reshape(len(rows), 2 * horizon)
    return WindowedDataset(inputs, targets, positions.astype(np.int64))


def sample_positions(
    n_frames: int, n_symbols: int, n_sc: int, n_windows: int, n_steps: int, horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Uniform draw of distinct ``(frame, first target symbol, subcarrier)`` triples."""
    per_sc = n_symbols - n_steps - horizon + 1
    total = n_frames * per_sc * n_sc
    if n_windows > total:
        raise InputError(f"asked for {n_windows} windows but only {total} exist")
    flat = np.sort(rng.choice(total, size=n_windows, replace=False))
    frame, rest = np.divmod(flat, per_sc * n_sc)
    start, sc = np.divmod(rest, n_sc)
    return np.column_stack((frame, start + n_steps, sc)).astype(np.int64)


def generate_cell(config: RunConfig, snr_db: float, nps: int, seed: int) -> CellData:
    """Simulate one cell and cut the windows for every knowledge source."""
    ofdm = config.ofdm(nps)
    root = cell_seed(seed, snr_db, nps)
    shared = channel_seed(seed)
    n_train = math.ceil(config.train_windows / config.windows_per_frame)
    n_test = math.ceil(config.test_windows / config.windows_per_frame)
    train_frames = simulate_frames(
        config, ofdm, n_train, snr_db, _stream(shared, "train-frames"), _stream(root, "train-signal")
    )
    test_frames = simulate_frames(
        config, ofdm, n_test, snr_db, _stream(shared, "test-frames"), _stream(root, "test-signal")
    )
    pick = _stream(shared, "positions")
    args = (config.symbols_per_frame, ofdm.fft_size)
    train_pos = sample_positions(n_train, *args, config.train_windows, config.n_steps, config.horizon, pick)
    test_pos = sample_positions(n_test, *args, config.test_windows, config.n_steps, config.horizon, pick)

    train, test = {}, {}
    for knowledge in Knowledge:
        tr = [rough_estimates(fr, knowledge, nps, config.mmse_window) for fr in train_frames]
        te = [rough_estimates(fr, knowledge, nps, config.mmse_window) for fr in test_frames]
        train[knowledge.value] = _gather(tr, train_pos, config.n_steps, config.horizon)
        test[knowledge.value] = _gather(te, test_pos, config.n_steps, config.horizon)
    truth = test[Knowledge.TRUE_CSI.value].targets.copy()

    all_frames = train_frames + test_frames
    return CellData(
        snr_db=snr_db,
        nps=nps,
        seed=seed,
        train=train,
        test=test,
        truth=truth,
        path_gains=np.stack([fr.channel.path_gains for fr in all_frames]),
        taps=np.stack([fr.channel.taps for fr in all_frames]),
    )


# -- learners -----------------------------------------------------------------


def to_complex(pairs: np.ndarray) -> np.ndarray:
    """``[..., 2M]`` real layout back to ``[..., M]`` complex."""
    p = np.asarray(pairs)
    return p[..., 0::2] + 1j * p[..., 1::2]


def init_learner(variant: KdmlVariant, config: RunConfig, rng: np.random.Generator):
    out_dim = 2 * config.horizon
    if variant.learner is Learner.MLP:
        return init_mlp(2 * config.n_steps, config.mlp_width, out_dim, rng)
    return init_lstm(2, config.hidden, out_dim, rng, forget_bias=config.forget_bias)


def learner_stream(data: CellData, variant_name: str) -> np.random.Generator:
    return _stream(cell_seed(data.seed, data.snr_db, data.nps), f"learner:{variant_name}")


def run_kdml(
    variant_name: str, data: CellData, config: RunConfig, epochs: int | None = None
) -> VariantOutcome:
    """Train one learner on its knowledge source and score it against true CSI.

    Training only touches the rough estimates of the chosen knowledge
    source; the true channel enters only through ``data.truth`` at scoring
    time (and as the knowledge source of KDML(H)).
    """
    variant = VARIANTS[variant_name]
    rng = learner_stream(data, variant_name)
    started = time.perf_counter()
    params = init_learner(variant, config, rng)
    train_set = data.train[variant.knowledge.value]
    normalizer = Normalizer.fit(train_set.inputs) if config.normalize else Normalizer()
    scaled = WindowedDataset(
        normalizer.apply_inputs(train_set.inputs), normalizer.apply_targets(train_set.targets)
    )
    n_epochs = config.epochs if epochs is None else epochs
    trained = train(params, scaled, n_epochs, config.batch_size, rng, lr=config.lr)
    refined = evaluate_learner(trained.params, normalizer, data.test[variant.knowledge.value])
    wall = (time.perf_counter() - started) * 1e3
    result = ExperimentResult(
        snr_db=data.snr_db,
        nps=data.nps,
        estimator=variant.label,
        mse=mse(to_complex(refined), to_complex(data.truth)),
        train_loss_curve=list(trained.losses),
        seed=data.seed,
        wall_ms=wall,
    )
    return VariantOutcome(result, trained, normalizer)


def evaluate_learner(params, normalizer: Normalizer, test_set: WindowedDataset) -> np.ndarray:
    """Refined estimates in the target layout for every test window."""
    pred = predict(params, normalizer.apply_inputs(test_set.inputs))
    return normalizer.invert_targets(pred)


def knowledge_result(name: str, data: CellData) -> ExperimentResult:
    """Score a knowledge estimator on exactly the positions the learners predict."""
    started = time.perf_counter()
    est = data.test[name].targets
    value = mse(to_complex(est), to_complex(data.truth))
    return ExperimentResult(
        snr_db=data.snr_db,
        nps=data.nps,
        estimator=KNOWLEDGE_ONLY[name],
        mse=value,
        seed=data.seed,
        wall_ms=(time.perf_counter() - started) * 1e3,
    )


def run_baselines(data: CellData, config: RunConfig, include_mlp: bool = True) -> list[ExperimentResult]:
    """LS, MMSE-Sim and (optionally) the MLP rows of one cell."""
    rows = [knowledge_result("ls", data), knowledge_result("mmse", data)]
    if include_mlp:
        rows.append(run_kdml("mlp", data, config).result)
    return rows


def run_cell(
    config: RunConfig, snr_db: float, nps: int, seed: int, estimators: list[str]
) -> list[ExperimentResult]:
    """Generate one cell and score the requested estimators in the given order.

    ``estimators`` may contain ``ls``, ``mmse`` and any key of :data:`VARIANTS`.
    """
    data = generate_cell(config, snr_db, nps, seed)
    rows = []
    for name in estimators:
        if name in KNOWLEDGE_ONLY:
            rows.append(knowledge_result(name, data))
        elif name in VARIANTS:
            rows.append(run_kdml(name, data, config).result)
        else:
            raise InputError(f"unknown estimator {name!r}")
    return rows
