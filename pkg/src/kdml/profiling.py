"""Wall-clock measurements backing the complexity report."""

from __future__ import annotations

import time

import numpy as np

from kdml.estimators import EstimateSeries, EstimateSource, MmseContext, interpolate_linear, ls_estimate, mmse_estimate
from kdml.learn import forward, init_lstm
from kdml.ofdm import FrameGrid, OfdmConfig, build_tx_grid


def best_time(fn, repeats: int = 5) -> float:
    """Minimum wall time of ``repeats`` calls, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def loglog_slope(xs, times) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(times, float)), 1)[0])


def time_ls(n_symbols: int, cfg: OfdmConfig, rng: np.random.Generator, repeats: int = 5) -> float:
    """LS plus interpolation over ``n_symbols`` OFDM symbols."""
    grid = build_tx_grid(cfg, n_symbols, rng)
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    grid = FrameGrid(grid.tx_symbols, grid.tx_symbols + 0.1 * noise, grid.pilot_mask, 10.0, 0.02)
    return best_time(lambda: interpolate_linear(ls_estimate(grid), cfg.nps), repeats)


def time_mmse(n_pilots: int, window: int, rng: np.random.Generator, repeats: int = 5) -> float:
    """Autocorrelation, regularized solve and filtering over ``n_pilots`` pilots."""
    h = rng.standard_normal((window, n_pilots)) + 1j * rng.standard_normal((window, n_pilots))
    ls = EstimateSeries(h, EstimateSource.LS)

    def run():
        ctx = MmseContext.from_ls(ls, 0.1, window=window)
        mmse_estimate(ls, ctx)

    return best_time(run, repeats)


def time_lstm(n_windows: int, hidden: int, rng: np.random.Generator, n_steps: int = 8,
              repeats: int = 5) -> float:
    """Batched LSTM inference over ``n_windows`` windows of ``n_steps`` complex inputs."""
    params = init_lstm(2, hidden, 2, rng)
    x = rng.standard_normal((n_windows, n_steps, 2))
    return best_time(lambda: forward(params, x), repeats)
