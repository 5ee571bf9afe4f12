"""Sweeps over (SNR, NPS, seed) cells and the reduced reproduction setups."""

from __future__ import annotations

import dataclasses
import logging
from collections import defaultdict
from typing import Callable

from kdml.config import RunConfig
from kdml.pipeline import ExperimentResult, run_cell

log = logging.getLogger(__name__)

ALL_ESTIMATORS = ("ls", "mmse", "kdml-ls", "kdml-mmse", "kdml-h", "mlp")


def desk_config(**overrides) -> RunConfig:
    """Reduced setup: hidden 64, 8 input steps, 10,000/2,000 windows, 30 epochs, 3 seeds."""
    base = RunConfig(
        hidden=64,
        n_steps=8,
        horizon=1,
        train_windows=10_000,
        test_windows=2_000,
        epochs=30,
        seeds=(0, 1, 2),
        snr_list=(5.0, 10.0, 15.0, 20.0, 25.0),
        nps_list=(2, 16),
    )
    return dataclasses.replace(base, **overrides)


def sweep(
    config: RunConfig,
    plan: list[tuple[float, int, tuple[str, ...]]] | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[ExperimentResult]:
    """Run every cell of ``plan`` for every seed of ``config``.

    ``plan`` defaults to all estimators on the full ``snr_list x nps_list`` grid.
    Rows come out ordered by seed, then plan order.
    """
    if plan is None:
        plan = [(snr, nps, ALL_ESTIMATORS) for nps in config.nps_list for snr in config.snr_list]
    rows = []
    for seed in config.seeds:
        for snr, nps, estimators in plan:
            cell_rows = run_cell(config, snr, nps, seed, list(estimators))
            for r in cell_rows:
                msg = f"seed={seed} snr={snr:g} nps={nps} {r.estimator}: mse={r.mse:.4e}"
                log.info(msg)
                if progress:
                    progress(msg)
            rows.extend(cell_rows)
    return rows


def reproduction_plan(config: RunConfig) -> list[tuple[float, int, tuple[str, ...]]]:
    """Cells needed for the MSE-vs-SNR and pilot-density comparisons.

    Full estimator set at NPS=2 on every SNR; KDML(LS) and the knowledge
    baselines at NPS=16 for SNR <= 15 dB.
    """
    plan = [(snr, 2, ("ls", "mmse", "kdml-ls", "kdml-h", "mlp")) for snr in config.snr_list]
    plan += [(snr, 16, ("ls", "mmse", "kdml-ls")) for snr in config.snr_list if snr <= 15]
    return plan


def seed_means(rows: list[ExperimentResult]) -> dict[tuple[str, float, int], float]:
    """Mean MSE over seeds keyed by ``(estimator, snr_db, nps)``."""
    acc = defaultdict(list)
    for r in rows:
        acc[(r.estimator, r.snr_db, r.nps)].append(r.mse)
    return {k: sum(v) / len(v) for k, v in acc.items()}
