"""Figures for the sweep and evaluate commands (matplotlib, written as SVG)."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from kdml.pipeline import ExperimentResult  # noqa: E402

_STYLE = {
    "LS": dict(marker="o", color="tab:gray"),
    "MMSE-Sim": dict(marker="s", color="tab:blue"),
    "MLP": dict(marker="^", color="tab:orange"),
    "KDML(LS)": dict(marker="D", color="tab:red"),
    "KDML(MMSE)": dict(marker="v", color="tab:purple"),
    "KDML(H)": dict(marker="x", color="tab:green"),
}


def mean_curves(rows: list[ExperimentResult]) -> dict[tuple[str, int], tuple[list[float], list[float]]]:
    """Seed-averaged MSE per ``(estimator, nps)``, as sorted (snr, mse) lists."""
    acc = defaultdict(list)
    for r in rows:
        acc[(r.estimator, r.nps, r.snr_db)].append(r.mse)
    curves = defaultdict(dict)
    for (est, nps, snr), values in acc.items():
        curves[(est, nps)][snr] = sum(values) / len(values)
    return {k: (sorted(v), [v[s] for s in sorted(v)]) for k, v in curves.items()}


def plot_mse_vs_snr(rows: list[ExperimentResult], path, nps: int | None = None) -> None:
    """MSE against SNR on a log axis, one line per estimator (and per NPS if mixed)."""
    curves = mean_curves(rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for (est, n), (snr, mse) in sorted(curves.items()):
        if nps is not None and n != nps:
            continue
        label = est if nps is not None else f"{est} (NPS={n})"
        style = dict(_STYLE.get(est, {}))
        if nps is None and n != min(k[1] for k in curves):
            style["linestyle"] = "--"
        ax.semilogy(snr, mse, label=label, **style)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("MSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    if nps is not None:
        ax.set_title(f"NPS = {nps}")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
