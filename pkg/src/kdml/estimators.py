"""Pilot-based LS and MMSE channel estimation with linear interpolation.

These form the knowledge module: they turn received pilots into rough
channel estimates on the full time x subcarrier grid without any training.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from kdml.errors import InputError, NumericalError
from kdml.ofdm import FrameGrid


class EstimateSource(str, enum.Enum):
    LS = "ls"
    MMSE = "mmse"
    TRUE_CSI = "true_csi"
    KDML_REFINED = "kdml_refined"
    MLP = "mlp"


@dataclass
class EstimateSeries:
    """Channel estimates on a ``[symbol, subcarrier]`` grid.

    Positions not covered by the estimator hold NaN and are marked False in
    ``valid``.
    """

    estimates: np.ndarray
    source: EstimateSource
    valid: np.ndarray | None = None

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=np.complex128)
        if self.valid is None:
            self.valid = np.ones(self.estimates.shape, dtype=bool)

    @property
    def shape(self) -> tuple[int, int]:
        return self.estimates.shape

    def pilot_columns(self) -> np.ndarray:
        """Subcarrier indices that are valid on every symbol."""
        return np.flatnonzero(self.valid.all(axis=0))


@dataclass
class MmseContext:
    r_hh: np.ndarray
    noise_ratio: float
    ridge_eps: float = 0.0

    def __post_init__(self):
        self.r_hh = np.asarray(self.r_hh, dtype=np.complex128)
        if self.r_hh.ndim != 2 or self.r_hh.shape[0] != self.r_hh.shape[1]:
            raise InputError(f"r_hh must be square, got {self.r_hh.shape}")
        if not np.allclose(self.r_hh, self.r_hh.conj().T, rtol=0.0, atol=1e-10):
            raise InputError("r_hh is not Hermitian")
        if self.noise_ratio < 0 or self.ridge_eps < 0:
            raise InputError("noise_ratio and ridge_eps must be non-negative")

    @classmethod
    def from_ls(
        cls, ls: EstimateSeries, noise_ratio: float, window: int = 32
    ) -> "MmseContext":
        """Autocorrelation from the LS estimates plus the default Hermitian ridge."""
        r = estimate_autocorrelation(ls, window)
        ridge = 1e-6 * float(np.real(np.trace(r))) / r.shape[0]
        return cls(r_hh=r, noise_ratio=noise_ratio, ridge_eps=ridge)


def ls_estimate(grid: FrameGrid) -> EstimateSeries:
    """``y / x`` at every pilot position."""
    mask = grid.pilot_mask
    x = grid.tx_symbols[mask]
    if np.any(x == 0):
        raise InputError("zero-valued pilot symbol")
    est = np.full(grid.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    est[mask] = grid.rx_symbols[mask] / x
    return EstimateSeries(est, EstimateSource.LS, valid=mask.copy())


def estimate_autocorrelation(ls: EstimateSeries, window: int) -> np.ndarray:
    """Sample mean of ``h h^H`` over the trailing ``window`` symbols.

    Only pilot subcarriers enter the average; the result is
    ``[n_pilots, n_pilots]``.
    """
    cols = ls.pilot_columns()
    if window < 1 or cols.size == 0:
        raise InputError("autocorrelation needs a window >= 1 and at least one pilot")
    h = ls.estimates[-window:, cols]
    r = h.T @ h.conj() / h.shape[0]
    # exact Hermitian symmetry regardless of rounding in the product
    return 0.5 * (r + r.conj().T)


def mmse_estimate(ls: EstimateSeries, ctx: MmseContext) -> EstimateSeries:
    """Apply ``R (R + (noise_ratio + ridge) I)^{-1}`` to every symbol's pilots.

    Raises :class:`NumericalError` if the regularized system is not positive
    definite; callers fall back to LS.
    """
    cols = ls.pilot_columns()
    if ctx.r_hh.shape[0] != cols.size:
        raise InputError(f"r_hh is {ctx.r_hh.shape} but there are {cols.size} pilots")
    a = ctx.r_hh + (ctx.noise_ratio + ctx.ridge_eps) * np.eye(cols.size)
    h_ls = ls.estimates[:, cols]
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"MMSE system is singular or not finite: {exc}") from exc
    # rows are symbols: out^T = R A^{-1} h^T
    out = (ctx.r_hh @ scipy.linalg.cho_solve(factor, h_ls.T)).T
    est = np.full(ls.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    est[:, cols] = out
    return EstimateSeries(est, EstimateSource.MMSE, valid=ls.valid.copy())


def interpolate_linear(pilot_estimates: EstimateSeries, nps: int) -> EstimateSeries:
    """Fill every subcarrier from pilots at indices ``0, nps, 2*nps, ...``.

    Points past the last pilot repeat the last pilot value.
    """
    n_sc = pilot_estimates.shape[1]
    pilots = np.arange(0, n_sc, nps)
    if nps < 1 or pilots.size == 0:
        raise InputError("no pilots to interpolate from")
    if not pilot_estimates.valid[:, pilots].all():
        raise InputError(f"pilot positions (multiples of {nps}) are not all valid")
    hp = pilot_estimates.estimates[:, pilots]
    idx = np.arange(n_sc)
    left = np.minimum(idx // nps, pilots.size - 1)
    right = np.minimum(left + 1, pilots.size - 1)
    frac = (idx - pilots[left]) / nps
    frac[left == right] = 0.0
    h1 = hp[:, left]
    full = h1 + (hp[:, right] - h1) * frac
    return EstimateSeries(full, pilot_estimates.source)


def mse(est, truth) -> float:
    """Mean of ``|est - truth|^2`` over all entries."""
    a = est.estimates if isinstance(est, EstimateSeries) else np.asarray(est)
    b = truth.estimates if isinstance(truth, EstimateSeries) else np.asarray(truth)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d.real**2 + d.imag**2))


def knowledge_estimate(
    grid: FrameGrid, nps: int, method: str, mmse_window: int = 32
) -> EstimateSeries:
    """Full-grid LS or MMSE estimate of one frame (pilots then interpolation)."""
    ls = ls_estimate(grid)
    if method == "ls":
        return interpolate_linear(ls, nps)
    if method != "mmse":
        raise InputError(f"unknown knowledge estimator {method!r}")
    pilot_power = float(np.mean(np.abs(grid.tx_symbols[grid.pilot_mask]) ** 2))
    ctx = MmseContext.from_ls(ls, grid.noise_var / pilot_power, window=mmse_window)
    try:
        pilots = mmse_estimate(ls, ctx)
    except NumericalError:
        pilots = ls
    out = interpolate_linear(pilots, nps)
    out.source = EstimateSource.MMSE
    return out
