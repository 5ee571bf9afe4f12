"""Central finite-difference gradient checks for any ParamSet learner."""

from __future__ import annotations

from typing import Callable

import numpy as np

from kdml.learn.params import ParamSet

LossFn = Callable[[ParamSet], float]


def numeric_gradient(loss_fn: LossFn, params: ParamSet, step: float = 1e-5) -> ParamSet:
    """Central differences, one coordinate at a time."""
    base = params.to_vector()
    grad = np.empty_like(base)
    for k in range(base.size):
        v = base.copy()
        v[k] += step
        up = loss_fn(params.from_vector(v))
        v[k] -= 2 * step
        down = loss_fn(params.from_vector(v))
        grad[k] = (up - down) / (2 * step)
    return params.from_vector(grad)


def relative_errors(analytic: ParamSet, numeric: ParamSet, floor: float = 1e-12) -> dict[str, float]:
    """Per-tensor ``|a - n| / max(|a|, |n|, floor)`` in the 2-norm."""
    out = {}
    num = numeric.arrays()
    for name, a in analytic.arrays().items():
        n = num[name]
        scale = max(np.linalg.norm(a), np.linalg.norm(n), floor)
        out[name] = float(np.linalg.norm(a - n) / scale)
    return out


def check_gradient(
    loss_and_grad: Callable[[ParamSet], tuple[float, ParamSet]],
    params: ParamSet,
    step: float = 1e-5,
) -> float:
    """Largest per-tensor relative error between the analytic and numeric gradients."""
    _, analytic = loss_and_grad(params)
    numeric = numeric_gradient(lambda p: loss_and_grad(p)[0], params, step)
    return max(relative_errors(analytic, numeric).values())
