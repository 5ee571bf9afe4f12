"""Adam with bias correction, written functionally over a ParamSet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kdml.errors import InputError, NumericalError
from kdml.learn.params import ParamSet


@dataclass
class AdamState:
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step_count: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: ParamSet, lr: float = 0.01, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    zeros = {k: np.zeros_like(v) for k, v in params.arrays().items()}
    return AdamState(
        first_moment=zeros,
        second_moment={k: v.copy() for k, v in zeros.items()},
        lr=lr, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(adam: AdamState, params: ParamSet, grads: ParamSet) -> tuple[AdamState, ParamSet]:
    """Return the advanced optimizer state and the updated parameters.

    Inputs are left untouched.
    """
    p, g = params.arrays(), grads.arrays()
    if p.keys() != g.keys() or any(p[k].shape != g[k].shape for k in p):
        raise InputError("gradient does not match the parameter layout")
    t = adam.step_count + 1
    bc1 = 1.0 - adam.beta1**t
    bc2 = 1.0 - adam.beta2**t
    new_m, new_v, new_p = {}, {}, {}
    for k in p:
        m = adam.beta1 * adam.first_moment[k] + (1.0 - adam.beta1) * g[k]
        v = adam.beta2 * adam.second_moment[k] + (1.0 - adam.beta2) * g[k] * g[k]
        new_p[k] = p[k] - adam.lr * (m / bc1) / (np.sqrt(v / bc2) + adam.eps)
        new_m[k], new_v[k] = m, v
    out = params.with_arrays(new_p)
    if not out.all_finite():
        raise NumericalError("Adam produced non-finite parameters")
    state = AdamState(new_m, new_v, t, adam.lr, adam.beta1, adam.beta2, adam.eps)
    return state, out
