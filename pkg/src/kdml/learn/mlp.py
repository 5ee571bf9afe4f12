"""Fully connected ReLU baseline: six affine layers, no activation after the last."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kdml.errors import InputError, NumericalError
from kdml.learn.params import ParamSet

N_LAYERS = 6


@dataclass
class MlpParams(ParamSet):
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InputError("weights and biases must pair up")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise InputError(f"layer {k}: bias {b.shape} does not match weight {w.shape}")
            if k and self.weights[k - 1].shape[1] != w.shape[0]:
                raise InputError(f"layer {k}: input size does not chain")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{k}"] = w
            out[f"b{k}"] = b
        return out

    def with_arrays(self, arrays: dict[str, np.ndarray]) -> "MlpParams":
        n = len(arrays) // 2
        return MlpParams(
            weights=[np.asarray(arrays[f"w{k}"], dtype=np.float64) for k in range(n)],
            biases=[np.asarray(arrays[f"b{k}"], dtype=np.float64) for k in range(n)],
        )


def init_mlp(
    input_dim: int,
    width: int,
    output_dim: int,
    rng: np.random.Generator,
    n_layers: int = N_LAYERS,
) -> MlpParams:
    """He-uniform weights for the ReLU layers, ``+-1/sqrt(fan_in)`` for the last; zero biases."""
    dims = [input_dim] + [width] * (n_layers - 1) + [output_dim]
    weights, biases = [], []
    for k in range(n_layers):
        fan_in = dims[k]
        bound = np.sqrt(6.0 / fan_in) if k < n_layers - 1 else 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(dims[k], dims[k + 1])))
        biases.append(np.zeros(dims[k + 1]))
    return MlpParams(weights, biases)


def _flatten(params: MlpParams, window: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(window, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    x = x.reshape(x.shape[0], -1)
    if x.shape[1] != params.input_dim:
        raise InputError(f"MLP expects {params.input_dim} inputs per instance, got {x.shape[1]}")
    return x, single


def mlp_forward(params: MlpParams, window: np.ndarray) -> np.ndarray:
    """``window`` is ``[steps, features]`` or ``[batch, steps, features]``; it is flattened."""
    a, single = _flatten(params, window)
    last = params.n_layers - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if k < last:
            a = np.maximum(a, 0.0)
    if not np.all(np.isfinite(a)):
        raise NumericalError("non-finite MLP output")
    return a[0] if single else a


def mlp_backward(
    params: MlpParams, window: np.ndarray, target: np.ndarray
) -> tuple[float, MlpParams]:
    x, single = _flatten(params, window)
    y_true = np.asarray(target, dtype=np.float64)
    if single:
        y_true = y_true[None]
    batch = x.shape[0]
    last = params.n_layers - 1

    inputs, pre = [], []
    a = x
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0) if k < last else z

    resid = a - y_true
    n_complex = a.shape[1] // 2
    loss = float(np.sum(resid**2) / (n_complex * batch))
    delta = 2.0 * resid / (n_complex * batch)

    dws, dbs = [None] * params.n_layers, [None] * params.n_layers
    for k in reversed(range(params.n_layers)):
        if k < last:
            delta = delta * (pre[k] > 0)
        dws[k] = inputs[k].T @ delta
        dbs[k] = delta.sum(axis=0)
        delta = delta @ params.weights[k].T

    grads = MlpParams(dws, dbs)
    if not np.isfinite(loss) or not grads.all_finite():
        raise NumericalError("non-finite loss or gradient")
    return loss, grads
