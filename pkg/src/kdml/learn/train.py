"""Mini-batch training loop shared by the LSTM and the MLP baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from kdml.errors import InputError, NumericalError
from kdml.learn import lstm, mlp
from kdml.learn.adam import AdamState, adam_step, init_adam
from kdml.learn.params import ParamSet


@dataclass
class WindowedDataset:
    """Supervised windows cut from per-subcarrier estimate sequences.

    ``inputs`` is ``[instance, n_steps, 2]`` (real, imag) and ``targets`` is
    ``[instance, 2 * horizon]`` laid out as ``re_1, im_1, re_2, im_2, ...``.
    ``positions`` optionally records ``(frame, first target symbol, subcarrier)``
    for every instance.
    """

    inputs: np.ndarray
    targets: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.ndim != 3 or self.inputs.shape[2] != 2:
            raise InputError(f"inputs must be [instance, steps, 2], got {self.inputs.shape}")
        if self.targets.ndim != 2 or self.targets.shape[0] != self.inputs.shape[0]:
            raise InputError("targets must be [instance, 2 * horizon] matching inputs")
        if self.targets.shape[1] % 2:
            raise InputError("targets need an even number of columns")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[1]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1] // 2

    @property
    def feature_dim(self) -> int:
        return self.inputs.shape[2]

    def subset(self, idx) -> "WindowedDataset":
        pos = None if self.positions is None else self.positions[idx]
        return WindowedDataset(self.inputs[idx], self.targets[idx], pos)


@dataclass
class TrainResult:
    params: ParamSet
    losses: list[float] = field(default_factory=list)
    adam: AdamState | None = None


def _loss_and_grad(params, x, y):
    if isinstance(params, lstm.LstmParams):
        return lstm.backward(params, x, y)
    if isinstance(params, mlp.MlpParams):
        return mlp.mlp_backward(params, x, y)
    raise InputError(f"no learner for {type(params).__name__}")


def predict(params: ParamSet, inputs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Batched inference for either learner."""
    fwd = lstm.forward if isinstance(params, lstm.LstmParams) else mlp.mlp_forward
    x = np.asarray(inputs, dtype=np.float64)
    return np.concatenate([fwd(params, x[s : s + chunk]) for s in range(0, len(x), chunk)])


def train(
    params: ParamSet,
    dataset: WindowedDataset,
    epochs: int,
    batch_size: int,
    rng: np.random.Generator,
    lr: float = 0.01,
    adam: AdamState | None = None,
) -> TrainResult:
    """Mini-batch Adam over reshuffled instances.

    Returns the final parameters and the per-epoch mean training loss.
    Raises :class:`NumericalError` as soon as the loss stops being finite.
    """
    n = len(dataset)
    if n == 0:
        raise InputError("empty dataset")
    if epochs < 0 or batch_size < 1:
        raise InputError("epochs must be >= 0 and batch_size >= 1")
    if adam is None:
        adam = init_adam(params, lr=lr)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = _loss_and_grad(params, dataset.inputs[idx], dataset.targets[idx])
            adam, params = adam_step(adam, params, grads)
            total += loss * idx.size
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise NumericalError("training diverged")
        losses.append(epoch_loss)
    return TrainResult(params=params, losses=losses, adam=adam)


def mlp_train(params: mlp.MlpParams, dataset: WindowedDataset, epochs: int,
              batch_size: int, rng: np.random.Generator, lr: float = 0.01) -> TrainResult:
    if not isinstance(params, mlp.MlpParams):
        raise InputError("mlp_train expects MlpParams")
    return train(params, dataset, epochs, batch_size, rng, lr=lr)
