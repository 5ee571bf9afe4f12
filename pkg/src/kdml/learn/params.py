"""Common container behaviour for trainable parameter sets."""

from __future__ import annotations

import numpy as np

from kdml.errors import InputError


class ParamSet:
    """Named float64 arrays in a fixed declaration order.

    Subclasses implement :meth:`arrays` and :meth:`with_arrays`; everything
    else (flattening, arithmetic helpers) is shared.
    """

    def arrays(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def with_arrays(self, arrays: dict[str, np.ndarray]):
        raise NotImplementedError

    def zeros_like(self):
        return self.with_arrays({k: np.zeros_like(v) for k, v in self.arrays().items()})

    @property
    def size(self) -> int:
        return sum(v.size for v in self.arrays().values())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.arrays().values()])

    def from_vector(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.size:
            raise InputError(f"expected {self.size} values, got {vec.size}")
        out, pos = {}, 0
        for name, arr in self.arrays().items():
            out[name] = vec[pos : pos + arr.size].reshape(arr.shape).copy()
            pos += arr.size
        return self.with_arrays(out)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays().values())
