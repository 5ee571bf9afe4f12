"""Iterative radix-2 FFT operating on the last axis.

Unnormalized forward transform ``X[k] = sum_n x[n] exp(-2j pi k n / N)``;
:func:`ifft` includes the ``1/N`` factor, matching the numpy convention.
"""

from functools import lru_cache

import numpy as np

from kdml.errors import InputError


def _check_size(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise InputError(f"radix-2 FFT needs a power-of-two length, got {n}")


@lru_cache(maxsize=32)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=64)
def _twiddles(size: int) -> np.ndarray:
    return np.exp(-2j * np.pi * np.arange(size // 2) / size)


def _transform(x: np.ndarray, inverse: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    _check_size(n)
    lead = x.shape[:-1]
    a = x[..., _bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        tw = _twiddles(size)
        if inverse:
            tw = tw.conj()
        blocks = a.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(*lead, n)
        size *= 2
    return a


def fft(x: np.ndarray) -> np.ndarray:
    """Forward DFT along the last axis."""
    return _transform(x, inverse=False)


def ifft(x: np.ndarray) -> np.ndarray:
    """Inverse DFT along the last axis (includes the 1/N factor)."""
    x = np.asarray(x)
    return _transform(x, inverse=True) / x.shape[-1]

