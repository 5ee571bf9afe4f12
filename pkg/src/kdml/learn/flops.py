"""Closed-form operation count for LSTM inference."""

from dataclasses import dataclass

from kdml.errors import InputError


@dataclass(frozen=True)
class FlopsModel:
    """``n`` data length, ``i`` input size, ``m`` hidden size, ``l`` output size."""

    n: int
    i: int
    m: int
    l: int  # noqa: E741

    def __post_init__(self):
        for name in ("n", "i", "m", "l"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be positive")


def flops(model: FlopsModel) -> int:
    """Four gate blocks of ``i*m + m*m + m`` plus the dense head, per sample.

    Activations are not counted, so this is a lower bound on the true count.
    """
    n, i, m, l = model.n, model.i, model.m, model.l  # noqa: E741
    return n * 4 * (i * m + m * m + m) + n * m * l
