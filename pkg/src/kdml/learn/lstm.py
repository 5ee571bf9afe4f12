"""Single-layer LSTM with a dense output head, forward and BPTT.

Row-vector convention throughout: the gate pre-activation is
``[x_t, h_{t-1}] @ W + b`` with ``W`` of shape ``(input_dim + hidden_dim, hidden_dim)``
and the head is ``h_T @ W_g + b_g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kdml.errors import InputError, NumericalError
from kdml.learn.params import ParamSet

GATE_NAMES = ("w_f", "b_f", "w_i", "b_i", "w_c", "b_c", "w_o", "b_o", "w_g", "b_g")


@dataclass
class LstmParams(ParamSet):
    w_f: np.ndarray
    b_f: np.ndarray
    w_i: np.ndarray
    b_i: np.ndarray
    w_c: np.ndarray
    b_c: np.ndarray
    w_o: np.ndarray
    b_o: np.ndarray
    w_g: np.ndarray
    b_g: np.ndarray

    def __post_init__(self):
        shape = self.w_f.shape
        for w in (self.w_i, self.w_c, self.w_o):
            if w.shape != shape:
                raise InputError("all four gate matrices must share one shape")
        m = self.hidden_dim
        if shape[0] <= m:
            raise InputError(f"gate matrix {shape} leaves no room for the input")
        for b in (self.b_f, self.b_i, self.b_c, self.b_o):
            if b.shape != (m,):
                raise InputError(f"gate bias must have shape ({m},), got {b.shape}")
        if self.w_g.shape[0] != m or self.b_g.shape != (self.w_g.shape[1],):
            raise InputError("dense head shape does not match the hidden size")

    @property
    def hidden_dim(self) -> int:
        return self.w_f.shape[1]

    @property
    def input_dim(self) -> int:
        return self.w_f.shape[0] - self.w_f.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w_g.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in GATE_NAMES}

    def with_arrays(self, arrays: dict[str, np.ndarray]) -> "LstmParams":
        return LstmParams(**{name: np.asarray(arrays[name], dtype=np.float64) for name in GATE_NAMES})

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Gate weights side by side in f, i, o, c order: ``(in+m, 4m)`` and ``(4m,)``.

        The three sigmoid gates come first so they can be activated in one call.
        """
        w = np.concatenate((self.w_f, self.w_i, self.w_o, self.w_c), axis=1)
        b = np.concatenate((self.b_f, self.b_i, self.b_o, self.b_c))
        return w, b


@dataclass
class LstmState:
    hidden: np.ndarray
    cell: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int, batch: int | None = None) -> "LstmState":
        shape = (hidden_dim,) if batch is None else (batch, hidden_dim)
        return cls(np.zeros(shape), np.zeros(shape))


def init_lstm(
    input_dim: int,
    hidden_dim: int,
    output_dim: int,
    rng: np.random.Generator,
    forget_bias: float = 0.0,
) -> LstmParams:
    """Uniform weights in ``+-1/sqrt(hidden_dim)``, zero biases.

    ``forget_bias`` is added to ``b_f`` only when non-zero.
    """
    bound = 1.0 / np.sqrt(hidden_dim)
    rows = input_dim + hidden_dim

    def w(shape):
        return rng.uniform(-bound, bound, size=shape)

    return LstmParams(
        w_f=w((rows, hidden_dim)),
        b_f=np.full(hidden_dim, float(forget_bias)),
        w_i=w((rows, hidden_dim)),
        b_i=np.zeros(hidden_dim),
        w_c=w((rows, hidden_dim)),
        b_c=np.zeros(hidden_dim),
        w_o=w((rows, hidden_dim)),
        b_o=np.zeros(hidden_dim),
        w_g=w((hidden_dim, output_dim)),
        b_g=np.zeros(output_dim),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _gates(params: LstmParams, w: np.ndarray, b: np.ndarray, z: np.ndarray):
    m = params.hidden_dim
    a = z @ w + b
    s = _sigmoid(a[..., : 3 * m])
    g = np.tanh(a[..., 3 * m :])
    return s[..., :m], s[..., m : 2 * m], g, s[..., 2 * m :]


def lstm_step(params: LstmParams, state: LstmState, x_t: np.ndarray) -> LstmState:
    """One cell update. ``x_t`` may be ``[input_dim]`` or ``[batch, input_dim]``."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != params.input_dim:
        raise InputError(f"input has {x_t.shape[-1]} features, cell expects {params.input_dim}")
    if state.hidden.shape[-1] != params.hidden_dim:
        raise InputError("state size does not match the hidden size")
    w, b = params.stacked()
    z = np.concatenate((x_t, np.broadcast_to(state.hidden, x_t.shape[:-1] + state.hidden.shape[-1:])), axis=-1)
    f, i, g, o = _gates(params, w, b, z)
    cell = f * state.cell + i * g
    hidden = o * np.tanh(cell)
    if not (np.all(np.isfinite(cell)) and np.all(np.isfinite(hidden))):
        raise NumericalError("non-finite LSTM state")
    return LstmState(hidden=hidden, cell=cell)


def dense_forward(params: LstmParams, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != params.hidden_dim:
        raise InputError(f"dense layer expects {params.hidden_dim} inputs, got {h.shape[-1]}")
    return h @ params.w_g + params.b_g


def _check_window(params: LstmParams, window: np.ndarray) -> np.ndarray:
    x = np.asarray(window, dtype=np.float64)
    if x.ndim not in (2, 3) or x.shape[-1] != params.input_dim:
        raise InputError(
            f"window must be [steps, {params.input_dim}] or [batch, steps, {params.input_dim}], got {x.shape}"
        )
    return x


def forward(params: LstmParams, window: np.ndarray) -> np.ndarray:
    """Run the cell over every timestep from a zero state, then the head.

    ``window`` is ``[steps, features]`` or ``[batch, steps, features]``.
    """
    x = _check_window(params, window)
    single = x.ndim == 2
    if single:
        x = x[None]
    w, b = params.stacked()
    m = params.hidden_dim
    h = np.zeros((x.shape[0], m))
    c = np.zeros_like(h)
    for t in range(x.shape[1]):
        f, i, g, o = _gates(params, w, b, np.concatenate((x[:, t], h), axis=1))
        c = f * c + i * g
        h = o * np.tanh(c)
    y = dense_forward(params, h)
    if not np.all(np.isfinite(y)):
        raise NumericalError("non-finite LSTM output")
    return y[0] if single else y


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Squared error summed over real/imag parts, divided by the number of complex outputs.

    Batched inputs ``[batch, 2M]`` are averaged over the batch.
    """
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape or p.shape[-1] % 2:
        raise InputError(f"pred {p.shape} and target {t.shape} must match with an even last axis")
    n_complex = p.shape[-1] // 2
    per_instance = np.sum((p - t) ** 2, axis=-1) / n_complex
    return float(np.mean(per_instance))


def backward(
    params: LstmParams, window: np.ndarray, target: np.ndarray
) -> tuple[float, LstmParams]:
    """Loss and its exact gradient via backpropagation through time.

    The loss is :func:`mse_loss` averaged over the batch, so a batch of
    duplicated instances has the same gradient as one instance.
    """
    x = _check_window(params, window)
    y_true = np.asarray(target, dtype=np.float64)
    if x.ndim == 2:
        x, y_true = x[None], y_true[None]
    batch, steps, n_in = x.shape
    m = params.hidden_dim
    w, b = params.stacked()

    zs, cs, hs, acts = [], [np.zeros((batch, m))], [np.zeros((batch, m))], []
    for t in range(steps):
        z = np.concatenate((x[:, t], hs[-1]), axis=1)
        f, i, g, o = _gates(params, w, b, z)
        c = f * cs[-1] + i * g
        zs.append(z)
        acts.append((f, i, g, o, np.tanh(c)))
        cs.append(c)
        hs.append(o * acts[-1][4])

    y = hs[-1] @ params.w_g + params.b_g
    resid = y - y_true
    n_complex = y.shape[1] // 2
    loss = float(np.sum(resid**2) / (n_complex * batch))
    dy = 2.0 * resid / (n_complex * batch)

    dw_g = hs[-1].T @ dy
    db_g = dy.sum(axis=0)
    dh = dy @ params.w_g.T
    dc = np.zeros((batch, m))
    dw = np.zeros_like(w)
    db = np.zeros_like(b)
    for t in reversed(range(steps)):
        f, i, g, o, tc = acts[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc**2)
        da = np.concatenate(
            (
                dc * cs[t] * f * (1.0 - f),
                dc * g * i * (1.0 - i),
                do * o * (1.0 - o),
                dc * i * (1.0 - g**2),
            ),
            axis=1,
        )
        dc = dc * f
        dw += zs[t].T @ da
        db += da.sum(axis=0)
        dh = da @ w[n_in:].T

    grads = {
        "w_f": dw[:, :m], "b_f": db[:m],
        "w_i": dw[:, m : 2 * m], "b_i": db[m : 2 * m],
        "w_o": dw[:, 2 * m : 3 * m], "b_o": db[2 * m : 3 * m],
        "w_c": dw[:, 3 * m :], "b_c": db[3 * m :],
        "w_g": dw_g, "b_g": db_g,
    }
    out = params.with_arrays(grads)
    if not np.isfinite(loss) or not out.all_finite():
        raise NumericalError("non-finite loss or gradient")
    return loss, out
