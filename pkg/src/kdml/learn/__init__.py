"""Numpy-only sequence learners: LSTM + dense head, a 6-layer MLP, Adam."""

from kdml.learn.adam import AdamState, adam_step, init_adam
from kdml.learn.flops import FlopsModel, flops
from kdml.learn.gradcheck import check_gradient, numeric_gradient, relative_errors
from kdml.learn.lstm import (
    LstmParams,
    LstmState,
    backward,
    dense_forward,
    forward,
    init_lstm,
    lstm_step,
    mse_loss,
)
from kdml.learn.mlp import MlpParams, init_mlp, mlp_backward, mlp_forward
from kdml.learn.train import TrainResult, WindowedDataset, mlp_train, predict, train

__all__ = [
    "AdamState",
    "FlopsModel",
    "LstmParams",
    "LstmState",
    "MlpParams",
    "TrainResult",
    "WindowedDataset",
    "adam_step",
    "backward",
    "check_gradient",
    "dense_forward",
    "flops",
    "forward",
    "init_adam",
    "init_lstm",
    "init_mlp",
    "lstm_step",
    "mlp_backward",
    "mlp_forward",
    "mlp_train",
    "mse_loss",
    "numeric_gradient",
    "predict",
    "relative_errors",
    "train",
]
