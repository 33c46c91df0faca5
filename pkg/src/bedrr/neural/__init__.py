"""Neural reliability classifiers: feedforward and hybrid recurrent."""

from .optim import Adam, TrainConfig, bce_loss
from .mlp import MlpModel, init_mlp, mlp_forward, train_mlp
from .rnn import (
    HybridRnnModel,
    RnnStreamState,
    init_rnn,
    rnn_forward_batch,
    rnn_stream_step,
    train_rnn,
)

__all__ = [
    "Adam",
    "TrainConfig",
    "bce_loss",
    "MlpModel",
    "init_mlp",
    "mlp_forward",
    "train_mlp",
    "HybridRnnModel",
    "RnnStreamState",
    "init_rnn",
    "rnn_forward_batch",
    "rnn_stream_step",
    "train_rnn",
]
