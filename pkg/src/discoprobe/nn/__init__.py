"""Self-contained numeric kernel with hand-derived gradients.

Everything here runs on plain numpy arrays: float32 for training, float64
for the finite-difference gradient checker.
"""

from .adam import AdamState, adam_step
from .feedforward import (
    FeedForward,
    bow_log_prob,
    feedforward_apply,
    feedforward_backward,
    feedforward_forward,
    make_feedforward,
)
from .gradcheck import grad_check
from .gru import GruParams, bigru_encode, bigru_encode_backward, bigru_encode_with_cache, gru_cell, make_gru_params
from .ops import log_softmax, relu, sigmoid, softmax, softmax_xent, softmax_xent_batch
from .params import EncoderConfig, EncoderParams, load_checkpoint, save_checkpoint

__all__ = [
    "AdamState",
    "adam_step",
    "FeedForward",
    "bow_log_prob",
    "feedforward_apply",
    "feedforward_backward",
    "feedforward_forward",
    "make_feedforward",
    "grad_check",
    "GruParams",
    "bigru_encode",
    "bigru_encode_backward",
    "bigru_encode_with_cache",
    "gru_cell",
    "make_gru_params",
    "log_softmax",
    "relu",
    "sigmoid",
    "softmax",
    "softmax_xent",
    "softmax_xent_batch",
    "EncoderConfig",
    "EncoderParams",
    "load_checkpoint",
    "save_checkpoint",
]
