"""Feedforward heads with hand-derived backward passes.

A head is a stack of affine layers, each followed by an activation from
{relu, sigmoid, linear}. Decoder heads use two ReLU hidden layers and a
linear output; probe classifiers use zero or one sigmoid hidden layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, EmptyTarget
from .ops import log_softmax, sigmoid

Activation = str  # "relu" | "sigmoid" | "linear"


@dataclass
class FeedForward:
    weights: list[np.ndarray]  # each (out_dim, in_dim)
    biases: list[np.ndarray]  # each (out_dim,)
    activations: list[Activation]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "FeedForward":
        return FeedForward(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )

    def astype(self, dtype) -> "FeedForward":
        return FeedForward(
            [w.astype(dtype) for w in self.weights],
            [b.astype(dtype) for b in self.biases],
            list(self.activations),
        )


def init_matrix(rng: np.random.Generator, out_dim: int, in_dim: int, dtype=np.float32) -> np.ndarray:
    bound = 1.0 / np.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim)).astype(dtype)


def make_feedforward(
    rng: np.random.Generator,
    dims: list[int],
    activations: list[Activation],
    dtype=np.float32,
) -> FeedForward:
    """dims = [in, h1, ..., out]; len(activations) = len(dims) - 1."""
    if len(activations) != len(dims) - 1:
        raise ValueError("one activation per layer required")
    weights = [init_matrix(rng, dims[i + 1], dims[i], dtype) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1], dtype=dtype) for i in range(len(dims) - 1)]
    return FeedForward(weights, biases, list(activations))


def make_decoder_head(rng: np.random.Generator, in_dim: int, out_dim: int, hidden: int, dtype=np.float32) -> FeedForward:
    """Two ReLU hidden layers and a linear output."""
    return make_feedforward(rng, [in_dim, hidden, hidden, out_dim], ["relu", "relu", "linear"], dtype)


def feedforward_forward(x: np.ndarray, head: FeedForward) -> tuple[np.ndarray, list]:
    """Apply the head to x of shape (in_dim,) or (B, in_dim); returns (output, cache)."""
    if x.shape[-1] != head.in_dim:
        raise DimMismatch(head.in_dim, x.shape[-1])
    cache = []
    h = x
    for w, b, act in zip(head.weights, head.biases, head.activations):
        a = h @ w.T + b
        if act == "relu":
            out = np.maximum(a, 0)
        elif act == "sigmoid":
            out = sigmoid(a)
        elif act == "linear":
            out = a
        else:
            raise ValueError(f"unknown activation {act!r}")
        cache.append((h, a, out, act))
        h = out
    return h, cache


def feedforward_apply(x: np.ndarray, head: FeedForward) -> np.ndarray:
    """Logits only; use feedforward_forward when a backward pass follows."""
    out, _ = feedforward_forward(x, head)
    return out


def feedforward_backward(
    d_out: np.ndarray, cache: list, head: FeedForward
) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Backprop d_out through the head; returns (d_input, [(dW, db) per layer])."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(head.weights)  # type: ignore[list-item]
    d = d_out
    for i in range(len(head.weights) - 1, -1, -1):
        h_in, a, out, act = cache[i]
        if act == "relu":
            d = d * (a > 0)
        elif act == "sigmoid":
            d = d * out * (1.0 - out)
        # linear: d unchanged
        if d.ndim == 1:
            dw = np.outer(d, h_in)
            db = d.copy()
        else:
            dw = d.T @ h_in
            db = d.sum(axis=0)
        grads[i] = (dw, db)
        d = d @ head.weights[i]
    return d, grads


def bow_log_prob(
    sentence_embedding: np.ndarray,
    target_tokens: list[int] | np.ndarray,
    head: FeedForward,
    normalize: bool = True,
) -> tuple[float, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Negative log-probability of a token bag under the head's vocab softmax.

    Repeated tokens count with multiplicity; the loss is divided by the bag
    size unless normalize is False. Returns (loss, d_embedding, head grads).
    """
    ids = np.asarray(target_tokens, dtype=np.int64)
    if ids.size == 0:
        raise EmptyTarget("bag-of-words target is empty")
    logits, cache = feedforward_forward(sentence_embedding, head)
    logp = log_softmax(logits)
    scale = 1.0 / ids.size if normalize else 1.0
    loss = float(-np.sum(logp[ids]) * scale)
    # d loss / d logits = (bag_size * softmax - counts) * scale
    counts = np.bincount(ids, minlength=logits.shape[-1]).astype(logits.dtype)
    d_logits = (ids.size * np.exp(logp) - counts) * logits.dtype.type(scale)
    d_embedding, grads = feedforward_backward(d_logits, cache, head)
    return loss, d_embedding, grads
