"""Elementwise activations and the stable softmax cross-entropy."""

from __future__ import annotations

import numpy as np

from ..errors import LabelOutOfRange


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with max subtraction; works on 1-D and 2-D inputs."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def softmax_xent(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of a single logit vector against an integer label.

    Returns (loss, gradient over logits) with grad = softmax - onehot.
    """
    k = logits.shape[-1]
    if not 0 <= label < k:
        raise LabelOutOfRange(f"label {label} outside [0, {k})")
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[label] -= 1.0
    return float(-logp[label]), grad


def softmax_xent_batch(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a (B, K) batch; grad is already divided by B."""
    b, k = logits.shape
    if np.any(labels < 0) or np.any(labels >= k):
        raise LabelOutOfRange(f"labels outside [0, {k})")
    logp = log_softmax(logits)
    loss = float(-np.mean(logp[np.arange(b), labels]))
    grad = np.exp(logp)
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, grad
