"""GRU cell and bidirectional mean-pooled sentence encoder, with BPTT.

Update convention: h' = (1 - z) * h + z * h_candidate, where z gates how much
of the new candidate enters the state.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import DimMismatch, EmptySequence, IndexOutOfVocab
from .feedforward import init_matrix
from .ops import sigmoid


@dataclass
class GruParams:
    W_z: np.ndarray  # (H, d_in)
    W_r: np.ndarray
    W_h: np.ndarray
    U_z: np.ndarray  # (H, H)
    U_r: np.ndarray
    U_h: np.ndarray
    b_z: np.ndarray  # (H,)
    b_r: np.ndarray
    b_h: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[1]

    def copy(self) -> "GruParams":
        return GruParams(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def astype(self, dtype) -> "GruParams":
        return GruParams(**{f.name: getattr(self, f.name).astype(dtype) for f in fields(self)})

    def zeros_like(self) -> "GruParams":
        return GruParams(**{f.name: np.zeros_like(getattr(self, f.name)) for f in fields(self)})


def make_gru_params(rng: np.random.Generator, input_dim: int, hidden_dim: int, dtype=np.float32) -> GruParams:
    def w():
        return init_matrix(rng, hidden_dim, input_dim, dtype)

    def u():
        return init_matrix(rng, hidden_dim, hidden_dim, dtype)

    def b():
        return np.zeros(hidden_dim, dtype=dtype)

    return GruParams(W_z=w(), W_r=w(), W_h=w(), U_z=u(), U_r=u(), U_h=u(), b_z=b(), b_r=b(), b_h=b())


def gru_cell(x: np.ndarray, h: np.ndarray, p: GruParams) -> np.ndarray:
    """One GRU step: z and r gates, candidate state, convex update."""
    h_new, _ = _gru_cell_cached(x, h, p)
    return h_new


def _gru_cell_cached(x: np.ndarray, h: np.ndarray, p: GruParams):
    if x.shape[-1] != p.input_dim:
        raise DimMismatch(p.input_dim, x.shape[-1])
    if h.shape[-1] != p.hidden_dim:
        raise DimMismatch(p.hidden_dim, h.shape[-1])
    z = sigmoid(p.W_z @ x + p.U_z @ h + p.b_z)
    r = sigmoid(p.W_r @ x + p.U_r @ h + p.b_r)
    rh = r * h
    h_bar = np.tanh(p.W_h @ x + p.U_h @ rh + p.b_h)
    h_new = (1.0 - z) * h + z * h_bar
    return h_new, (x, h, z, r, rh, h_bar)


def _gru_cell_backward(d_h_new: np.ndarray, cache, p: GruParams, acc: GruParams):
    """Accumulate parameter gradients into acc; return (d_x, d_h_prev)."""
    x, h, z, r, rh, h_bar = cache
    dz = d_h_new * (h_bar - h)
    d_h_bar = d_h_new * z
    dh = d_h_new * (1.0 - z)

    da_h = d_h_bar * (1.0 - h_bar * h_bar)
    acc.W_h += np.outer(da_h, x)
    acc.U_h += np.outer(da_h, rh)
    acc.b_h += da_h
    d_rh = p.U_h.T @ da_h
    dr = d_rh * h
    dh += d_rh * r

    da_r = dr * r * (1.0 - r)
    acc.W_r += np.outer(da_r, x)
    acc.U_r += np.outer(da_r, h)
    acc.b_r += da_r
    dh += p.U_r.T @ da_r

    da_z = dz * z * (1.0 - z)
    acc.W_z += np.outer(da_z, x)
    acc.U_z += np.outer(da_z, h)
    acc.b_z += da_z
    dh += p.U_z.T @ da_z

    dx = p.W_z.T @ da_z + p.W_r.T @ da_r + p.W_h.T @ da_h
    return dx, dh


def _run_direction(xs: np.ndarray, p: GruParams):
    """Run the GRU over xs rows in order from a zero state; returns (states, caches)."""
    h = np.zeros(p.hidden_dim, dtype=xs.dtype)
    states = np.empty((xs.shape[0], p.hidden_dim), dtype=xs.dtype)
    caches = []
    for t in range(xs.shape[0]):
        h, cache = _gru_cell_cached(xs[t], h, p)
        states[t] = h
        caches.append(cache)
    return states, caches


def bigru_encode(token_ids, embedding: np.ndarray, fwd: GruParams, bwd: GruParams) -> np.ndarray:
    """Encode a token-id sequence to the mean of per-position [fwd; bwd] states."""
    out, _ = bigru_encode_with_cache(token_ids, embedding, fwd, bwd)
    return out


def bigru_encode_with_cache(token_ids, embedding: np.ndarray, fwd: GruParams, bwd: GruParams):
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.size == 0:
        raise EmptySequence("cannot encode an empty token sequence")
    if np.any(ids < 0) or np.any(ids >= embedding.shape[0]):
        raise IndexOutOfVocab(f"token ids must lie in [0, {embedding.shape[0]})")
    xs = embedding[ids]
    fwd_states, fwd_caches = _run_direction(xs, fwd)
    bwd_states_rev, bwd_caches = _run_direction(xs[::-1], bwd)
    bwd_states = bwd_states_rev[::-1]
    out = np.concatenate(
        [fwd_states.mean(axis=0), bwd_states.mean(axis=0)]
    )
    cache = (ids, xs, fwd_caches, bwd_caches)
    return out, cache


def bigru_encode_backward(
    d_out: np.ndarray,
    cache,
    fwd: GruParams,
    bwd: GruParams,
    d_embedding: np.ndarray,
    d_fwd: GruParams,
    d_bwd: GruParams,
) -> None:
    """Backprop the encoder output gradient; accumulates into the d_* containers."""
    ids, xs, fwd_caches, bwd_caches = cache
    t_len = ids.size
    hidden = fwd.hidden_dim
    d_fwd_out = d_out[:hidden] / t_len
    d_bwd_out = d_out[hidden:] / t_len
    d_xs = np.zeros_like(xs)

    carry = np.zeros(hidden, dtype=xs.dtype)
    for t in range(t_len - 1, -1, -1):
        dx, carry = _gru_cell_backward(d_fwd_out + carry, fwd_caches[t], fwd, d_fwd)
        d_xs[t] += dx

    # The backward direction consumed xs reversed, so its BPTT walks t upward.
    carry = np.zeros(hidden, dtype=xs.dtype)
    for t in range(t_len):
        dx, carry = _gru_cell_backward(d_bwd_out + carry, bwd_caches[t_len - 1 - t], bwd, d_bwd)
        d_xs[t] += dx

    np.add.at(d_embedding, ids, d_xs)
