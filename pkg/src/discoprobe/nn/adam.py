"""Adam with bias correction, operating on flat name->array parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

ParamDict = dict[str, np.ndarray]


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: ParamDict = field(default_factory=dict)
    v: ParamDict = field(default_factory=dict)


def adam_step(params: ParamDict, grads: ParamDict, state: AdamState) -> tuple[ParamDict, AdamState]:
    """One bias-corrected update. Pure: inputs are left untouched.

    Parameters missing from grads are treated as zero-gradient and carried
    over unchanged (numerically identical to updating with g = 0).
    """
    new_params: ParamDict = {}
    new_m: ParamDict = {}
    new_v: ParamDict = {}
    t = state.t + 1
    corr1 = 1.0 - state.beta1**t
    corr2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            new_params[name] = p
            if name in state.m:
                new_m[name] = state.m[name]
                new_v[name] = state.v[name]
            continue
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: param {p.shape} vs grad {g.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m / corr1
        v_hat = v / corr2
        new_params[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    new_state = AdamState(
        lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps, t=t, m=new_m, v=new_v
    )
    return new_params, new_state
