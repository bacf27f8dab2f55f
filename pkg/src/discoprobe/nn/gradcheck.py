"""Central-difference gradient checking against analytic gradients."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteLoss
from .adam import ParamDict


def grad_check(
    loss_fn,
    params: ParamDict,
    eps: float = 1e-4,
    max_coords_per_array: int = 25,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn(params) must return (loss, grads) with grads keyed like params.
    Evaluate in float64. Coordinates are subsampled for large arrays, and
    coordinates where the two one-sided differences disagree (a kink, e.g.
    ReLU at exactly zero) are excluded rather than reported as failures.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    loss0, analytic = loss_fn(params)
    if not math.isfinite(loss0):
        raise NonFiniteLoss(f"loss is {loss0}")
    max_err = 0.0
    for name in sorted(params):
        array = params[name]
        n = array.size
        if n == 0:
            continue
        if n <= max_coords_per_array:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords_per_array, replace=False)
        flat = array.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + eps
            f_plus = loss_fn(params)[0]
            flat[idx] = original - eps
            f_minus = loss_fn(params)[0]
            flat[idx] = original
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise NonFiniteLoss(f"perturbed loss not finite at {name}[{idx}]")
            forward = (f_plus - loss0) / eps
            backward = (loss0 - f_minus) / eps
            # One-sided slopes disagreeing relative to their own scale means
            # the interval straddles a non-smooth point (a ReLU kink, possibly
            # only in its last fraction) or the gradient is too small for
            # central differences to resolve. The bound must stay below the
            # checking tolerance: residual contamination of the central
            # difference is about half the one-sided disagreement. A wrong
            # analytic gradient on a smooth coordinate is still caught
            # because there the two slopes agree with each other.
            if abs(forward - backward) > 1e-3 * max(abs(forward), abs(backward), 1e-8):
                continue
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(a_flat[idx])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            max_err = max(max_err, err)
    return max_err
