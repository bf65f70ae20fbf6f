"""Mixing entropy of volume-filling systems and its derivative maps.

The entropy density is

    h(u) = sum_i u_i ln u_i + (1 - rho) ln(1 - rho),      rho = sum_i u_i,

with the continuous-extension convention 0 ln 0 = 0.  Its gradient w = dh(u)
defines the entropy variables; the inverse map dh_inverse sends any w in R^n
onto the open admissible set, which is what lets the solvers enforce bounds by
parametrization instead of clipping.

All functions accept a single composition vector or an array of them stacked
along the leading axes.
"""

from __future__ import annotations

import numpy as np

from .simplex import INTERIOR_TOL

# Below this a fraction is treated as sitting on the boundary (0 ln 0 = 0).
_ZERO_BRANCH = 1e-14


def _prep(u):
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 1
    return arr, scalar


def _check_admissible(u, rho):
    if np.any(u < 0.0) or np.any(rho > 1.0):
        raise ValueError("composition outside the closed admissible set")


def _check_interior(u, rho):
    if np.any(u <= INTERIOR_TOL) or np.any(rho >= 1.0 - INTERIOR_TOL):
        raise ValueError("composition must be strictly interior")


def h(u):
    """Entropy density; lies in [-ln(n+1), 0] on the admissible set."""
    arr, scalar = _prep(u)
    rho = arr.sum(axis=-1)
    _check_admissible(arr, rho)
    xlogx = np.where(arr > _ZERO_BRANCH, arr * np.log(np.maximum(arr, _ZERO_BRANCH)), 0.0)
    u0 = 1.0 - rho
    tail = np.where(u0 > _ZERO_BRANCH, u0 * np.log(np.maximum(u0, _ZERO_BRANCH)), 0.0)
    val = xlogx.sum(axis=-1) + tail
    return float(val) if scalar else val


def dh(u):
    """Entropy variables w_i = ln u_i - ln(1 - rho); needs interior input."""
    arr, _ = _prep(u)
    rho = arr.sum(axis=-1, keepdims=True)
    _check_interior(arr, rho)
    return np.log(arr) - np.log(1.0 - rho)


def dh_inverse(w):
    """Map entropy variables back to fractions: u_i = e^{w_i} / (1 + sum_j e^{w_j}).

    Evaluated with a max-shift so arbitrarily large w stays finite.  The image
    satisfies u_i >= 0 and sum u_i <= 1 for every finite w, so it is always
    admissible; it is strictly interior as long as w is moderate (components
    underflow to 0 past spread ~745, and the solvent fraction 1 - sum u_i
    saturates to 0 once max w exceeds ~37).
    """
    arr = np.asarray(w, dtype=float)
    shift = np.maximum(arr.max(axis=-1), 0.0)[..., None]
    e = np.exp(arr - shift)
    denom = np.exp(-shift) + e.sum(axis=-1, keepdims=True)
    out = e / denom
    # Per-component rounding can leave the sum one ulp above 1; rescale those
    # rows so the result is admissible by construction.
    s = out.sum(axis=-1, keepdims=True)
    np.divide(out, s, out=out, where=s > 1.0)
    return out


def hessian(u):
    """Hessian of h: diag(1/u_i) plus the rank-one 1/(1-rho) coupling.

    Symmetric positive definite on the interior.  Batched input of shape
    (..., n) yields (..., n, n).
    """
    arr, _ = _prep(u)
    rho = np.asarray(arr.sum(axis=-1))
    _check_interior(arr, rho)
    n = arr.shape[-1]
    coupling = 1.0 / (1.0 - rho)
    H = np.broadcast_to(coupling[..., None, None], arr.shape + (n,)).copy()
    idx = np.arange(n)
    H[..., idx, idx] += 1.0 / arr
    return H


def hessian_inverse(u):
    """Closed-form inverse of the Hessian: diag(u) - u u^T.

    This is also the Jacobian of dh_inverse at w = dh(u), used by the Newton
    solvers to chain residual derivatives through the entropy parametrization.
    """
    arr, _ = _prep(u)
    n = arr.shape[-1]
    out = -arr[..., :, None] * arr[..., None, :]
    idx = np.arange(n)
    out[..., idx, idx] += arr
    return out
