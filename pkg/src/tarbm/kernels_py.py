"""Pure numpy implementations of the training hot kernels.

These are the reference kernels; ``tarbm._kernels`` is a Cython
translation selected at import time by :mod:`tarbm.backend` when the
compiled extension is available. Both backends consume pre-drawn
uniform variates so that the random draw sequence is identical; the
floating point results agree to rounding error (summation order in the
matrix products differs).

Kernel conventions:
  w        static weights, shape (V, H)
  b_v      visible bias, shape (V,) or per-row (B, V) for dynamic biases
  b_h      hidden bias, shape (H,)
  delayed  delayed hidden-to-hidden weights, shape (d, H, H); matrix j
           maps the hidden state at lag j+1 to the logit of the current
           hidden layer (left-applied: logit = w_j @ h)
  u_h/u_v  uniforms consumed by Gibbs sampling, shapes (k, B, H)/(k, B, V)
"""

from __future__ import annotations

import numpy as np

from .tensor_core import sigmoid

BACKEND_NAME = "python"


def gibbs_chain(w, b_v, b_h, v0, extra_logit, k, u_h, u_v, gaussian_visible):
    """Run the CD negative phase for a minibatch.

    Starts from data ``v0`` (B, V), samples hidden states and alternates
    k Gibbs steps. Hidden probabilities get ``extra_logit`` (B, H) added
    when given (dynamic prior / conditional terms). Gaussian visibles
    use the conditional mean; binary visibles are sampled with ``u_v``.

    Returns (h0p, vk, hkp): positive-phase hidden probabilities, the
    final visible configuration and the final hidden probabilities.
    """
    h0p = _hidden_probs(w, b_h, v0, extra_logit)
    h = (u_h[0] < h0p).astype(np.float64)
    for step in range(k):
        mean = h @ w.T + b_v
        if gaussian_visible:
            v = mean
        else:
            v = (u_v[step] < sigmoid(mean)).astype(np.float64)
        hp = _hidden_probs(w, b_h, v, extra_logit)
        if step + 1 < k:
            h = (u_h[step + 1] < hp).astype(np.float64)
    return h0p, v, hp


def _hidden_probs(w, b_h, v, extra_logit):
    z = v @ w + b_h
    if extra_logit is not None:
        z = z + extra_logit
    return sigmoid(z)


def ae_grad(w, b_v, b_h, delayed, vs, gaussian_visible):
    """Forward/backward pass of the temporal-weight autoencoding step.

    ``vs`` holds the window slices, shape (d+1, B, V) with vs[0] the
    current frame and vs[i] the frame at lag i. The reconstruction of
    vs[0] is driven purely by the lagged frames through ``delayed``
    (d matrices); only the gradient with respect to the deepest matrix
    delayed[d-1] is returned, along with the summed squared error.
    """
    d = vs.shape[0] - 1
    hs = [sigmoid(vs[i] @ w + b_h) for i in range(1, d + 1)]
    z = np.broadcast_to(b_h, hs[0].shape).copy()
    for j in range(d):
        z += hs[j] @ delayed[j].T
    h0 = sigmoid(z)
    pre = h0 @ w.T + b_v
    vhat = pre if gaussian_visible else sigmoid(pre)
    diff = vhat - vs[0]
    err = float(np.sum(diff * diff))
    dv = 2.0 * diff
    if not gaussian_visible:
        dv = dv * vhat * (1.0 - vhat)
    dz = (dv @ w) * h0 * (1.0 - h0)
    grad = dz.T @ hs[d - 1]
    return grad, err
