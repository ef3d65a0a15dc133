"""Conditional RBM baseline.

History frames enter through delayed visible-to-visible (A) and
visible-to-hidden (B) weights that shift the biases of an otherwise
static RBM; all inference is therefore delegated to the static RBM
built from those dynamic biases, which makes the conditioning
equivalence exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rbm
from .data import SequenceDataset, window_tensor
from .errors import DomainError, ShapeError
from .rbm import CdConfig, RbmParams
from .tensor_core import Rng, sigmoid


@dataclass
class CrbmParams:
    static: RbmParams
    a: np.ndarray       # (M, V, V), lag-d visible -> current visible bias
    b: np.ndarray       # (M, V, H), lag-d visible -> current hidden bias

    def __post_init__(self):
        v, h = self.static.w.shape
        if self.a.ndim != 3 or self.a.shape[1:] != (v, v):
            raise ShapeError(f"A weights {self.a.shape} must be (M, {v}, {v})")
        if self.b.shape != (self.a.shape[0], v, h):
            raise ShapeError(
                f"B weights {self.b.shape} must be ({self.a.shape[0]}, {v}, {h})")

    @property
    def order(self) -> int:
        return self.a.shape[0]

    def copy(self) -> "CrbmParams":
        return CrbmParams(self.static.copy(), self.a.copy(), self.b.copy())


def init_crbm(n_visible: int, n_hidden: int, order: int, rng: Rng,
              stddev: float = 0.01,
              visible_kind: str = rbm.GAUSSIAN) -> CrbmParams:
    """Static weights normal(0, stddev^2); A and B start at zero so the
    untrained model reduces to a static RBM."""
    static = rbm.init_rbm(n_visible, n_hidden, rng, stddev, visible_kind)
    return CrbmParams(static,
                      np.zeros((order, n_visible, n_visible)),
                      np.zeros((order, n_visible, n_hidden)))


def _check_history(params: CrbmParams, history: np.ndarray) -> np.ndarray:
    history = np.atleast_2d(np.asarray(history, dtype=np.float64))
    if history.shape != (params.order, params.static.n_visible):
        raise DomainError(
            f"need history of shape ({params.order}, {params.static.n_visible}), "
            f"got {history.shape}")
    return history


def dynamic_biases(params: CrbmParams, history: np.ndarray):
    """Effective biases given M history frames (most recent first):
    b_v* = b_v + sum_d A_d' v^d, b_h* = b_h + sum_d B_d' v^d."""
    history = _check_history(params, history)
    bv = params.static.b_v.copy()
    bh = params.static.b_h.copy()
    for d in range(params.order):
        bv += params.a[d].T @ history[d]
        bh += params.b[d].T @ history[d]
    return bv, bh


def as_static(params: CrbmParams, history: np.ndarray) -> RbmParams:
    """The static RBM this model reduces to for a fixed history."""
    bv, bh = dynamic_biases(params, history)
    return RbmParams(params.static.w, bv, bh, params.static.visible_kind)


def hidden_given_visible(params: CrbmParams, history, v) -> np.ndarray:
    return rbm.hidden_given_visible(as_static(params, history), v)


def visible_given_hidden(params: CrbmParams, history, h) -> np.ndarray:
    return rbm.visible_given_hidden(as_static(params, history), h)


def predict_next(params: CrbmParams, history: np.ndarray) -> np.ndarray:
    """Deterministic mean-field prediction: hidden means from the
    dynamic biases alone, then one visible reconstruction."""
    cond = as_static(params, history)
    h = sigmoid(cond.b_h)
    return rbm.visible_given_hidden(cond, h)


def cd_train(params: CrbmParams, dataset: SequenceDataset, cfg: CdConfig,
             epochs: int, minibatch_size: int, rng: Rng, log=None) -> list:
    """CD-k over windows, in place. Per window the dynamic biases are
    computed from the history frames and static CD runs on the current
    slice; A and B learn from the same statistic differences paired
    with the history visibles. Returns per-epoch reconstruction errors."""
    m = params.order
    windows = window_tensor(dataset, m)
    n = windows.shape[0]
    if n == 0:
        raise DomainError("dataset has no windows of the required width")
    static = params.static
    vel_w = np.zeros_like(static.w)
    vel_bv = np.zeros_like(static.b_v)
    vel_bh = np.zeros_like(static.b_h)
    vel_a = np.zeros_like(params.a)
    vel_b = np.zeros_like(params.b)
    lr, decay = cfg.learning_rate, cfg.weight_decay
    errs = []
    for epoch in range(epochs):
        mom = cfg.momentum_at(epoch)
        perm = rng.permutation(n)
        ep_err = 0.0
        for start in range(0, n, minibatch_size):
            idx = perm[start:start + minibatch_size]
            batch = windows[idx]
            v0 = np.ascontiguousarray(batch[:, 0])
            hist = [np.ascontiguousarray(batch[:, d]) for d in range(1, m + 1)]
            bv_star = static.b_v + sum(hist[d] @ params.a[d] for d in range(m))
            bh_extra = sum(hist[d] @ params.b[d] for d in range(m))
            (d_w, d_bv, d_bh), (h0p, vk, hkp) = rbm.cd_update(
                static, v0, cfg, rng, extra_logit=bh_extra, b_v=bv_star,
                return_stats=True)
            vel_w = mom * vel_w + lr * (d_w - decay * static.w)
            vel_bv = mom * vel_bv + lr * d_bv
            vel_bh = mom * vel_bh + lr * d_bh
            static.w += vel_w
            static.b_v += vel_bv
            static.b_h += vel_bh
            dv = (v0 - vk) / idx.size
            dh = (h0p - hkp) / idx.size
            for d in range(m):
                d_a = hist[d].T @ dv
                d_b = hist[d].T @ dh
                vel_a[d] = mom * vel_a[d] + lr * (d_a - decay * params.a[d])
                vel_b[d] = mom * vel_b[d] + lr * (d_b - decay * params.b[d])
                params.a[d] += vel_a[d]
                params.b[d] += vel_b[d]
            ep_err += float(np.sum((vk - v0) ** 2))
        errs.append(ep_err / n)
        if log is not None:
            log(f"crbm epoch {epoch}: recon mse {errs[-1]:.6f}")
    return errs
