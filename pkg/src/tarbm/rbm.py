"""Static restricted Boltzmann machine.

Energy, conditionals, CD-k training with a sparsity penalty, and exact
enumeration oracles (log likelihood and its gradient) for small binary
models. Visible units are either binary or gaussian (unit variance,
linear reconstruction); hidden units are always binary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import CapacityError, DomainError, ShapeError
from .tensor_core import Rng, gaussian_init, sigmoid

BINARY = "binary"
GAUSSIAN = "gaussian"

ENUM_LIMIT = 20  # max V + H for exact enumeration


@dataclass
class RbmParams:
    w: np.ndarray          # (V, H)
    b_v: np.ndarray        # (V,)
    b_h: np.ndarray        # (H,)
    visible_kind: str = GAUSSIAN

    def __post_init__(self):
        if self.visible_kind not in (BINARY, GAUSSIAN):
            raise DomainError(f"unknown visible kind {self.visible_kind!r}")
        if self.w.shape != (self.b_v.size, self.b_h.size):
            raise ShapeError(
                f"w {self.w.shape} inconsistent with biases "
                f"({self.b_v.size},) / ({self.b_h.size},)")

    @property
    def n_visible(self) -> int:
        return self.w.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.w.shape[1]

    @property
    def gaussian(self) -> bool:
        return self.visible_kind == GAUSSIAN

    def copy(self) -> "RbmParams":
        return RbmParams(self.w.copy(), self.b_v.copy(), self.b_h.copy(),
                         self.visible_kind)


def init_rbm(n_visible: int, n_hidden: int, rng: Rng, stddev: float = 0.01,
             visible_kind: str = GAUSSIAN) -> RbmParams:
    """Weights normal(0, stddev^2), biases zero."""
    w = gaussian_init(n_visible, n_hidden, stddev, rng)
    return RbmParams(w, np.zeros(n_visible), np.zeros(n_hidden), visible_kind)


@dataclass
class CdConfig:
    k: int = 1
    learning_rate: float = 1e-3
    sparsity_target: float = 0.05
    sparsity_weight: float = 0.1
    momentum: float = 0.9
    momentum_start_epoch: int = 5
    weight_decay: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.learning_rate < 0:
            raise DomainError("learning_rate must be >= 0")
        if not 0.0 <= self.sparsity_target <= 1.0:
            raise DomainError("sparsity_target must lie in [0, 1]")
        if self.sparsity_weight < 0:
            raise DomainError("sparsity_weight must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise DomainError("weight_decay must be >= 0")

    def momentum_at(self, epoch: int) -> float:
        return self.momentum if epoch >= self.momentum_start_epoch else 0.0


def _check_v(params: RbmParams, v: np.ndarray):
    if v.shape[-1] != params.n_visible:
        raise ShapeError(f"visible shape {v.shape} vs V={params.n_visible}")


def _check_h(params: RbmParams, h: np.ndarray):
    if h.shape[-1] != params.n_hidden:
        raise ShapeError(f"hidden shape {h.shape} vs H={params.n_hidden}")


def energy(params: RbmParams, v: np.ndarray, h: np.ndarray) -> float:
    """Joint energy of one configuration.

    Binary visibles: -v'wh - b_v'v - b_h'h. Gaussian visibles replace
    the visible bias term with the quadratic ||v - b_v||^2 / 2.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    _check_v(params, v)
    _check_h(params, h)
    e = -float(v @ params.w @ h) - float(params.b_h @ h)
    if params.gaussian:
        d = v - params.b_v
        return e + 0.5 * float(d @ d)
    return e - float(params.b_v @ v)


def free_energy(params: RbmParams, v: np.ndarray) -> np.ndarray:
    """-log sum_h exp(-E(v, h)), analytically marginalized over h.

    Accepts a single visible vector (V,) or a batch (B, V); returns a
    scalar array or a length-B array respectively.
    """
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    _check_v(params, v)
    z = v @ params.w + params.b_h
    softplus = np.logaddexp(0.0, z).sum(axis=1)
    if params.gaussian:
        d = v - params.b_v
        vis = 0.5 * np.sum(d * d, axis=1)
    else:
        vis = -v @ params.b_v
    f = vis - softplus
    return f[0] if f.size == 1 and v.shape[0] == 1 else f


def hidden_given_visible(params: RbmParams, v: np.ndarray) -> np.ndarray:
    """P(h=1 | v), shape matching the leading dims of v."""
    v = np.asarray(v, dtype=np.float64)
    _check_v(params, v)
    return sigmoid(v @ params.w + params.b_h)


def visible_given_hidden(params: RbmParams, h: np.ndarray) -> np.ndarray:
    """Visible reconstruction: probabilities (binary) or mean (gaussian)."""
    h = np.asarray(h, dtype=np.float64)
    _check_h(params, h)
    pre = h @ params.w.T + params.b_v
    return pre if params.gaussian else sigmoid(pre)


def negative_phase(params: RbmParams, v0: np.ndarray, k: int, rng: Rng,
                   extra_logit=None, b_v=None):
    """Draw uniforms and run the k-step Gibbs chain kernel.

    Returns (h0p, vk, hkp). The rng consumption pattern (hidden
    uniforms, then visible uniforms for binary models) is shared by all
    training loops so that degenerate cases reduce bit-exactly to one
    another.
    """
    B = v0.shape[0]
    u_h = rng.uniform(k, B, params.n_hidden)
    u_v = None if params.gaussian else rng.uniform(k, B, params.n_visible)
    return backend.gibbs_chain(params.w, params.b_v if b_v is None else b_v,
                               params.b_h, v0, extra_logit, k, u_h, u_v,
                               params.gaussian)


def sparsity_gradient(v0: np.ndarray, h0p: np.ndarray, cfg: CdConfig):
    """Gradient of weight * sum_j (mean_j - target)^2 w.r.t. (w, b_h)."""
    q = h0p.mean(axis=0)
    s = h0p * (1.0 - h0p)
    coeff = 2.0 * cfg.sparsity_weight * (q - cfg.sparsity_target)
    d_bh = coeff * s.mean(axis=0)
    d_w = (v0.T @ s) * coeff / v0.shape[0]
    return d_w, d_bh


def cd_update(params: RbmParams, minibatch: np.ndarray, cfg: CdConfig,
              rng: Rng, extra_logit=None, b_v=None, return_stats=False):
    """One CD-k gradient estimate (ascent direction) on a minibatch.

    Positive-phase hidden statistics use probabilities; the negative
    phase samples hidden states and ends on probabilities. The sparsity
    penalty gradient is subtracted from the w and b_h components. The
    caller applies learning rate, momentum and weight decay.
    """
    v0 = np.asarray(minibatch, dtype=np.float64)
    if v0.ndim != 2 or v0.shape[0] == 0:
        raise DomainError("minibatch must be a non-empty (B, V) array")
    _check_v(params, v0)
    B = v0.shape[0]
    h0p, vk, hkp = negative_phase(params, v0, cfg.k, rng, extra_logit, b_v)
    d_w = (v0.T @ h0p - vk.T @ hkp) / B
    d_bv = (v0 - vk).mean(axis=0)
    d_bh = (h0p - hkp).mean(axis=0)
    if cfg.sparsity_weight > 0:
        pw, pbh = sparsity_gradient(v0, h0p, cfg)
        d_w -= pw
        d_bh -= pbh
    if return_stats:
        return (d_w, d_bv, d_bh), (h0p, vk, hkp)
    return d_w, d_bv, d_bh


def train_static(params: RbmParams, frames: np.ndarray, cfg: CdConfig,
                 epochs: int, minibatch_size: int, rng: Rng,
                 log=None) -> list:
    """CD-k SGD over frames, in place. Returns per-epoch mean squared
    reconstruction error."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise DomainError("training frames must be a non-empty (T, V) array")
    _check_v(params, frames)
    T = frames.shape[0]
    vel_w = np.zeros_like(params.w)
    vel_bv = np.zeros_like(params.b_v)
    vel_bh = np.zeros_like(params.b_h)
    errs = []
    for epoch in range(epochs):
        mom = cfg.momentum_at(epoch)
        perm = rng.permutation(T)
        ep_err = 0.0
        for start in range(0, T, minibatch_size):
            v0 = frames[perm[start:start + minibatch_size]]
            (d_w, d_bv, d_bh), (_, vk, _) = cd_update(
                params, v0, cfg, rng, return_stats=True)
            vel_w = mom * vel_w + cfg.learning_rate * (d_w - cfg.weight_decay * params.w)
            vel_bv = mom * vel_bv + cfg.learning_rate * d_bv
            vel_bh = mom * vel_bh + cfg.learning_rate * d_bh
            params.w += vel_w
            params.b_v += vel_bv
            params.b_h += vel_bh
            ep_err += float(np.sum((vk - v0) ** 2))
        errs.append(ep_err / T)
        if log is not None:
            log(f"static epoch {epoch}: recon mse {errs[-1]:.6f}")
    return errs


# ---------------------------------------------------------------------------
# exact enumeration oracles (binary visibles, small models)

def all_binary_states(n: int) -> np.ndarray:
    """All 2^n binary vectors as a (2^n, n) float array, lexicographic."""
    idx = np.arange(2 ** n, dtype=np.uint32)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return bits.astype(np.float64)


def _check_enumerable(params: RbmParams):
    if params.visible_kind != BINARY:
        raise CapacityError("exact enumeration requires binary visibles")
    if params.n_visible + params.n_hidden > ENUM_LIMIT:
        raise CapacityError(
            f"V + H = {params.n_visible + params.n_hidden} exceeds "
            f"enumeration limit {ENUM_LIMIT}")


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


def log_partition(params: RbmParams) -> float:
    """log Z by full enumeration of the visible states."""
    _check_enumerable(params)
    states = all_binary_states(params.n_visible)
    return _logsumexp(-free_energy(params, states))


def exact_log_likelihood(params: RbmParams, frames: np.ndarray) -> float:
    """Sum over the dataset of log p(v), by exhaustive enumeration."""
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    _check_v(params, frames)
    log_z = log_partition(params)
    return float(np.sum(-free_energy(params, frames) - log_z))


def exact_gradient(params: RbmParams, frames: np.ndarray):
    """Exact gradient of exact_log_likelihood w.r.t. (w, b_v, b_h)."""
    _check_enumerable(params)
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    _check_v(params, frames)
    T = frames.shape[0]

    def stats(vs, weights):
        p = hidden_given_visible(params, vs)
        g_w = (vs * weights[:, None]).T @ p
        g_bv = weights @ vs
        g_bh = weights @ p
        return g_w, g_bv, g_bh

    data = stats(frames, np.full(T, 1.0))
    states = all_binary_states(params.n_visible)
    f = -free_energy(params, states)
    pv = np.exp(f - _logsumexp(f))
    model = stats(states, T * pv)
    return tuple(d - m for d, m in zip(data, model))
