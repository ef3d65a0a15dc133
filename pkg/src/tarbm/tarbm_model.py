"""M-th order temporal RBM with hidden-to-hidden delayed weights.

One static RBM is shared across all time slices; M square matrices
w_1..w_M couple the hidden layers at lags 1..M to the current hidden
layer. Training runs in up to three stages:

  1. static CD pretraining of the shared RBM on single frames,
  2. autoencoding pretraining of each delayed matrix in turn (the
     lagged frame is treated as a corrupted version of the current
     frame and the delayed weights learn to denoise it),
  3. joint CD fine-tuning of all weights on full windows.

Running all three stages gives the TARBM; skipping stage 2 gives the
TRBM baseline. Both share parameter shapes and the stage-3 code path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import backend, rbm
from .data import SequenceDataset, window_tensor
from .errors import DomainError, ShapeError
from .rbm import CdConfig, RbmParams
from .tensor_core import Rng, sigmoid


@dataclass
class TarbmParams:
    static: RbmParams
    delayed: np.ndarray    # (M, H, H); delayed[j-1] maps lag-j hiddens to current logits

    def __post_init__(self):
        h = self.static.n_hidden
        if self.delayed.ndim != 3 or self.delayed.shape[1:] != (h, h):
            raise ShapeError(
                f"delayed weights {self.delayed.shape} must be (M, {h}, {h})")

    @property
    def order(self) -> int:
        return self.delayed.shape[0]

    def copy(self) -> "TarbmParams":
        return TarbmParams(self.static.copy(), self.delayed.copy())


def init_tarbm(n_visible: int, n_hidden: int, order: int, rng: Rng,
               stddev: float = 0.01,
               visible_kind: str = rbm.GAUSSIAN) -> TarbmParams:
    static = rbm.init_rbm(n_visible, n_hidden, rng, stddev, visible_kind)
    delayed = stddev * rng.normal(order, n_hidden, n_hidden)
    return TarbmParams(static, delayed)


@dataclass
class TrainSchedule:
    static_epochs: int = 100
    ae_epochs_per_delay: int = 50
    joint_epochs: int = 100
    minibatch_size: int = 100
    ae_learning_rate: float = 1e-3
    ae_momentum: float = 0.9

    def __post_init__(self):
        if min(self.static_epochs, self.ae_epochs_per_delay,
               self.joint_epochs) < 0:
            raise DomainError("epoch counts must be >= 0")
        if self.minibatch_size < 1:
            raise DomainError("minibatch_size must be >= 1")
        if self.ae_learning_rate <= 0:
            raise DomainError("ae_learning_rate must be > 0")


def joint_energy(params: TarbmParams, vs: np.ndarray, hs: np.ndarray) -> float:
    """Energy of a full window: sum of per-slice static energies minus
    the delayed hidden-to-hidden coupling terms."""
    vs = np.asarray(vs, dtype=np.float64)
    hs = np.asarray(hs, dtype=np.float64)
    m = params.order
    if vs.shape[0] != m + 1 or hs.shape[0] != m + 1:
        raise ShapeError(
            f"expected {m + 1} slices, got {vs.shape[0]} visible / "
            f"{hs.shape[0]} hidden")
    total = 0.0
    for i in range(m + 1):
        total += rbm.energy(params.static, vs[i], hs[i])
    coupling = 0.0
    for i in range(1, m + 1):
        coupling += float(hs[0] @ params.delayed[i - 1] @ hs[i])
    return total - coupling


def hidden_prior_mean(params: TarbmParams, past_hiddens: np.ndarray) -> np.ndarray:
    """Dynamic prior over the current hidden layer given past hidden
    activations only (no visible input). past_hiddens is (d, H) with
    row j-1 the activation at lag j, d <= M."""
    past = np.atleast_2d(np.asarray(past_hiddens, dtype=np.float64))
    if past.shape[0] > params.order:
        raise ShapeError(f"{past.shape[0]} past slices exceed order {params.order}")
    if past.size and past.shape[1] != params.static.n_hidden:
        raise ShapeError(f"past hiddens {past.shape} vs H={params.static.n_hidden}")
    z = params.static.b_h.copy()
    for j in range(past.shape[0]):
        z += params.delayed[j] @ past[j]
    return sigmoid(z)


def _infer_history_hiddens(params: TarbmParams, history: np.ndarray) -> np.ndarray:
    """Mean-field hidden activations for history frames (most recent first)."""
    return rbm.hidden_given_visible(params.static, history)


def ae_pretrain_delays(params: TarbmParams, dataset: SequenceDataset,
                       schedule: TrainSchedule, rng: Rng,
                       log=None) -> list:
    """Autoencoding pretraining of the delayed weights, in place.

    For each delay depth d = 1..M (shallow first), descends the squared
    reconstruction error of the current frame from its d lagged frames
    with respect to w_d only; the static weights and the already
    trained shallower delays stay frozen. Returns a per-delay list of
    per-epoch mean reconstruction errors.
    """
    m = params.order
    windows = window_tensor(dataset, m)
    n = windows.shape[0]
    if n == 0:
        raise DomainError("dataset has no windows of the required width")
    if not params.static.w.any():
        warnings.warn("static weights are all zero; run static pretraining first")
    static = params.static
    bsz = schedule.minibatch_size
    trace = []
    for d in range(1, m + 1):
        vel = np.zeros_like(params.delayed[d - 1])
        epoch_errs = []
        for _ in range(schedule.ae_epochs_per_delay):
            perm = rng.permutation(n)
            total = 0.0
            for start in range(0, n, bsz):
                idx = perm[start:start + bsz]
                vs = np.ascontiguousarray(windows[idx, :d + 1].transpose(1, 0, 2))
                grad, err = backend.ae_grad(static.w, static.b_v, static.b_h,
                                            params.delayed[:d], vs,
                                            static.gaussian)
                vel = (schedule.ae_momentum * vel
                       - schedule.ae_learning_rate * grad / idx.size)
                params.delayed[d - 1] += vel
                total += err
            epoch_errs.append(total / n)
            if log is not None:
                log(f"ae delay {d} epoch {len(epoch_errs) - 1}: "
                    f"recon mse {epoch_errs[-1]:.6f}")
        trace.append(epoch_errs)
    return trace


def joint_cd_finetune(params: TarbmParams, dataset: SequenceDataset,
                      schedule: TrainSchedule, cfg: CdConfig, rng: Rng,
                      log=None) -> list:
    """Joint CD over full windows, in place.

    Per window the history hiddens are inferred mean-field from their
    frames and held clamped; the current slice is Gibbs-sampled under
    the dynamic prior. Updates the static weights and biases and every
    delayed matrix. Returns per-epoch reconstruction errors.
    """
    m = params.order
    windows = window_tensor(dataset, m)
    n = windows.shape[0]
    if n == 0:
        raise DomainError("dataset has no windows of the required width")
    static = params.static
    bsz = schedule.minibatch_size
    vel_w = np.zeros_like(static.w)
    vel_bv = np.zeros_like(static.b_v)
    vel_bh = np.zeros_like(static.b_h)
    vel_d = np.zeros_like(params.delayed)
    lr, decay = cfg.learning_rate, cfg.weight_decay
    errs = []
    for epoch in range(schedule.joint_epochs):
        mom = cfg.momentum_at(epoch)
        perm = rng.permutation(n)
        ep_err = 0.0
        for start in range(0, n, bsz):
            idx = perm[start:start + bsz]
            batch = windows[idx]
            v0 = np.ascontiguousarray(batch[:, 0])
            if m > 0:
                hs = [rbm.hidden_given_visible(static, np.ascontiguousarray(batch[:, j]))
                      for j in range(1, m + 1)]
                prior = hs[0] @ params.delayed[0].T
                for j in range(1, m):
                    prior += hs[j] @ params.delayed[j].T
            else:
                hs, prior = [], None
            (d_w, d_bv, d_bh), (h0p, vk, hkp) = rbm.cd_update(
                static, v0, cfg, rng, extra_logit=prior, return_stats=True)
            vel_w = mom * vel_w + lr * (d_w - decay * static.w)
            vel_bv = mom * vel_bv + lr * d_bv
            vel_bh = mom * vel_bh + lr * d_bh
            static.w += vel_w
            static.b_v += vel_bv
            static.b_h += vel_bh
            for j in range(m):
                d_wj = (h0p.T @ hs[j] - hkp.T @ hs[j]) / idx.size
                vel_d[j] = mom * vel_d[j] + lr * (d_wj - decay * params.delayed[j])
                params.delayed[j] += vel_d[j]
            ep_err += float(np.sum((vk - v0) ** 2))
        errs.append(ep_err / n)
        if log is not None:
            log(f"joint epoch {epoch}: recon mse {errs[-1]:.6f}")
    return errs


def predict_next(params: TarbmParams, history: np.ndarray) -> np.ndarray:
    """Deterministic next-frame prediction from M history frames
    (most recent first): mean-field throughout, no sampling."""
    history = np.atleast_2d(np.asarray(history, dtype=np.float64))
    if history.shape[0] != params.order:
        raise DomainError(
            f"need exactly {params.order} history frames, got {history.shape[0]}")
    hs = _infer_history_hiddens(params, history)
    h0 = hidden_prior_mean(params, hs)
    return visible_mean(params, h0)


def visible_mean(params: TarbmParams, h0: np.ndarray) -> np.ndarray:
    return rbm.visible_given_hidden(params.static, h0)


def generate(params: TarbmParams, seed_history: np.ndarray, n_frames: int,
             rng: Rng = None, sample_hidden: bool = False) -> np.ndarray:
    """Autoregressive rollout from M seed frames (most recent first).

    Deterministic mean-field by default; with sample_hidden the current
    hidden layer is sampled from its prior before reconstruction.
    """
    history = np.atleast_2d(np.asarray(seed_history, dtype=np.float64)).copy()
    if history.shape[0] != params.order:
        raise DomainError(
            f"need exactly {params.order} seed frames, got {history.shape[0]}")
    if sample_hidden and rng is None:
        raise DomainError("sampling rollout requires an rng")
    v_dim = params.static.n_visible
    out = np.empty((n_frames, v_dim))
    for t in range(n_frames):
        hs = _infer_history_hiddens(params, history)
        h0 = hidden_prior_mean(params, hs)
        if sample_hidden:
            h0 = (rng.uniform(*h0.shape) < h0).astype(np.float64)
        v = visible_mean(params, h0)
        out[t] = v
        history = np.vstack([v, history[:-1]]) if params.order > 1 else v[None, :]
    return out


def train_pipeline(params: TarbmParams, dataset: SequenceDataset,
                   schedule: TrainSchedule, cfg: CdConfig, rng: Rng,
                   autoencode: bool = True, log=None) -> dict:
    """Full staged training: static CD, optional autoencoding of the
    delayed weights (TARBM) and joint CD fine-tuning. Mutates params;
    returns the per-stage error traces."""
    traces = {}
    traces["static"] = rbm.train_static(params.static, dataset.frames, cfg,
                                        schedule.static_epochs,
                                        schedule.minibatch_size, rng, log=log)
    if autoencode:
        traces["autoencode"] = ae_pretrain_delays(params, dataset, schedule,
                                                  rng, log=log)
    traces["joint"] = joint_cd_finetune(params, dataset, schedule, cfg, rng,
                                        log=log)
    return traces
