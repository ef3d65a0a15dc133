import warnings

import numpy as np
import pytest

from tarbm import backend, data, rbm, tarbm_model
from tarbm.data import SequenceDataset, window_tensor
from tarbm.errors import DomainError, ShapeError
from tarbm.rbm import CdConfig
from tarbm.tarbm_model import TarbmParams, TrainSchedule, init_tarbm
from tarbm.tensor_core import Rng, sigmoid


def random_tarbm(seed, v, h, m, kind="binary", scale=0.5):
    rng = Rng(seed)
    static = rbm.RbmParams(scale * rng.normal(v, h), scale * rng.normal(v),
                           scale * rng.normal(h), kind)
    return TarbmParams(static, scale * rng.normal(m, h, h))


def joint_energy_scalar_oracle(p, vs, hs):
    total = 0.0
    for i in range(p.order + 1):
        total += rbm.energy(p.static, vs[i], hs[i])
    for i in range(1, p.order + 1):
        for j in range(p.static.n_hidden):
            for k in range(p.static.n_hidden):
                total -= hs[0][j] * p.delayed[i - 1][j, k] * hs[i][k]
    return total


# ---------------------------------------------------------------------------
# joint energy

def test_joint_energy_zero_configuration():
    p = TarbmParams(rbm.RbmParams(np.ones((3, 2)), np.zeros(3), np.zeros(2),
                                  "binary"), np.ones((2, 2, 2)))
    assert tarbm_model.joint_energy(p, np.zeros((3, 3)), np.zeros((3, 2))) == 0.0


def test_joint_energy_order_zero_equals_static_energy():
    p = random_tarbm(1, 3, 2, 1)
    p0 = TarbmParams(p.static, np.empty((0, 2, 2)))
    rng = Rng(11)
    v = (rng.uniform(3) < 0.5).astype(float)
    h = (rng.uniform(2) < 0.5).astype(float)
    assert tarbm_model.joint_energy(p0, v[None], h[None]) == rbm.energy(p.static, v, h)


def test_joint_energy_matches_scalar_loop_oracle():
    p = random_tarbm(2, 3, 2, 2)
    rng = Rng(22)
    vs = (rng.uniform(3, 3) < 0.5).astype(float)
    hs = (rng.uniform(3, 2) < 0.5).astype(float)
    assert abs(tarbm_model.joint_energy(p, vs, hs)
               - joint_energy_scalar_oracle(p, vs, hs)) < 1e-12


def test_joint_energy_zero_delayed_reduces_to_sum_of_static_energies():
    for seed in range(100):
        rng = Rng(seed)
        p = random_tarbm(seed, 3, 2, 2)
        p.delayed[:] = 0.0
        vs = (rng.uniform(3, 3) < 0.5).astype(float)
        hs = (rng.uniform(3, 2) < 0.5).astype(float)
        total = 0.0
        for i in range(3):
            total += rbm.energy(p.static, vs[i], hs[i])
        assert tarbm_model.joint_energy(p, vs, hs) == total


def test_joint_energy_slice_count_mismatch():
    p = random_tarbm(3, 3, 2, 2)
    with pytest.raises(ShapeError):
        tarbm_model.joint_energy(p, np.zeros((2, 3)), np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# hidden prior

def test_hidden_prior_mean_zero_params():
    p = TarbmParams(rbm.RbmParams(np.zeros((3, 4)), np.zeros(3), np.zeros(4),
                                  "binary"), np.zeros((1, 4, 4)))
    assert np.array_equal(tarbm_model.hidden_prior_mean(p, np.ones((1, 4))),
                          np.full(4, 0.5))


def test_hidden_prior_mean_diagonal_delay():
    alpha = 1.7
    b_h = np.array([0.2, -0.4, 0.0])
    p = TarbmParams(rbm.RbmParams(np.zeros((2, 3)), np.zeros(2), b_h, "binary"),
                    alpha * np.eye(3)[None])
    h1 = np.array([1.0, 0.0, 1.0])
    expect = sigmoid(alpha * h1 + b_h)
    assert np.allclose(tarbm_model.hidden_prior_mean(p, h1[None]), expect,
                       rtol=0, atol=1e-15)


def test_hidden_prior_mean_matches_formula_oracle():
    p = random_tarbm(4, 3, 4, 3)
    rng = Rng(44)
    past = rng.uniform(3, 4)
    z = p.static.b_h.copy()
    for j in range(3):
        z = z + p.delayed[j] @ past[j]
    assert np.allclose(tarbm_model.hidden_prior_mean(p, past), sigmoid(z),
                       rtol=0, atol=1e-14)


def test_hidden_prior_mean_rejects_excess_slices():
    p = random_tarbm(5, 3, 4, 1)
    with pytest.raises(ShapeError):
        tarbm_model.hidden_prior_mean(p, np.zeros((2, 4)))


# ---------------------------------------------------------------------------
# autoencoding pretraining

def cyclic_dataset(seed, n_frames=200, n_sequences=4):
    return data.make_cyclic_shift(8, n_frames, n_sequences, Rng(seed))


def prediction_mse(p, ds):
    wins = window_tensor(ds, p.order)
    errs = [np.mean((tarbm_model.predict_next(p, w[1:]) - w[0]) ** 2)
            for w in wins]
    return float(np.mean(errs))


def test_ae_pretrain_gradient_matches_finite_differences():
    rng = Rng(6)
    static = rbm.RbmParams(0.5 * rng.normal(4, 3), 0.5 * rng.normal(4),
                           0.5 * rng.normal(3), "gaussian")
    delayed = 0.5 * rng.normal(2, 3, 3)
    vs = rng.normal(3, 5, 4)  # (M+1, B, V) window stack for depth d=2
    grad, _ = backend.ae_grad(static.w, static.b_v, static.b_h, delayed, vs,
                              True)

    def err_at(dmat):
        d2 = delayed.copy()
        d2[1] = dmat
        _, e = backend.ae_grad(static.w, static.b_v, static.b_h, d2, vs, True)
        return e

    eps = 1e-6
    for j in range(3):
        for k in range(3):
            dm = delayed[1].copy()
            dm[j, k] += eps
            hi = err_at(dm)
            dm[j, k] -= 2 * eps
            lo = err_at(dm)
            est = (hi - lo) / (2 * eps)
            assert abs(grad[j, k] - est) < 1e-4 * max(1.0, abs(est))


def test_ae_pretrain_never_touches_static_parameters():
    rng = Rng(7)
    ds = cyclic_dataset(7)
    p = init_tarbm(8, 8, 2, rng, 0.1, "binary")
    w0, bv0, bh0 = p.static.w.copy(), p.static.b_v.copy(), p.static.b_h.copy()
    sched = TrainSchedule(ae_epochs_per_delay=3, minibatch_size=32,
                          ae_learning_rate=0.05)
    trace = tarbm_model.ae_pretrain_delays(p, ds, sched, rng)
    assert np.array_equal(p.static.w, w0)
    assert np.array_equal(p.static.b_v, bv0)
    assert np.array_equal(p.static.b_h, bh0)
    assert len(trace) == 2 and all(len(t) == 3 for t in trace)


def test_ae_pretrain_zero_epochs_is_a_noop():
    rng = Rng(8)
    ds = cyclic_dataset(8)
    p = init_tarbm(8, 8, 1, rng, 0.1, "binary")
    before = p.delayed.copy()
    sched = TrainSchedule(ae_epochs_per_delay=0, minibatch_size=32)
    tarbm_model.ae_pretrain_delays(p, ds, sched, rng)
    assert np.array_equal(p.delayed, before)


def test_ae_pretrain_warns_on_untrained_static_weights():
    rng = Rng(9)
    ds = cyclic_dataset(9)
    p = init_tarbm(8, 8, 1, rng, 0.0, "binary")
    sched = TrainSchedule(ae_epochs_per_delay=1, minibatch_size=32)
    with pytest.warns(UserWarning):
        tarbm_model.ae_pretrain_delays(p, ds, sched, rng)


def test_ae_pretrain_rejects_empty_dataset():
    rng = Rng(10)
    ds = SequenceDataset(np.zeros((2, 8)), [0, 1])  # two length-1 sequences
    p = init_tarbm(8, 8, 1, rng, 0.1, "binary")
    with pytest.raises(DomainError):
        tarbm_model.ae_pretrain_delays(p, ds, TrainSchedule(), rng)


def test_ae_pretrain_beats_identity_baseline_on_constant_sequences():
    rng = Rng(9)
    frames = np.repeat(rng.normal(30, 6), 5, axis=0)
    ds = SequenceDataset(frames, list(range(0, 150, 5)))
    p = init_tarbm(6, 10, 1, rng, 0.05, "gaussian")
    cfg = CdConfig(learning_rate=0.01, sparsity_weight=0.0)
    rbm.train_static(p.static, ds.frames, cfg, 200, 25, rng)
    identity = p.copy()
    identity.delayed = np.eye(10)[None].copy()
    baseline = prediction_mse(identity, ds)
    sched = TrainSchedule(ae_epochs_per_delay=200, minibatch_size=25,
                          ae_learning_rate=0.05)
    tarbm_model.ae_pretrain_delays(p, ds, sched, rng)
    assert prediction_mse(p, ds) <= baseline


# ---------------------------------------------------------------------------
# joint CD fine-tuning

def test_joint_cd_zero_learning_rate_is_a_noop():
    rng = Rng(11)
    ds = cyclic_dataset(11)
    p = init_tarbm(8, 8, 1, rng, 0.1, "binary")
    before = p.copy()
    cfg = CdConfig(learning_rate=0.0, sparsity_weight=0.0)
    sched = TrainSchedule(joint_epochs=3, minibatch_size=32)
    tarbm_model.joint_cd_finetune(p, ds, sched, cfg, rng)
    assert np.array_equal(p.static.w, before.static.w)
    assert np.array_equal(p.static.b_v, before.static.b_v)
    assert np.array_equal(p.static.b_h, before.static.b_h)
    assert np.array_equal(p.delayed, before.delayed)


def test_joint_cd_order_zero_matches_static_training_bit_exactly():
    rng = Rng(12)
    ds = cyclic_dataset(12)
    cfg = CdConfig(learning_rate=0.05, sparsity_weight=0.1)
    p = init_tarbm(8, 6, 1, Rng(5), 0.1, "binary")
    p.delayed = np.empty((0, 6, 6))
    sched = TrainSchedule(joint_epochs=4, minibatch_size=32)
    errs_joint = tarbm_model.joint_cd_finetune(p, ds, sched, cfg, Rng(99))
    q = init_tarbm(8, 6, 1, Rng(5), 0.1, "binary")
    errs_static = rbm.train_static(q.static, ds.frames, cfg, 4, 32, Rng(99))
    assert errs_joint == errs_static
    assert np.array_equal(p.static.w, q.static.w)
    assert np.array_equal(p.static.b_v, q.static.b_v)
    assert np.array_equal(p.static.b_h, q.static.b_h)


def test_joint_cd_improves_prediction_after_partial_pretraining():
    cfg = CdConfig(learning_rate=0.1, sparsity_weight=0.0)
    joint_cfg = CdConfig(learning_rate=0.02, sparsity_weight=0.0)
    improved = 0
    for seed in range(10):
        rng = Rng(seed)
        ds = cyclic_dataset(1000 + seed)
        p = init_tarbm(8, 8, 1, rng, 0.1, "binary")
        rbm.train_static(p.static, ds.frames, cfg, 300, 32, rng)
        sched = TrainSchedule(ae_epochs_per_delay=30, joint_epochs=200,
                              minibatch_size=32, ae_learning_rate=0.1)
        tarbm_model.ae_pretrain_delays(p, ds, sched, rng)
        before = prediction_mse(p, ds)
        tarbm_model.joint_cd_finetune(p, ds, sched, joint_cfg, rng)
        improved += prediction_mse(p, ds) <= before
    assert improved >= 8


# ---------------------------------------------------------------------------
# prediction / generation

def trained_cyclic_model(seed=0):
    rng = Rng(seed)
    ds = cyclic_dataset(seed)
    p = init_tarbm(8, 8, 1, rng, 0.1, "binary")
    cfg = CdConfig(learning_rate=0.1, sparsity_weight=0.0)
    sched = TrainSchedule(static_epochs=300, ae_epochs_per_delay=500,
                          joint_epochs=0, minibatch_size=32,
                          ae_learning_rate=0.2)
    tarbm_model.train_pipeline(p, ds, sched, cfg, rng)
    return p, ds


def test_predict_next_zero_delayed_weights():
    p = random_tarbm(13, 4, 3, 2, "gaussian")
    p.delayed[:] = 0.0
    h0 = sigmoid(p.static.b_h)
    expect = rbm.visible_given_hidden(p.static, h0)
    got = tarbm_model.predict_next(p, np.zeros((2, 4)))
    assert np.allclose(got, expect, rtol=0, atol=1e-14)


def test_predict_next_requires_full_history():
    p = random_tarbm(14, 4, 3, 2)
    with pytest.raises(DomainError):
        tarbm_model.predict_next(p, np.zeros((1, 4)))


def test_predict_next_cyclic_shift_accuracy():
    p, ds = trained_cyclic_model()
    wins = window_tensor(ds, 1)
    hits = np.mean([np.argmax(tarbm_model.predict_next(p, w[1:]))
                    == np.argmax(w[0]) for w in wins])
    assert hits >= 0.9


def test_predict_next_is_deterministic():
    p = random_tarbm(15, 4, 3, 2)
    hist = Rng(1).uniform(2, 4)
    assert np.array_equal(tarbm_model.predict_next(p, hist),
                          tarbm_model.predict_next(p, hist))


def test_generate_constant_model_constant_rollout():
    # a model with zero delayed weights predicts the same frame forever
    p = random_tarbm(16, 4, 3, 1, "gaussian")
    p.delayed[:] = 0.0
    roll = tarbm_model.generate(p, np.zeros((1, 4)), 5)
    assert np.array_equal(roll[0], roll[1]) and np.array_equal(roll[1], roll[4])


def test_generate_reproduces_cyclic_pattern():
    p, _ = trained_cyclic_model()
    seed_frame = np.zeros((1, 8))
    seed_frame[0, 3] = 1.0
    roll = tarbm_model.generate(p, seed_frame, 16)
    am = np.argmax(roll, axis=1)
    assert all(am[t] == (4 + t) % 8 for t in range(16))


def test_generate_determinism_and_empty_rollout():
    p = random_tarbm(17, 4, 3, 1)
    hist = Rng(2).uniform(1, 4)
    a = tarbm_model.generate(p, hist, 7, Rng(5), sample_hidden=True)
    b = tarbm_model.generate(p, hist, 7, Rng(5), sample_hidden=True)
    assert np.array_equal(a, b)
    assert tarbm_model.generate(p, hist, 0).shape == (0, 4)
    with pytest.raises(DomainError):
        tarbm_model.generate(p, hist, 3, sample_hidden=True)


def test_train_pipeline_stage_selection():
    ds = cyclic_dataset(20, n_frames=40, n_sequences=2)
    cfg = CdConfig(sparsity_weight=0.0)
    sched = TrainSchedule(static_epochs=2, ae_epochs_per_delay=2,
                          joint_epochs=2, minibatch_size=16)
    p = init_tarbm(8, 4, 1, Rng(0), 0.1, "binary")
    traces = tarbm_model.train_pipeline(p, ds, sched, cfg, Rng(1),
                                        autoencode=True)
    assert set(traces) == {"static", "autoencode", "joint"}
    q = init_tarbm(8, 4, 1, Rng(0), 0.1, "binary")
    traces = tarbm_model.train_pipeline(q, ds, sched, cfg, Rng(1),
                                        autoencode=False)
    assert set(traces) == {"static", "joint"}
