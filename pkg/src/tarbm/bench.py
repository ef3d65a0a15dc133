"""Next-frame prediction benchmark harness.

Trains each requested model on the head of a dataset, then feeds it
held-out snippets (M history frames plus one hidden target frame) and
reports the mean squared error of the predicted frame, per seed, in a
table or JSON report.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import crbm_model, tarbm_model
from .data import SequenceDataset, window_tensor
from .errors import DomainError
from .rbm import CdConfig
from .tarbm_model import TrainSchedule
from .tensor_core import Rng

MODEL_KINDS = ("tarbm", "trbm", "crbm", "copy_last")


@dataclass
class Protocol:
    train_count: int = 2000
    test_snippets: int = 1000
    repetitions: int = 100
    hidden_units: int = 100
    delay: int = 6

    def __post_init__(self):
        if min(self.train_count, self.test_snippets, self.repetitions,
               self.hidden_units, self.delay) < 1:
            raise DomainError("all protocol fields must be >= 1")


@dataclass
class ModelResult:
    name: str
    architecture: str
    mse: float
    per_seed_mse: list
    seconds: float
    config_hash: str = ""


@dataclass
class BenchReport:
    results: list = field(default_factory=list)  # ModelResult
    seeds: list = field(default_factory=list)


def split_dataset(dataset: SequenceDataset, train_count: int):
    """Head/tail split at a frame index, keeping sequence boundaries."""
    t = dataset.n_frames
    if not 0 < train_count < t:
        raise DomainError(f"train_count {train_count} must split T={t}")
    head_b = [b for b in dataset.boundaries if b < train_count]
    tail_b = [0] + [b - train_count for b in dataset.boundaries
                    if b > train_count]
    head = SequenceDataset(dataset.frames[:train_count], head_b)
    tail = SequenceDataset(dataset.frames[train_count:], tail_b)
    return head, tail


def _train_model(kind: str, train: SequenceDataset, protocol: Protocol,
                 schedule: TrainSchedule, cfg: CdConfig, rng: Rng, log=None):
    v = train.n_dims
    h, m = protocol.hidden_units, protocol.delay
    if kind == "tarbm" or kind == "trbm":
        params = tarbm_model.init_tarbm(v, h, m, rng)
        tarbm_model.train_pipeline(params, train, schedule, cfg, rng,
                                   autoencode=(kind == "tarbm"), log=log)
        return lambda hist: tarbm_model.predict_next(params, hist)
    if kind == "crbm":
        params = crbm_model.init_crbm(v, h, m, rng)
        # single-stage CD; epoch budget matches the staged pipelines
        epochs = schedule.static_epochs + schedule.joint_epochs
        crbm_model.cd_train(params, train, cfg, epochs,
                            schedule.minibatch_size, rng, log=log)
        return lambda hist: crbm_model.predict_next(params, hist)
    if kind == "copy_last":
        return lambda hist: hist[0]
    raise DomainError(f"unknown model kind {kind!r}; have {MODEL_KINDS}")


def run_prediction_bench(dataset: SequenceDataset, protocol: Protocol,
                         model_kinds, schedule: TrainSchedule, cfg: CdConfig,
                         seeds, config_hash: str = "",
                         log=None) -> BenchReport:
    """Train each model kind per seed, then score next-frame MSE on
    held-out snippets, averaged over the protocol's repetitions."""
    train, held_out = split_dataset(dataset, protocol.train_count)
    test_windows = window_tensor(held_out, protocol.delay)
    if test_windows.shape[0] == 0:
        raise DomainError("held-out part has no snippets of the required width")
    report = BenchReport(seeds=list(seeds))
    for kind in model_kinds:
        per_seed = []
        t0 = time.perf_counter()
        for seed in seeds:
            rng = Rng(seed)
            predict = _train_model(kind, train, protocol, schedule, cfg, rng,
                                   log=log)
            reps = [snippet_mse(predict, test_windows, protocol.test_snippets,
                                rng.spawn(rep))
                    for rep in range(protocol.repetitions)]
            per_seed.append(float(np.mean(reps)))
            if log is not None:
                log(f"{kind} seed {seed}: mse {per_seed[-1]:.6f}")
        arch = f"{protocol.hidden_units} hidden units, {protocol.delay} frame delay"
        report.results.append(ModelResult(
            name=kind, architecture=arch, mse=float(np.mean(per_seed)),
            per_seed_mse=per_seed, seconds=time.perf_counter() - t0,
            config_hash=config_hash))
    return report


def snippet_mse(predict, test_windows: np.ndarray, n_snippets: int,
                rng: Rng) -> float:
    """Mean over snippets and dimensions of the squared prediction error.

    Snippets are drawn (with replacement) from the held-out windows;
    the window's newest frame is the hidden target, the rest is history."""
    n = test_windows.shape[0]
    idx = rng.integers(0, n, size=n_snippets)
    total = 0.0
    for i in idx:
        window = test_windows[i]
        pred = predict(window[1:])
        diff = pred - window[0]
        total += float(np.mean(diff * diff))
    return total / n_snippets


# ---------------------------------------------------------------------------
# report emission

def emit_report(report: BenchReport, fmt: str = "text_table") -> bytes:
    if fmt == "json":
        doc = {
            "seeds": report.seeds,
            "models": [{
                "name": r.name,
                "architecture": r.architecture,
                "mse": r.mse,
                "per_seed_mse": r.per_seed_mse,
                "seconds": r.seconds,
                "config_hash": r.config_hash,
            } for r in report.results],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt == "text_table":
        headers = ("Model", "Architecture and Training", "Mean Squared Error")
        rows = [(r.name, r.architecture, f"{r.mse:.4f}") for r in report.results]
        widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
                  for i, h in enumerate(headers)]
        def line(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        out = [line(headers), line(tuple("-" * w for w in widths))]
        out.extend(line(row) for row in rows)
        return ("\n".join(out) + "\n").encode("utf-8")
    raise DomainError(f"unknown report format {fmt!r}")


def parse_report(blob: bytes) -> BenchReport:
    """Inverse of emit_report(..., 'json')."""
    doc = json.loads(blob.decode("utf-8"))
    return BenchReport(
        results=[ModelResult(m["name"], m["architecture"], m["mse"],
                             list(m["per_seed_mse"]), m["seconds"],
                             m.get("config_hash", ""))
                 for m in doc["models"]],
        seeds=list(doc["seeds"]))
