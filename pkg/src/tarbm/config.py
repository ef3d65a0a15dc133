"""Flat key=value run configuration.

One documented key space covers model size, CD hyperparameters, the
training schedule, data preprocessing, the benchmark protocol and
visualization options. Files are '#'-commented key=value lines;
command line --set overrides are applied on top. Unknown keys are
rejected and every value is validated at parse time.
"""

from __future__ import annotations

import hashlib

from .errors import DomainError, ParseError


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (parser, default)
FIELDS = {
    "seed": (int, 0),
    # model
    "hidden_units": (int, 100),
    "delay": (int, 6),
    "visible_kind": (str, "gaussian"),
    "init_stddev": (float, 0.01),
    # contrastive divergence
    "cd_k": (int, 1),
    "learning_rate": (float, 1e-3),
    "sparsity_target": (float, 0.05),
    "sparsity_weight": (float, 0.1),
    "momentum": (float, 0.9),
    "momentum_start_epoch": (int, 5),
    "weight_decay": (float, 1e-4),
    # schedule
    "static_epochs": (int, 100),
    "ae_epochs_per_delay": (int, 50),
    "joint_epochs": (int, 100),
    "minibatch_size": (int, 100),
    "ae_learning_rate": (float, 1e-3),
    "ae_momentum": (float, 0.9),
    # data
    "delimiter": (str, ","),
    "patch_edge": (int, 8),
    "frames_per_sequence": (int, 30),
    "stride": (int, 1),
    "max_samples": (int, 1000),
    "contrast_normalize": (_bool, True),
    "whiten": (_bool, True),
    "whiten_epsilon": (float, 1e-2),
    "whiten_relative": (_bool, True),
    # synthetic data (used with synth:KIND dataset paths)
    "synth_dims": (int, 10),
    "synth_frames": (int, 100),
    "synth_sequences": (int, 1),
    "synth_modes": (int, 3),
    # benchmark protocol
    "train_count": (int, 2000),
    "test_snippets": (int, 1000),
    "repetitions": (int, 100),
    "bench_seeds": (int, 1),
    "bench_models": (str, "tarbm,trbm,crbm"),
    # visualization
    "fan_out": (int, 1),
    "viz_units": (int, 16),
    "global_normalize": (_bool, False),
}


class RunConfig:
    def __init__(self, values=None):
        self.values = {k: default for k, (_, default) in FIELDS.items()}
        self.explicit = set()
        if values:
            self.values.update(values)
            self.explicit.update(values)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key)

    def set(self, key: str, raw: str):
        if key not in FIELDS:
            raise DomainError(f"unknown config key {key!r}")
        parser = FIELDS[key][0]
        try:
            self.values[key] = parser(raw)
        except ValueError as exc:
            raise DomainError(f"bad value for {key!r}: {exc}")
        self.explicit.add(key)

    def hash(self) -> str:
        canon = "".join(f"{k}={self.values[k]!r}\n" for k in sorted(self.values))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    # bridges into the module configs; imported lazily to keep this
    # module dependency-free for the CLI's --help path
    def cd_config(self):
        from .rbm import CdConfig
        return CdConfig(k=self.cd_k, learning_rate=self.learning_rate,
                        sparsity_target=self.sparsity_target,
                        sparsity_weight=self.sparsity_weight,
                        momentum=self.momentum,
                        momentum_start_epoch=self.momentum_start_epoch,
                        weight_decay=self.weight_decay)

    def schedule(self):
        from .tarbm_model import TrainSchedule
        return TrainSchedule(static_epochs=self.static_epochs,
                             ae_epochs_per_delay=self.ae_epochs_per_delay,
                             joint_epochs=self.joint_epochs,
                             minibatch_size=self.minibatch_size,
                             ae_learning_rate=self.ae_learning_rate,
                             ae_momentum=self.ae_momentum)

    def protocol(self):
        from .bench import Protocol
        return Protocol(train_count=self.train_count,
                        test_snippets=self.test_snippets,
                        repetitions=self.repetitions,
                        hidden_units=self.hidden_units,
                        delay=self.delay)

    def patch_spec(self):
        from .data import PatchSpec
        return PatchSpec(patch_edge=self.patch_edge,
                         frames_per_sequence=self.frames_per_sequence,
                         stride=self.stride, max_samples=self.max_samples)


def load_config(path) -> RunConfig:
    cfg = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            try:
                cfg.set(key.strip(), value.strip())
            except DomainError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}")
    return cfg
