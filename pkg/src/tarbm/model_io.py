"""Binary model serialization.

Little-endian container, magic "TARBM1". Layout:

  magic(6) version(u32) kind(u8) visible_kind(u8) stage_flags(u8) pad(u8)
  V(u32) H(u32) M(u32) seed(u64) config_hash(32 raw bytes)
  then matrices, each as rows(u32) cols(u32) f64[rows*cols] row-major:
    w (VxH), b_v (Vx1), b_h (Hx1),
    trbm/tarbm: M delayed matrices (HxH), lag 1 first; the matrix at
      lag j left-multiplies the lag-j hidden vector to produce current
      hidden logits,
    crbm: M vis->vis matrices A_d (VxV), then M vis->hid B_d (VxH).

Stage flags: bit0 static_done, bit1 ae_done, bit2 joint_done.
Round-trips are bit-exact; unknown magic or version is rejected.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .crbm_model import CrbmParams
from .errors import DomainError, ParseError
from .rbm import BINARY, GAUSSIAN, RbmParams
from .tarbm_model import TarbmParams

MAGIC = b"TARBM1"
VERSION = 1

KINDS = ("rbm", "trbm", "tarbm", "crbm")
_VIS = (BINARY, GAUSSIAN)


@dataclass
class ModelFile:
    kind: str                     # rbm | trbm | tarbm | crbm
    params: object                # RbmParams | TarbmParams | CrbmParams
    seed: int = 0
    config_hash: str = ""         # sha256 hex digest, may be empty
    stages: dict = field(default_factory=lambda: {
        "static_done": False, "ae_done": False, "joint_done": False})

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")

    @property
    def static(self) -> RbmParams:
        return self.params if self.kind == "rbm" else self.params.static


def _write_matrix(fh, m: np.ndarray):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
    fh.write(np.ascontiguousarray(m).astype("<f8").tobytes())


def _read_matrix(fh) -> np.ndarray:
    rows, cols = struct.unpack("<II", fh.read(8))
    buf = fh.read(8 * rows * cols)
    if len(buf) != 8 * rows * cols:
        raise ParseError("truncated matrix data")
    return np.frombuffer(buf, dtype="<f8").reshape(rows, cols).copy()


def save_model(mf: ModelFile, path):
    static = mf.static
    v, h = static.w.shape
    if mf.kind in ("trbm", "tarbm"):
        m = mf.params.order
    elif mf.kind == "crbm":
        m = mf.params.order
    else:
        m = 0
    flags = (int(mf.stages.get("static_done", False))
             | int(mf.stages.get("ae_done", False)) << 1
             | int(mf.stages.get("joint_done", False)) << 2)
    try:
        digest = bytes.fromhex(mf.config_hash) if mf.config_hash else b"\x00" * 32
    except ValueError:
        raise DomainError("config_hash must be a sha256 hex digest")
    if len(digest) != 32:
        raise DomainError("config_hash must be a sha256 hex digest")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBBBB", VERSION, KINDS.index(mf.kind),
                             _VIS.index(static.visible_kind), flags, 0))
        fh.write(struct.pack("<IIIQ", v, h, m, mf.seed))
        fh.write(digest)
        _write_matrix(fh, static.w)
        _write_matrix(fh, static.b_v[:, None])
        _write_matrix(fh, static.b_h[:, None])
        if mf.kind in ("trbm", "tarbm"):
            for d in range(m):
                _write_matrix(fh, mf.params.delayed[d])
        elif mf.kind == "crbm":
            for d in range(m):
                _write_matrix(fh, mf.params.a[d])
            for d in range(m):
                _write_matrix(fh, mf.params.b[d])


def load_model(path) -> ModelFile:
    with open(path, "rb") as fh:
        if fh.read(6) != MAGIC:
            raise ParseError(f"{path}: not a model file (bad magic)")
        version, kind_i, vis_i, flags, _ = struct.unpack("<IBBBB", fh.read(8))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported model version {version}")
        if kind_i >= len(KINDS) or vis_i >= len(_VIS):
            raise ParseError(f"{path}: corrupt header")
        kind = KINDS[kind_i]
        v, h, m, seed = struct.unpack("<IIIQ", fh.read(20))
        digest = fh.read(32)
        w = _read_matrix(fh)
        b_v = _read_matrix(fh).ravel()
        b_h = _read_matrix(fh).ravel()
        static = RbmParams(w, b_v, b_h, _VIS[vis_i])
        if (v, h) != static.w.shape:
            raise ParseError(f"{path}: header dims disagree with matrices")
        if kind in ("trbm", "tarbm"):
            delayed = np.stack([_read_matrix(fh) for _ in range(m)]) \
                if m else np.empty((0, h, h))
            params = TarbmParams(static, delayed)
        elif kind == "crbm":
            a = np.stack([_read_matrix(fh) for _ in range(m)]) \
                if m else np.empty((0, v, v))
            b = np.stack([_read_matrix(fh) for _ in range(m)]) \
                if m else np.empty((0, v, h))
            params = CrbmParams(static, a, b)
        else:
            params = static
    config_hash = digest.hex() if digest != b"\x00" * 32 else ""
    stages = {"static_done": bool(flags & 1), "ae_done": bool(flags & 2),
              "joint_done": bool(flags & 4)}
    return ModelFile(kind, params, seed, config_hash, stages)
