"""Sequence datasets: ingestion, preprocessing and windowing.

A dataset is an ordered stack of frames (T, V) plus the start indices
of its sequences; training windows of M+1 consecutive frames never
cross a sequence boundary. Ingestion formats: delimited text (blank
line = sequence boundary, '#' = comment), binary P5 PGM frame
directories for movies, and a little-endian binary cache (magic
"TSEQ1").
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, ShapeError
from .tensor_core import Rng

CACHE_MAGIC = b"TSEQ1"


@dataclass
class SequenceDataset:
    frames: np.ndarray               # (T, V)
    boundaries: list = None          # sequence start indices, [0, ...)
    labels: list = None              # optional per-dimension names

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ShapeError(f"frames must be (T, V), got {self.frames.shape}")
        if self.boundaries is None:
            self.boundaries = [0]
        self.boundaries = [int(b) for b in self.boundaries]
        t = self.frames.shape[0]
        ok = (self.boundaries and self.boundaries[0] == 0
              and all(b1 < b2 for b1, b2 in zip(self.boundaries, self.boundaries[1:]))
              and (self.boundaries[-1] < t or (t == 0 and len(self.boundaries) == 1)))
        if not ok:
            raise DomainError(f"invalid sequence boundaries {self.boundaries} for T={t}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_dims(self) -> int:
        return self.frames.shape[1]

    def sequence_spans(self) -> list:
        """(start, end) pairs, end exclusive."""
        starts = self.boundaries
        ends = list(starts[1:]) + [self.n_frames]
        return list(zip(starts, ends))


# ---------------------------------------------------------------------------
# delimited text

def load_delimited(path, delimiter: str = ",") -> SequenceDataset:
    """Numeric frames, one per line; blank lines split sequences and
    '#' starts a comment line."""
    frames, boundaries = [], [0]
    pending_break = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#"):
                continue
            if not line:
                if frames:
                    pending_break = True
                continue
            try:
                row = [float(tok) for tok in line.split(delimiter)]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric field ({exc})")
            if frames and len(row) != len(frames[0]):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(frames[0])} columns, got {len(row)}")
            if pending_break:
                boundaries.append(len(frames))
                pending_break = False
            frames.append(row)
    if not frames:
        raise ParseError(f"{path}: no data rows")
    return SequenceDataset(np.array(frames, dtype=np.float64), boundaries)


def save_delimited(dataset: SequenceDataset, path, delimiter: str = ","):
    spans = dataset.sequence_spans()
    with open(path, "w", encoding="utf-8") as fh:
        for si, (a, b) in enumerate(spans):
            if si:
                fh.write("\n")
            for t in range(a, b):
                fh.write(delimiter.join(repr(float(x))
                                        for x in dataset.frames[t]) + "\n")


# ---------------------------------------------------------------------------
# binary cache

def save_cache(dataset: SequenceDataset, path):
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        t, v = dataset.frames.shape
        fh.write(struct.pack("<III", t, v, len(dataset.boundaries)))
        fh.write(np.asarray(dataset.boundaries, dtype="<u4").tobytes())
        fh.write(dataset.frames.astype("<f8").tobytes())


def load_cache(path) -> SequenceDataset:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != CACHE_MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        t, v, nb = struct.unpack("<III", fh.read(12))
        boundaries = np.frombuffer(fh.read(4 * nb), dtype="<u4").tolist()
        frames = np.frombuffer(fh.read(8 * t * v), dtype="<f8").reshape(t, v)
    return SequenceDataset(frames.copy(), boundaries)


# ---------------------------------------------------------------------------
# preprocessing

def contrast_normalize(dataset: SequenceDataset) -> SequenceDataset:
    """Per frame: subtract the frame mean, divide by max(stddev, 1e-8)."""
    x = dataset.frames
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    out = (x - mu) / np.maximum(sd, 1e-8)
    return SequenceDataset(out, list(dataset.boundaries), dataset.labels)


@dataclass
class WhiteningTransform:
    mean: np.ndarray        # (V,)
    transform: np.ndarray   # (V, V), symmetric
    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("whitening epsilon must be > 0")


def fit_zca(dataset: SequenceDataset, epsilon: float = 1e-2,
            relative_epsilon: bool = False) -> WhiteningTransform:
    """ZCA whitening from the eigendecomposition of the frame covariance.

    With relative_epsilon the regularizer is scaled by the mean
    eigenvalue, making the default usable regardless of data scale.
    """
    x = dataset.frames
    t, v = x.shape
    if t <= v:
        warnings.warn(f"fitting ZCA with T={t} <= V={v}; covariance is rank-deficient")
    if not np.all(np.isfinite(x)):
        raise DomainError("frames contain non-finite values")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / t
    lam, e = np.linalg.eigh(cov)
    lam = np.clip(lam, 0.0, None)
    eps = epsilon * float(lam.mean()) if relative_epsilon else epsilon
    transform = (e * (1.0 / np.sqrt(lam + eps))) @ e.T
    return WhiteningTransform(mean, transform, eps)


def apply_zca(tf: WhiteningTransform, dataset: SequenceDataset) -> SequenceDataset:
    out = (dataset.frames - tf.mean) @ tf.transform
    return SequenceDataset(out, list(dataset.boundaries), dataset.labels)


# ---------------------------------------------------------------------------
# windowing

def window_tensor(dataset: SequenceDataset, order: int) -> np.ndarray:
    """All width-(order+1) windows as an (N, order+1, V) tensor.

    Row d of a window is the frame at lag d (d = 0 is the most recent).
    Windows never span a sequence boundary; N = sum over sequences of
    max(0, length - order).
    """
    if order < 0:
        raise DomainError("window order must be >= 0")
    chunks = []
    for a, b in dataset.sequence_spans():
        for t in range(a + order, b):
            chunks.append(dataset.frames[t - order:t + 1][::-1])
    if not chunks:
        return np.empty((0, order + 1, dataset.n_dims))
    return np.ascontiguousarray(np.stack(chunks))


def make_windows(dataset: SequenceDataset, order: int):
    """Generator over (order+1, V) windows, lag-major (row 0 = newest)."""
    for w in window_tensor(dataset, order):
        yield w


# ---------------------------------------------------------------------------
# patch extraction from movies

@dataclass
class PatchSpec:
    patch_edge: int = 8
    frames_per_sequence: int = 30
    stride: int = 1
    max_samples: int = 1000

    def __post_init__(self):
        if self.patch_edge < 1 or self.stride < 1:
            raise DomainError("patch_edge and stride must be >= 1")
        if self.frames_per_sequence < 1 or self.max_samples < 1:
            raise DomainError("frames_per_sequence and max_samples must be >= 1")


def extract_patch_sequences(movie: np.ndarray, spec: PatchSpec,
                            rng: Rng) -> SequenceDataset:
    """Sample patch sequences from a grayscale movie (T, H, W).

    Each sequence tracks one fixed spatial window (chosen on the stride
    grid at a seeded random position and start frame) across
    frames_per_sequence consecutive frames, flattened row-major.
    """
    movie = np.asarray(movie, dtype=np.float64)
    if movie.ndim != 3:
        raise ShapeError(f"movie must be (T, H, W), got {movie.shape}")
    t, h, w = movie.shape
    e, f = spec.patch_edge, spec.frames_per_sequence
    if h < e or w < e:
        raise DomainError(f"movie frames {h}x{w} smaller than patch edge {e}")
    if t < f:
        raise DomainError(f"movie has {t} frames, need >= {f}")
    n_r = (h - e) // spec.stride + 1
    n_c = (w - e) // spec.stride + 1
    frames, boundaries = [], []
    for _ in range(spec.max_samples):
        t0 = int(rng.integers(0, t - f + 1))
        r = spec.stride * int(rng.integers(0, n_r))
        c = spec.stride * int(rng.integers(0, n_c))
        boundaries.append(len(frames))
        for dt in range(f):
            frames.append(movie[t0 + dt, r:r + e, c:c + e].ravel())
    return SequenceDataset(np.array(frames), boundaries)


# ---------------------------------------------------------------------------
# synthetic sequence generators

SYNTH_KINDS = ("cyclic_shift", "sinusoid_mixture", "translating_bar",
               "bouncing_ball")


def make_cyclic_shift(n_dims: int, n_frames: int, n_sequences: int = 1,
                      rng: Rng = None) -> SequenceDataset:
    """One-hot frames shifting by one position per step (wrap-around).
    Each sequence starts at a seeded random offset."""
    if n_dims < 2 or n_frames < 1 or n_sequences < 1:
        raise DomainError("need n_dims >= 2, n_frames >= 1, n_sequences >= 1")
    frames = np.zeros((n_frames * n_sequences, n_dims))
    boundaries = []
    for s in range(n_sequences):
        off = int(rng.integers(0, n_dims)) if rng is not None else 0
        boundaries.append(s * n_frames)
        for t in range(n_frames):
            frames[s * n_frames + t, (off + t) % n_dims] = 1.0
    return SequenceDataset(frames, boundaries)


def make_sinusoid_mixture(n_dims: int, n_frames: int, n_modes: int,
                          rng: Rng, n_sequences: int = 1) -> SequenceDataset:
    """Each dimension is a fixed random mixture of shared sinusoids:
    x_k(t) = sum_m a_km sin(w_m t + p_km)."""
    if n_dims < 1 or n_frames < 1 or n_modes < 1 or n_sequences < 1:
        raise DomainError("sinusoid_mixture parameters must be >= 1")
    omega = 0.05 + 0.45 * rng.uniform(n_modes)
    amp = rng.normal(n_dims, n_modes) / np.sqrt(n_modes)
    phase = 2.0 * np.pi * rng.uniform(n_dims, n_modes)
    frames = np.empty((n_frames * n_sequences, n_dims))
    boundaries = []
    for s in range(n_sequences):
        t0 = float(rng.uniform()) * 1000.0
        boundaries.append(s * n_frames)
        t = t0 + np.arange(n_frames)[:, None, None]
        frames[s * n_frames:(s + 1) * n_frames] = np.sum(
            amp * np.sin(omega * t + phase), axis=2)
    return SequenceDataset(frames, boundaries)


def make_translating_bar(edge: int, n_frames: int, n_sequences: int = 1,
                         rng: Rng = None) -> SequenceDataset:
    """A vertical one-pixel bar sweeping across an edge x edge patch,
    one pixel per frame with wrap-around; frames flattened row-major."""
    if edge < 2 or n_frames < 1 or n_sequences < 1:
        raise DomainError("need edge >= 2, n_frames >= 1, n_sequences >= 1")
    frames = np.zeros((n_frames * n_sequences, edge * edge))
    boundaries = []
    for s in range(n_sequences):
        off = int(rng.integers(0, edge)) if rng is not None else 0
        boundaries.append(s * n_frames)
        for t in range(n_frames):
            img = np.zeros((edge, edge))
            img[:, (off + t) % edge] = 1.0
            frames[s * n_frames + t] = img.ravel()
    return SequenceDataset(frames, boundaries)


def make_bouncing_ball(n_frames: int, rng: Rng, speed: float = 0.07,
                       n_sequences: int = 1) -> SequenceDataset:
    """2-D position of a point bouncing in the unit box with exact
    reflections; speed is conserved exactly."""
    if n_frames < 1 or n_sequences < 1 or not 0 < speed < 1:
        raise DomainError("need n_frames >= 1, n_sequences >= 1, 0 < speed < 1")
    frames = np.empty((n_frames * n_sequences, 2))
    boundaries = []
    for s in range(n_sequences):
        boundaries.append(s * n_frames)
        pos = rng.uniform(2)
        theta = 2.0 * np.pi * float(rng.uniform())
        vel = speed * np.array([np.cos(theta), np.sin(theta)])
        for t in range(n_frames):
            frames[s * n_frames + t] = pos
            for k in range(2):
                nxt = pos[k] + vel[k]
                if nxt < 0.0:
                    nxt = -nxt
                    vel[k] = -vel[k]
                elif nxt > 1.0:
                    nxt = 2.0 - nxt
                    vel[k] = -vel[k]
                pos[k] = nxt
    return SequenceDataset(frames, boundaries)


def synthesize(kind: str, rng: Rng, **kwargs) -> SequenceDataset:
    """Dispatch on the generator kind name."""
    if kind == "cyclic_shift":
        return make_cyclic_shift(rng=rng, **kwargs)
    if kind == "sinusoid_mixture":
        return make_sinusoid_mixture(rng=rng, **kwargs)
    if kind == "translating_bar":
        return make_translating_bar(rng=rng, **kwargs)
    if kind == "bouncing_ball":
        return make_bouncing_ball(rng=rng, **kwargs)
    raise DomainError(f"unknown synthetic kind {kind!r}; have {SYNTH_KINDS}")


def translating_bar_movie(height: int, width: int, n_frames: int,
                          bar_width: int = 2, background: float = 32.0,
                          foreground: float = 224.0) -> np.ndarray:
    """Grayscale movie (T, H, W) of a vertical bar scrolling one pixel
    per frame with wrap-around; values in [0, 255]."""
    movie = np.full((n_frames, height, width), background)
    for t in range(n_frames):
        for b in range(bar_width):
            movie[t, :, (t + b) % width] = foreground
    return movie
