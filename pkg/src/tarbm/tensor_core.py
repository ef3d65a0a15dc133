"""Dense float64 matrix primitives and seeded randomness.

All numeric state in this package is carried by C-contiguous float64
numpy arrays. Randomness comes from :class:`Rng`, a thin wrapper around
numpy's Philox counter-based bit generator: the same 64-bit seed yields
the same draw sequence on every platform, which makes every training
run bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError


def as_matrix(x) -> np.ndarray:
    """Coerce to a C-contiguous float64 array without copying when possible."""
    return np.ascontiguousarray(x, dtype=np.float64)


class Rng:
    """Seeded counter-based random number generator (numpy Philox 4x64).

    Identical seeds produce identical draw sequences across runs and
    platforms. ``spawn`` derives independent, reproducible child streams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniform(self, *shape) -> np.ndarray:
        return self._gen.random(shape if shape else None)

    def normal(self, *shape) -> np.ndarray:
        return self._gen.standard_normal(shape if shape else None)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def spawn(self, key: int) -> "Rng":
        """Derive an independent stream keyed by (seed, key)."""
        child = Rng.__new__(Rng)
        child.seed = self.seed
        child._gen = np.random.Generator(np.random.Philox(key=[self.seed, int(key)]))
        return child


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, numerically stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sample_bernoulli(p: np.ndarray, rng: Rng) -> np.ndarray:
    """Draw independent {0,1} samples with success probabilities ``p``."""
    p = np.asarray(p, dtype=np.float64)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise DomainError("bernoulli probabilities must lie in [0, 1]")
    u = rng.uniform(*p.shape)
    return (u < p).astype(np.float64)


def gaussian_init(rows: int, cols: int, stddev: float, rng: Rng) -> np.ndarray:
    """I.i.d. normal(0, stddev^2) matrix."""
    if stddev < 0:
        raise DomainError(f"stddev must be >= 0, got {stddev}")
    return stddev * rng.normal(rows, cols)
