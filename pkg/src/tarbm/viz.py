"""Receptive-field visualization.

Static filter grids, per-unit CRBM delayed-weight rows, and the
forward-projection traces that follow a hidden unit's most strongly
implied successors through the delayed weights of a temporal model.
All images are 8-bit grayscale, deterministic, and written as PGM (or
PNG when Pillow is installed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import pgm
from .crbm_model import CrbmParams
from .errors import DomainError
from .tarbm_model import TarbmParams

SEPARATOR = 0          # separator pixel value between tiles
DEGENERATE_GRAY = 128  # tile value when a filter column is constant


def _check_edge(n_visible: int, patch_edge: int):
    if patch_edge < 1 or n_visible != patch_edge * patch_edge:
        raise DomainError(
            f"V={n_visible} is not patch_edge^2 for patch_edge={patch_edge}")


def normalize_tile(column: np.ndarray, patch_edge: int,
                   value_range=None) -> np.ndarray:
    """Reshape a weight column to a patch and min-max scale to [0, 255].

    A constant column maps to mid-gray (128). ``value_range`` overrides
    the (lo, hi) used for scaling (global normalization)."""
    col = np.asarray(column, dtype=np.float64)
    _check_edge(col.size, patch_edge)
    lo, hi = value_range if value_range is not None else (col.min(), col.max())
    tile = col.reshape(patch_edge, patch_edge)
    if hi <= lo:
        return np.full((patch_edge, patch_edge), DEGENERATE_GRAY, dtype=np.uint8)
    scaled = np.rint((tile - lo) / (hi - lo) * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def assemble(tile_rows) -> np.ndarray:
    """Tile a list of rows of equally sized tiles with 1-px separators."""
    edge = tile_rows[0][0].shape[0]
    width = max(len(r) for r in tile_rows)
    out_h = len(tile_rows) * (edge + 1) - 1
    out_w = width * (edge + 1) - 1
    img = np.full((out_h, out_w), SEPARATOR, dtype=np.uint8)
    for r, row in enumerate(tile_rows):
        for c, tile in enumerate(row):
            y, x = r * (edge + 1), c * (edge + 1)
            img[y:y + edge, x:x + edge] = tile
    return img


def _grid_layout(n: int, layout=None):
    if layout is not None:
        rows, cols = layout
        if rows * cols < n:
            raise DomainError(f"layout {layout} too small for {n} tiles")
        return rows, cols
    cols = int(np.ceil(np.sqrt(n)))
    return int(np.ceil(n / cols)), cols


def filter_grid(w: np.ndarray, patch_edge: int, layout=None,
                global_normalize: bool = False) -> np.ndarray:
    """All hidden units' weight columns as a tiled grayscale image."""
    w = np.asarray(w, dtype=np.float64)
    _check_edge(w.shape[0], patch_edge)
    n_hidden = w.shape[1]
    rng_all = (w.min(), w.max()) if global_normalize else None
    rows, cols = _grid_layout(n_hidden, layout)
    tiles = [[normalize_tile(w[:, r * cols + c], patch_edge, rng_all)
              for c in range(cols) if r * cols + c < n_hidden]
             for r in range(rows)]
    return assemble(tiles)


def crbm_temporal_grid(params: CrbmParams, unit: int, patch_edge: int,
                       global_normalize: bool = False) -> np.ndarray:
    """One image row per hidden unit: delayed projections oldest first,
    static filter rightmost (time runs left to right)."""
    if not 0 <= unit < params.static.n_hidden:
        raise DomainError(f"unit {unit} out of range")
    cols = [params.b[d][:, unit] for d in range(params.order - 1, -1, -1)]
    cols.append(params.static.w[:, unit])
    rng_all = None
    if global_normalize:
        allv = np.concatenate(cols)
        rng_all = (allv.min(), allv.max())
    return assemble([[normalize_tile(c, patch_edge, rng_all) for c in cols]])


# ---------------------------------------------------------------------------
# forward projection

@dataclass
class TraceNode:
    unit: int
    score: float
    parent: int  # index into the previous level; -1 for the root


@dataclass
class ProjectionTrace:
    root: int
    fan_out: int
    levels: list  # levels[k]: list of TraceNode, k steps after the root

    def path_units(self, leaf_index: int) -> list:
        """Units along the root-to-leaf path of the given final node."""
        units = []
        k, i = len(self.levels) - 1, leaf_index
        while k >= 0:
            node = self.levels[k][i]
            units.append(node.unit)
            i = node.parent
            k -= 1
        return units[::-1]


def forward_projection(params: TarbmParams, root: int, n: int) -> ProjectionTrace:
    """Trace the most strongly implied successor units from ``root``.

    The root sits at time t-M. Stepping toward t, a candidate unit's
    score is the summed logit contribution from every ancestor on the
    branch through the delayed matrix matching its lag; each branch
    keeps the n highest-scoring candidates, ties broken by lowest unit
    index."""
    h = params.static.n_hidden
    m = params.order
    if not 0 <= root < h:
        raise DomainError(f"root unit {root} out of range for H={h}")
    if not 1 <= n <= h:
        raise DomainError(f"fan-out n={n} must lie in [1, {h}]")
    levels = [[TraceNode(root, 0.0, -1)]]
    for k in range(1, m + 1):
        prev = levels[-1]
        nxt = []
        for pi, _ in enumerate(prev):
            # accumulate logit contributions from every ancestor of
            # this branch; ancestor at level k-lag acts through w_lag
            scores = np.zeros(h)
            level, i = k - 1, pi
            while level >= 0:
                node = levels[level][i]
                lag = k - level
                scores += params.delayed[lag - 1][:, node.unit]
                i = node.parent
                level -= 1
            order = np.argsort(-scores, kind="stable")[:n]
            nxt.extend(TraceNode(int(j), float(scores[j]), pi) for j in order)
        levels.append(nxt)
    return ProjectionTrace(root, n, levels)


def trace_to_json(trace: ProjectionTrace) -> dict:
    return {
        "root": trace.root,
        "n": trace.fan_out,
        "levels": [[{"unit": node.unit, "score": node.score} for node in level]
                   for level in trace.levels],
    }


def save_trace_sidecar(trace: ProjectionTrace, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace_to_json(trace), fh, indent=2)
        fh.write("\n")


def render_trace(trace: ProjectionTrace, params: TarbmParams, patch_edge: int,
                 layout: str = "n1_column",
                 global_normalize: bool = False) -> np.ndarray:
    """Render a projection trace using the static filters of the
    selected units.

    n1_column stacks M+1 tiles, time t-M at the top and t at the
    bottom. tree_rows widens to n^M columns; a node at level k is
    repeated n^(M-k) times so every column reads as one root-to-leaf
    path top to bottom."""
    w = params.static.w
    _check_edge(w.shape[0], patch_edge)
    rng_all = (w.min(), w.max()) if global_normalize else None
    n, m = trace.fan_out, len(trace.levels) - 1
    if layout == "n1_column":
        if n != 1:
            raise DomainError("n1_column layout requires a fan-out of 1")
        rows = [[normalize_tile(w[:, level[0].unit], patch_edge, rng_all)]
                for level in trace.levels]
        return assemble(rows)
    if layout == "tree_rows":
        rows = []
        for k, level in enumerate(trace.levels):
            repeat = n ** (m - k)
            row = []
            for node in level:
                row.extend([normalize_tile(w[:, node.unit], patch_edge, rng_all)]
                           * repeat)
            rows.append(row)
        return assemble(rows)
    raise DomainError(f"unknown trace layout {layout!r}")


def trace_image_shape(order: int, fan_out: int, patch_edge: int,
                      layout: str) -> tuple:
    """Pixel dimensions render_trace will produce (documented formula)."""
    e = patch_edge + 1
    height = (order + 1) * e - 1
    width = (fan_out ** order if layout == "tree_rows" else 1) * e - 1
    return height, width


# ---------------------------------------------------------------------------
# temporal variation ranking

def _tarbm_unit_tiles(params: TarbmParams, unit: int, patch_edge: int):
    trace = forward_projection(params, unit, 1)
    return [normalize_tile(params.static.w[:, level[0].unit], patch_edge)
            for level in trace.levels]


def _crbm_unit_tiles(params: CrbmParams, unit: int, patch_edge: int):
    cols = [params.b[d][:, unit] for d in range(params.order - 1, -1, -1)]
    cols.append(params.static.w[:, unit])
    return [normalize_tile(c, patch_edge) for c in cols]


def temporal_variation_rank(params, patch_edge: int) -> list:
    """Hidden units ordered by descending variance, across time steps,
    of their rendered projection tiles (TARBM: along the n=1 trace;
    CRBM: across the delayed/static tiles). Ties break by unit index."""
    if isinstance(params, TarbmParams):
        tiles_of = _tarbm_unit_tiles
    elif isinstance(params, CrbmParams):
        tiles_of = _crbm_unit_tiles
    else:
        raise DomainError("temporal variation rank applies to TARBM or CRBM params")
    h = params.static.n_hidden
    scores = np.empty(h)
    for unit in range(h):
        tiles = np.stack(tiles_of(params, unit, patch_edge)).astype(np.float64)
        scores[unit] = float(tiles.var(axis=0).mean())
    return [int(i) for i in np.argsort(-scores, kind="stable")]


def unit_tile_variance(params, unit: int, patch_edge: int) -> float:
    """Mean per-pixel variance across the unit's tile sequence."""
    if isinstance(params, TarbmParams):
        tiles = _tarbm_unit_tiles(params, unit, patch_edge)
    else:
        tiles = _crbm_unit_tiles(params, unit, patch_edge)
    return float(np.stack(tiles).astype(np.float64).var(axis=0).mean())


def write_image(path, img: np.ndarray):
    """Write a grayscale image; format chosen by extension (.pgm/.png)."""
    path = str(path)
    if path.endswith(".pgm"):
        pgm.write_pgm(path, img)
        return
    if path.endswith(".png"):
        try:
            from PIL import Image
        except ImportError:
            raise DomainError("PNG output requires Pillow; use .pgm instead")
        Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path)
        return
    raise DomainError(f"unsupported image extension on {path!r} (use .pgm or .png)")
