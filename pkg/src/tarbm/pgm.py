"""Binary (P5) PGM reading and writing, plus frame-directory ingestion.

Movies are ingested as directories of 8-bit grayscale PGM files named
frame_000000.pgm, frame_000001.pgm, ... (any zero padding works; frames
are ordered by the parsed index).
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import ParseError

_FRAME_RE = re.compile(r"^frame_(\d+)\.pgm$")


def write_pgm(path, img: np.ndarray):
    """Write a 2-D uint8 array as binary PGM, maxval 255."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ParseError(f"PGM image must be 2-D, got shape {img.shape}")
    img = img.astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (maxval <= 255) as a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ParseError(f"{path}: not a binary PGM (P5) file")
    # header = magic, width, height, maxval as whitespace-separated
    # tokens; '#' comments run to end of line
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ParseError(f"{path}: malformed PGM header")
    if maxval > 255:
        raise ParseError(f"{path}: 16-bit PGM not supported (maxval {maxval})")
    raw = data[pos:pos + w * h]
    if len(raw) != w * h:
        raise ParseError(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w)


def write_movie(directory, movie: np.ndarray):
    """Write a (T, H, W) array (values clipped to [0, 255]) as PGM frames."""
    os.makedirs(directory, exist_ok=True)
    movie = np.clip(np.asarray(movie), 0, 255)
    for t in range(movie.shape[0]):
        write_pgm(os.path.join(directory, f"frame_{t:06d}.pgm"), movie[t])


def read_movie(directory) -> np.ndarray:
    """Read frame_*.pgm files from a directory into a (T, H, W) float array."""
    entries = []
    for name in os.listdir(directory):
        m = _FRAME_RE.match(name)
        if m:
            entries.append((int(m.group(1)), name))
    if not entries:
        raise ParseError(f"{directory}: no frame_*.pgm files found")
    entries.sort()
    frames = [read_pgm(os.path.join(directory, name)) for _, name in entries]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise ParseError(f"{directory}: inconsistent frame sizes {shapes}")
    return np.stack(frames).astype(np.float64)
