"""Binary PPM (P6) pictures of atoms, their images and orbits.

Coordinates map to pixels with ``theta`` to the right and ``r`` upward.
Points are splatted in fixed chunks and merged with a pixelwise maximum,
which does not depend on the order chunks finish in, so the bytes are the
same for any number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .decomposition import PartialDecomposition
from .ergodic import orbit
from .maps import PlanarMap

SIZE = 1024
BACKGROUND = (12, 12, 20)
PALETTE = np.array([
    (240, 200, 80), (90, 180, 240), (230, 110, 90), (120, 220, 140),
    (200, 130, 230), (240, 240, 240),
], dtype=np.uint8)


def ppm_bytes(img: np.ndarray) -> bytes:
    """``P6`` header plus raw RGB rows, top row first."""
    h, w, c = img.shape
    if c != 3 or img.dtype != np.uint8:
        raise ValueError("image must be an (h, w, 3) uint8 array")
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def write_ppm(img: np.ndarray, path: Union[str, Path]) -> None:
    Path(path).write_bytes(ppm_bytes(img))


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not an 8-bit P6 file")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def canvas(size: int = SIZE) -> np.ndarray:
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    return img


def to_pixels(th, r, size: int = SIZE):
    """Column and row of each point; ``r = 1`` is the top row."""
    col = np.clip(np.floor(np.mod(th, 1.0) * size).astype(np.int64), 0, size - 1)
    row = np.clip(size - 1 - np.floor(np.asarray(r) * size).astype(np.int64), 0, size - 1)
    return col, row


def _render_chunks(size: int, chunks: Sequence, make, workers: int) -> np.ndarray:
    """``make(chunk) -> (th, r, colour)``; merged by pixelwise max of colour codes."""

    def codes(chunk):
        th, r, c = make(chunk)
        col, row = to_pixels(th, r, size)
        out = np.full(size * size, -1, dtype=np.int64)
        np.maximum.at(out, row * size + col, np.asarray(c, dtype=np.int64))
        return out

    if workers <= 1:
        parts = [codes(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(codes, chunks))
    total = np.full(size * size, -1, dtype=np.int64)
    for p in parts:
        np.maximum(total, p, out=total)
    img = canvas(size)
    flat = img.reshape(-1, 3)
    hit = total >= 0
    flat[hit] = PALETTE[total[hit] % len(PALETTE)]
    return img


def _atom_points(dec: PartialDecomposition, idx: np.ndarray, per_atom: int):
    H = dec.heights.size
    i, h = np.divmod(idx, H)
    t = (np.arange(per_atom) + 0.5) / per_atom
    lo, hi = dec.lo[i], dec.hi[i]
    th = (lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel()
    r = np.repeat(dec.heights[h], per_atom)
    col = np.repeat(i % len(PALETTE), per_atom)
    return th, r, col


def render_atoms(dec: PartialDecomposition, size: int = SIZE, per_atom: Optional[int] = None,
                 workers: int = 1, max_atoms: int = 1 << 18) -> np.ndarray:
    """Every atom of ``dec`` drawn as a horizontal segment."""
    n = min(len(dec), max_atoms)
    per = per_atom or max(2, int(np.ceil(dec.max_length() * size * 2)))
    chunks = np.array_split(np.arange(n), max(1, n // 4096))
    return _render_chunks(size, chunks, lambda c: _atom_points(dec, c, per), workers)


def render_images(Phi: PlanarMap, dec: PartialDecomposition, size: int = SIZE,
                  per_atom: int = 400, workers: int = 1, max_atoms: int = 4096) -> np.ndarray:
    """``Phi`` applied to points along the atoms of ``dec``.

    At most ``max_atoms`` atoms are used, evenly spread over the
    decomposition, so that dense analytic decompositions stay cheap.
    """
    n = len(dec)
    idx = np.unique(np.linspace(0, n - 1, min(n, max_atoms)).round().astype(np.int64))
    chunks = np.array_split(idx, max(1, idx.size // 256))

    def make(c):
        th, r, col = _atom_points(dec, c, per_atom)
        u, v = Phi.forward(th, r)
        return u, v, col

    return _render_chunks(size, chunks, make, workers)


def orbit_points(mp: PlanarMap, starts: Iterable[tuple[float, float]], length: int):
    ths, rs, cs = [], [], []
    for j, start in enumerate(starts):
        th, r = orbit(mp, start, length)
        ths.append(th)
        rs.append(r)
        cs.append(np.full(length, j % len(PALETTE)))
    return np.concatenate(ths), np.concatenate(rs), np.concatenate(cs)


def render_orbit(mp: PlanarMap, starts: Sequence[tuple[float, float]], length: int,
                 size: int = SIZE, workers: int = 1) -> np.ndarray:
    chunks = [[s] for s in starts]
    return _render_chunks(size, chunks, lambda c: orbit_points(mp, c, length), workers)


def seeded_starts(count: int, seed: int = 0, surface: str = "torus") -> list[tuple[float, float]]:
    rng = np.random.default_rng(seed)
    pts = rng.random((count, 2))
    if surface == "annulus":
        pts[:, 1] = 0.05 + 0.9 * pts[:, 1]
    return [(float(a), float(b)) for a, b in pts]
