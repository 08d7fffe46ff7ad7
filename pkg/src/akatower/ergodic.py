"""Monte-Carlo mixing diagnostics: correlations, Birkhoff sums, Jacobian sweeps.

Random numbers come from counter-based Philox streams keyed by
``(seed, block)``; work is cut into fixed blocks and hit counts are summed as
integers, so the result does not depend on how many workers run the blocks.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .maps import ANNULUS, ConjugatedRotation, PlanarMap, Rotation, iterate, sample_points

BLOCK = 1 << 16
Z95 = 1.959963984540054


@dataclass(frozen=True)
class Rect:
    """Half-open rectangle ``[t0, t1) x [r0, r1)`` in the unit square."""

    t0: float
    t1: float
    r0: float
    r1: float

    def __post_init__(self):
        if not (0.0 <= self.t0 < self.t1 <= 1.0 and 0.0 <= self.r0 < self.r1 <= 1.0):
            raise ValueError(f"rectangle {self} is not inside the surface")

    @property
    def measure(self) -> float:
        return (self.t1 - self.t0) * (self.r1 - self.r0)

    def contains(self, th, r) -> np.ndarray:
        return (th >= self.t0) & (th < self.t1) & (r >= self.r0) & (r < self.r1)

    def __str__(self) -> str:
        return f"[{self.t0!r},{self.t1!r})x[{self.r0!r},{self.r1!r})"

    @classmethod
    def parse(cls, text) -> "Rect":
        """From ``"t0,t1,r0,r1"`` or a 4-sequence."""
        vals = [float(v) for v in text.split(",")] if isinstance(text, str) else [float(v) for v in text]
        if len(vals) != 4:
            raise ValueError("a rectangle needs four numbers t0,t1,r0,r1")
        return cls(*vals)


def as_rect(x) -> Rect:
    return x if isinstance(x, Rect) else Rect.parse(x)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent stream for one block of work."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2 ** 64 - 1), int(block)]))


def run_blocks(fn: Callable[[int, int], int], total: int, workers: int = 1,
               block: int = BLOCK) -> int:
    """Sum of ``fn(block_index, size)`` over fixed blocks covering ``total``."""
    sizes = [min(block, total - s) for s in range(0, total, block)]
    if workers <= 1:
        return sum(fn(i, n) for i, n in enumerate(sizes))
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return sum(ex.map(lambda a: fn(*a), enumerate(sizes)))


@dataclass(frozen=True)
class CorrelationEstimate:
    map_id: str
    power: int
    A: Rect
    B: Rect
    samples: int
    hits: int
    estimate: float
    ci: float
    seed: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.estimate - self.ci, self.estimate + self.ci

    def below(self, other: "CorrelationEstimate") -> bool:
        """95% intervals separated with this one lower."""
        return self.estimate + self.ci < other.estimate - other.ci

    def row(self) -> list:
        return [self.map_id, self.power, str(self.A), str(self.B), self.samples,
                repr(self.estimate), repr(self.ci), self.seed]


CSV_COLUMNS = ["map_id", "power", "A", "B", "samples", "estimate", "ci", "seed"]


def correlation(mp: PlanarMap, power: int, A, B, samples: int = 10 ** 6, seed: int = 0,
                workers: int = 1, map_id: Optional[str] = None) -> CorrelationEstimate:
    """``|mu(B cap mp^{-power} A) - mu(A) mu(B)|`` with a 95% confidence half-width.

    Points are drawn uniformly in ``B`` and pushed forward ``power`` times
    (collapsed exactly for conjugated rotations), so the Bernoulli mean
    estimates ``mu(B cap f^-p A) / mu(B)``.
    """
    if samples < 10 ** 4:
        raise ValueError("at least 10^4 samples are required")
    A, B = as_rect(A), as_rect(B)
    it = iterate(mp, power)

    def count(block, n):
        rng = block_rng(seed, block)
        th = B.t0 + (B.t1 - B.t0) * rng.random(n)
        r = B.r0 + (B.r1 - B.r0) * rng.random(n)
        u, v = it.forward(th, r)
        return int(np.count_nonzero(A.contains(u, v)))

    hits = run_blocks(count, samples, workers)
    p = hits / samples
    mb = B.measure
    est = abs(mb * p - A.measure * mb)
    ci = Z95 * mb * math.sqrt(max(p * (1 - p), 0.0) / samples)
    return CorrelationEstimate(map_id or mp.name, int(power), A, B, samples, hits, est, ci, seed)


def rotation_correlation(shift: float, A, B) -> float:
    """Exact correlation of a rigid rotation by ``shift`` in ``theta`` (test oracle)."""
    A, B = as_rect(A), as_rect(B)
    a0, a1 = A.t0 - shift, A.t1 - shift
    overlap = 0.0
    for k in (-2, -1, 0, 1, 2):
        overlap += max(0.0, min(a1 + k, B.t1) - max(a0 + k, B.t0))
    rows = max(0.0, min(A.r1, B.r1) - max(A.r0, B.r0))
    return abs(overlap * rows - A.measure * B.measure)


def correlations_csv(rows: Sequence[CorrelationEstimate], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    if header:
        w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def orbit(mp: PlanarMap, point: tuple[float, float], length: int) -> tuple[np.ndarray, np.ndarray]:
    """The first ``length`` points of the orbit of ``point``.

    Conjugated rotations are evaluated as ``H R_{k t} H^{-1} x`` for every
    ``k`` at once, so no error accumulates along the orbit.
    """
    k = np.arange(length)
    th0, r0 = float(point[0]), float(point[1])
    if isinstance(mp, ConjugatedRotation):
        u, v = mp.conj.backward(np.array([th0]), np.array([r0]))
        th = np.mod(u[0] + np.mod(k * float(mp.t) * mp.power_, 1.0), 1.0)
        return mp.conj.forward(th, np.full(length, v[0]))
    if isinstance(mp, Rotation):
        return np.mod(th0 + k * float(mp.t), 1.0), np.full(length, r0)
    th, r = np.empty(length), np.empty(length)
    x, y = np.array([th0]), np.array([r0])
    for i in range(length):
        th[i], r[i] = x[0], y[0]
        x, y = mp.forward(x, y)
    return th, r


def birkhoff_average(mp: PlanarMap, observable: Callable, point: tuple[float, float],
                     length: int) -> float:
    """``(1/N) sum_{k<N} observable(mp^k x)`` along :func:`orbit`."""
    if length < 1:
        raise ValueError("length must be >= 1")
    th, r = orbit(mp, point, length)
    return float(np.mean(observable(th, r)))


def indicator(rect) -> Callable:
    rect = as_rect(rect)
    return lambda th, r: rect.contains(th, r).astype(float)


def jacobian_sweep(mp: PlanarMap, grid: int = 128, seed: int = 0) -> float:
    """Max ``|det D mp - 1|`` over a jittered grid, skipping seam points."""
    th, r = sample_points(2 * grid * grid, mp.surface, seed,
                          margin=1e-9 if mp.surface == ANNULUS else 0.0)
    th, r = th[: grid * grid], r[: grid * grid]
    keep = ~mp.any_seam(th, r, 1e-9)
    if not keep.any():
        return 0.0
    return float(np.abs(mp.det(th[keep], r[keep]) - 1.0).max())
