"""Finite partial decompositions made of horizontal intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np


@dataclass(frozen=True)
class Atom:
    """The horizontal interval ``[lo, hi] x {r}``; ``lo`` may exceed 1 when it wraps."""

    id: int
    lo: float
    hi: float
    r: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass
class PartialDecomposition:
    """Intervals on the circle replicated at each height of a finite grid.

    Atom ``k`` is interval ``k // len(heights)`` at height ``k % len(heights)``.
    """

    lo: np.ndarray
    hi: np.ndarray
    heights: np.ndarray
    surface: str = "torus"
    label: str = ""
    log: list[str] = field(default_factory=list)
    #: optional tag per interval (e.g. "I" or "Ibar" in the smooth case)
    kinds: Optional[np.ndarray] = None
    #: length of the r-range the finite height grid stands for
    span: float = 1.0

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if np.any(self.hi <= self.lo):
            raise ValueError("empty interval in decomposition")

    @property
    def n_intervals(self) -> int:
        return self.lo.size

    def __len__(self) -> int:
        return self.lo.size * self.heights.size

    def atom(self, k: int) -> Atom:
        i, h = divmod(k, self.heights.size)
        return Atom(k, float(self.lo[i]), float(self.hi[i]), float(self.heights[h]))

    def __iter__(self) -> Iterator[Atom]:
        for k in range(len(self)):
            yield self.atom(k)

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def theta_measure(self) -> float:
        """Total length of the (disjoint) intervals."""
        return float(self.lengths.sum())

    def max_length(self) -> float:
        return float(self.lengths.max())

    def coverage(self) -> float:
        """Area of the union of atoms when every height of the represented r-range is used."""
        return self.theta_measure() * self.span
