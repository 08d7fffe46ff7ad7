"""Composable invertible maps of the torus and the closed annulus.

Points are handled as pairs of numpy arrays ``(theta, r)``.  Every map works
on lifts: primitives return unreduced coordinates and the chain machinery
reduces ``theta`` (and ``r`` on the torus) modulo one after each step, which
is legitimate because every primitive here is the lift of a map that
commutes with the integer translations of its surface.

A :class:`Chain` stores its steps in application order: ``Chain([a, b])``
first applies ``a`` and then ``b``.  :func:`compose` builds chains in the
usual mathematical order, ``compose(f, g) = f o g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .ddmath import frac_mul

TORUS = "torus"
ANNULUS = "annulus"
SURFACES = (TORUS, ANNULUS)

#: how far an annulus point may leave [0, 1] before it counts as a defect
ANNULUS_TOL = 1e-9


class SeamError(ValueError):
    """Derivative requested on a declared non-smooth seam."""


class DefectError(ArithmeticError):
    """An annulus chain pushed a point out of [0, 1]."""


@dataclass(frozen=True)
class SurfacePoint:
    theta: float
    r: float


def _arr(x):
    return np.asarray(x, dtype=float)


def reduce_point(theta, r, surface: str):
    theta = np.mod(theta, 1.0)
    if surface == TORUS:
        r = np.mod(r, 1.0)
    else:
        r = np.asarray(r, dtype=float)
        bad = (r < -ANNULUS_TOL) | (r > 1 + ANNULUS_TOL)
        if np.any(bad):
            raise DefectError(f"annulus point escaped [0,1]: r={r[bad].ravel()[:3]}")
        r = np.clip(r, 0.0, 1.0)
    return theta, r


def _identity_jac(n):
    j = np.zeros((n, 2, 2))
    j[:, 0, 0] = 1.0
    j[:, 1, 1] = 1.0
    return j


def _inv2(j):
    det = j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]
    out = np.empty_like(j)
    out[:, 0, 0] = j[:, 1, 1] / det
    out[:, 1, 1] = j[:, 0, 0] / det
    out[:, 0, 1] = -j[:, 0, 1] / det
    out[:, 1, 0] = -j[:, 1, 0] / det
    return out


def _det2(j):
    return j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]


class PlanarMap:
    """Base class.  Subclasses implement ``_fwd``, ``_inv`` and ``_jac`` on 1-d arrays."""

    surface: str = TORUS
    measure_preserving: bool = True
    moser: bool = False
    name: str = "map"

    # --- primitive hooks -------------------------------------------------
    def _fwd(self, th, r):
        raise NotImplementedError

    def _inv(self, th, r):
        raise NotImplementedError

    def _jac(self, th, r):
        raise NotImplementedError

    def _det(self, th, r):
        return _det2(self._jac(th, r))

    def seam_mask(self, th, r, tol: float = 1e-12):
        """Points of the input lying on a seam of this map."""
        return np.zeros(np.shape(th), dtype=bool)

    def seams(self) -> list[str]:
        return []

    # --- public API -------------------------------------------------------
    def steps(self) -> list["PlanarMap"]:
        return [self]

    def forward(self, th, r):
        th, r = _arr(th), _arr(r)
        for s in self.steps():
            th, r = s._fwd(th, r)
            th, r = reduce_point(th, r, self.surface)
        return th, r

    def backward(self, th, r):
        th, r = _arr(th), _arr(r)
        for s in reversed(self.steps()):
            th, r = s._inv(th, r)
            th, r = reduce_point(th, r, self.surface)
        return th, r

    def jac(self, th, r, check_seams: bool = True):
        """Chain-rule Jacobian of the forward map, shape ``(N, 2, 2)``."""
        th, r = np.atleast_1d(_arr(th)), np.atleast_1d(_arr(r))
        total = _identity_jac(th.size)
        for s in self.steps():
            if check_seams and np.any(s.seam_mask(th, r)):
                raise SeamError(f"Jacobian requested on a seam of {s.name}")
            total = np.einsum("nij,njk->nik", s._jac(th, r), total)
            th, r = s._fwd(th, r)
            th, r = reduce_point(th, r, self.surface)
        return total

    def det(self, th, r):
        """Determinant as a product of primitive determinants (no cancellation)."""
        th, r = np.atleast_1d(_arr(th)), np.atleast_1d(_arr(r))
        d = np.ones(th.size)
        for s in self.steps():
            d = d * s._det(th, r)
            th, r = s._fwd(th, r)
            th, r = reduce_point(th, r, self.surface)
        return d

    def any_seam(self, th, r, tol: float = 1e-12):
        """Mask of points meeting a seam anywhere along the chain."""
        th, r = np.atleast_1d(_arr(th)), np.atleast_1d(_arr(r))
        mask = np.zeros(th.size, dtype=bool)
        for s in self.steps():
            mask |= s.seam_mask(th, r, tol)
            th, r = s._fwd(th, r)
            th, r = reduce_point(th, r, self.surface)
        return mask

    def inverse(self) -> "PlanarMap":
        return Inverse(self)

    def __matmul__(self, other: "PlanarMap") -> "PlanarMap":
        return compose(self, other)

    def __call__(self, th, r):
        return self.forward(th, r)


class Identity(PlanarMap):
    name = "Id"

    def __init__(self, surface: str = TORUS):
        self.surface = surface

    def _fwd(self, th, r):
        return th, r

    _inv = _fwd

    def _jac(self, th, r):
        return _identity_jac(np.size(th))


class Rotation(PlanarMap):
    """``R_t(theta, r) = (theta + t, r)``; ``t`` is kept exact when rational."""

    def __init__(self, t: Union[Fraction, float, int, str], surface: str = TORUS):
        self.surface = surface
        if isinstance(t, (Fraction, int, str)):
            t = Fraction(t)
            self.exact = t
            self.t = float(t - math.floor(t))
        else:
            self.exact = None
            self.t = float(t) % 1.0
        self.name = f"R({self.exact if self.exact is not None else self.t})"

    def _fwd(self, th, r):
        return th + self.t, r

    def _inv(self, th, r):
        return th - self.t, r

    def _jac(self, th, r):
        return _identity_jac(np.size(th))

    def _det(self, th, r):
        return np.ones(np.size(th))

    def power(self, m: int) -> "Rotation":
        if self.exact is not None:
            return Rotation(self.exact * m, self.surface)
        return Rotation(self.t * m, self.surface)


class AnalyticShear(PlanarMap):
    """``(theta, r + q**2 cos(2 pi q theta))``, an entire area-preserving shear."""

    def __init__(self, q: int, amplitude: Optional[float] = None, surface: str = TORUS):
        self.q = int(q)
        self.amp = float(self.q) ** 2 if amplitude is None else float(amplitude)
        self.surface = surface
        self.name = f"phi(q={self.q})"

    def _shift(self, th):
        return self.amp * np.cos(2 * math.pi * frac_mul(self.q, th))

    def _fwd(self, th, r):
        return th, r + self._shift(th)

    def _inv(self, th, r):
        return th, r - self._shift(th)

    def _jac(self, th, r):
        j = _identity_jac(np.size(th))
        j[:, 1, 0] = -2 * math.pi * self.q * self.amp * np.sin(2 * math.pi * frac_mul(self.q, th))
        return j

    def _det(self, th, r):
        return np.ones(np.size(th))


class Twist(PlanarMap):
    """``g(theta, r) = (theta + b r, r)`` with integer ``b``."""

    def __init__(self, b: int, surface: str = TORUS):
        self.b = int(b)
        self.surface = surface
        self.name = f"g(b={self.b})"

    def _fwd(self, th, r):
        return th + self.b * r, r

    def _inv(self, th, r):
        return th - self.b * r, r

    def _jac(self, th, r):
        j = _identity_jac(np.size(th))
        j[:, 0, 1] = self.b
        return j

    def _det(self, th, r):
        return np.ones(np.size(th))


class Affine(PlanarMap):
    """``x -> M x + c``; measure preserving only when ``det M = 1``."""

    def __init__(self, matrix, offset=(0.0, 0.0), surface: str = TORUS):
        self.m = np.asarray(matrix, dtype=float).reshape(2, 2)
        self.c = np.asarray(offset, dtype=float)
        self.minv = np.linalg.inv(self.m)
        self.surface = surface
        self.measure_preserving = abs(np.linalg.det(self.m) - 1) < 1e-15
        self.name = "affine"

    def _fwd(self, th, r):
        m, c = self.m, self.c
        return m[0, 0] * th + m[0, 1] * r + c[0], m[1, 0] * th + m[1, 1] * r + c[1]

    def _inv(self, th, r):
        a, b = th - self.c[0], r - self.c[1]
        mi = self.minv
        return mi[0, 0] * a + mi[0, 1] * b, mi[1, 0] * a + mi[1, 1] * b

    def _jac(self, th, r):
        return np.broadcast_to(self.m, (np.size(th), 2, 2)).copy()


class Inverse(PlanarMap):
    def __init__(self, base: PlanarMap):
        self.base = base
        self.surface = base.surface
        self.measure_preserving = base.measure_preserving
        self.moser = base.moser
        self.name = f"({base.name})^-1"

    def steps(self):
        base_steps = self.base.steps()
        if len(base_steps) == 1 and base_steps[0] is self.base:
            return [self]
        return [Inverse(s) for s in reversed(base_steps)]

    def _fwd(self, th, r):
        return self.base._inv(th, r)

    def _inv(self, th, r):
        return self.base._fwd(th, r)

    def _jac(self, th, r):
        pth, pr = self.base._inv(th, r)
        return _inv2(self.base._jac(pth, pr))

    def _det(self, th, r):
        pth, pr = self.base._inv(th, r)
        return 1.0 / self.base._det(pth, pr)

    def seam_mask(self, th, r, tol: float = 1e-12):
        pth, pr = self.base._inv(th, r)
        return self.base.seam_mask(pth, pr, tol)

    def inverse(self):
        return self.base


class Chain(PlanarMap):
    """Steps applied left to right."""

    def __init__(self, steps: Sequence[PlanarMap], surface: Optional[str] = None, name: str = ""):
        flat: list[PlanarMap] = []
        for s in steps:
            flat.extend(s.steps())
        if not flat:
            flat = [Identity(surface or TORUS)]
        self._steps = flat
        self.surface = surface or flat[0].surface
        if any(s.surface != self.surface for s in flat):
            raise ValueError("mixed surfaces in one chain")
        self.measure_preserving = all(s.measure_preserving for s in flat)
        self.moser = any(s.moser for s in flat)
        self.name = name or " -> ".join(s.name for s in flat)

    def steps(self):
        return list(self._steps)

    def inverse(self):
        return Chain([Inverse(s) if not isinstance(s, Inverse) else s.base
                      for s in reversed(self._steps)], self.surface, name=f"({self.name})^-1")


def compose(*maps: PlanarMap) -> Chain:
    """``compose(f, g, h) = f o g o h`` (``h`` is applied first)."""
    return Chain(list(reversed(maps)))


class ConjugatedRotation(Chain):
    """``H o R_{power * t} o H^{-1}`` with the rotation iterate collapsed exactly."""

    def __init__(self, conj: PlanarMap, t: Union[Fraction, float], power: int = 1, name: str = ""):
        self.conj = conj
        self.t = Fraction(t) if not isinstance(t, float) else t
        self.power_ = int(power)
        shift = self.t * self.power_
        super().__init__([conj.inverse(), Rotation(shift, conj.surface), conj], conj.surface,
                         name=name or f"H R({t})^{power} H^-1")

    def power(self, m: int) -> "ConjugatedRotation":
        return ConjugatedRotation(self.conj, self.t, self.power_ * m)


class Iterate(PlanarMap):
    """``map**power``; collapses exactly for rotations and conjugated rotations."""

    def __init__(self, base: PlanarMap, power: int):
        self.base = base
        self.power_ = int(power)
        self.surface = base.surface
        self.measure_preserving = base.measure_preserving
        self.moser = base.moser
        self.name = f"({base.name})^{power}"
        self.collapsed: Optional[PlanarMap] = None
        if isinstance(base, ConjugatedRotation):
            self.collapsed = base.power(self.power_)
        elif isinstance(base, Rotation):
            self.collapsed = base.power(self.power_)

    def steps(self):
        if self.collapsed is not None:
            return self.collapsed.steps()
        unit = self.base if self.power_ >= 0 else self.base.inverse()
        return unit.steps() * abs(self.power_)


def iterate(base: PlanarMap, power: int) -> PlanarMap:
    it = Iterate(base, power)
    return it.collapsed if it.collapsed is not None else it


# --------------------------------------------------------------------------
# functional API
# --------------------------------------------------------------------------

def evaluate(m: PlanarMap, point):
    """Apply ``m`` to a :class:`SurfacePoint` or to a ``(theta, r)`` pair of arrays."""
    if isinstance(point, SurfacePoint):
        th, r = m.forward(np.array([point.theta]), np.array([point.r]))
        return SurfacePoint(float(th[0]), float(r[0]))
    th, r = point
    return m.forward(th, r)


def jacobian(m: PlanarMap, point):
    if isinstance(point, SurfacePoint):
        return m.jac(np.array([point.theta]), np.array([point.r]))[0]
    th, r = point
    return m.jac(th, r)


def circle_diff(a, b):
    """Signed difference ``a - b`` reduced to ``[-1/2, 1/2)``."""
    d = np.asarray(a) - np.asarray(b)
    return d - np.floor(d + 0.5)


def _coord_diff(pa, pb, surface):
    dth = np.abs(circle_diff(pa[0], pb[0]))
    dr = np.abs(circle_diff(pa[1], pb[1])) if surface == TORUS else np.abs(pa[1] - pb[1])
    return dth, dr


@dataclass(frozen=True)
class DistanceEstimate:
    """Sampled lower bound of a sup-distance."""

    value: float
    samples: int

    def __float__(self):
        return self.value


def sample_points(budget: int, surface: str = TORUS, seed: int = 0, margin: float = 0.0):
    """Half jittered grid, half uniform random points (deterministic in ``seed``)."""
    rng = np.random.default_rng(seed)
    side = max(1, int(math.isqrt(max(budget // 2, 1))))
    g = (np.arange(side) + 0.5) / side
    gt, gr = np.meshgrid(g, g, indexing="ij")
    jit = rng.uniform(-0.5, 0.5, size=(2, side * side)) / side
    th = np.concatenate([gt.ravel() + jit[0], rng.random(budget - side * side)])
    r = np.concatenate([gr.ravel() + jit[1], rng.random(budget - side * side)])
    th = np.mod(th, 1.0)
    r = np.clip(r, margin, 1 - margin) if surface == ANNULUS else np.mod(r, 1.0)
    return th, r


def sup_distance_d0(a: PlanarMap, b: PlanarMap, sample_budget: int = 4096,
                    seed: int = 0) -> DistanceEstimate:
    """Sampled ``d_0``: max coordinate distance of the maps and of their inverses."""
    if a.surface != b.surface:
        raise ValueError("maps live on different surfaces")
    th, r = sample_points(sample_budget, a.surface, seed)
    best = 0.0
    for fa, fb in ((a.forward, b.forward), (a.backward, b.backward)):
        dth, dr = _coord_diff(fa(th, r), fb(th, r), a.surface)
        best = max(best, float(dth.max()), float(dr.max()))
    return DistanceEstimate(best, th.size)


_FD_STEP = {1: 1e-5, 2: 1e-4, 3: 1e-3}


def _fd_partials(fun, th, r, order: int, h: float):
    """All mixed central-difference partials of total ``order`` of ``fun`` (vector valued)."""
    from itertools import product

    w1 = np.array([-0.5, 0.0, 0.5])
    out = []
    for i in range(order + 1):
        j = order - i
        # central stencil for the i-th theta, j-th r derivative (tensor product)
        wt = np.array([1.0])
        for _ in range(i):
            wt = np.convolve(wt, w1)
        wr = np.array([1.0])
        for _ in range(j):
            wr = np.convolve(wr, w1)
        ot = (np.arange(wt.size) - (wt.size - 1) / 2) * h
        orr = (np.arange(wr.size) - (wr.size - 1) / 2) * h
        acc = None
        for (a, wa), (bb, wb) in product(zip(ot, wt), zip(orr, wr)):
            if wa == 0 or wb == 0:
                continue
            v = fun(th + a, r + bb)
            acc = wa * wb * v if acc is None else acc + wa * wb * v
        out.append(acc / h ** order)
    return out


def sup_distance_dk(a: PlanarMap, b: PlanarMap, k: int, sample_budget: int = 1024,
                    seed: int = 0) -> DistanceEstimate:
    """Sampled ``d_k`` (max over orders ``0..k``); partials beyond the first use finite differences.

    Order one uses the analytic chain Jacobians; order ``j >= 2`` applies
    ``(j-1)``-th central differences to them, which limits ``k`` to 4.
    """
    if k > 4:
        raise ValueError("d_k is supported for k <= 4 only")
    if k < 0:
        raise ValueError("k must be >= 0")
    margin = 0.02 if a.surface == ANNULUS else 0.0
    best = sup_distance_d0(a, b, sample_budget, seed).value
    th, r = sample_points(sample_budget, a.surface, seed + 1, margin)
    for fa, fb in ((a, b), (a.inverse(), b.inverse())):
        def jdiff(t, s, fa=fa, fb=fb):
            return (fa.jac(t, s, check_seams=False) - fb.jac(t, s, check_seams=False)).reshape(-1, 4)
        if k >= 1:
            best = max(best, float(np.abs(jdiff(th, r)).max()))
        for order in range(1, k):
            for part in _fd_partials(jdiff, th, r, order, _FD_STEP[order]):
                best = max(best, float(np.abs(part).max()))
    return DistanceEstimate(best, th.size)
