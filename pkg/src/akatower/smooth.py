"""The smooth tower on the annulus (or torus).

Stage ``n`` uses the standard square map with ``eps = 1/(3n)`` rescaled onto
the left half ``D^1`` of each fundamental domain ``[j/q, (j+1)/q] x [0, 1]``
and the identity on the right half ``D^2``.  Atoms of ``eta_n`` are turned
into exactly vertical segments by ``Phi_n``, which is what makes the weak
mixing criterion hold with ``gamma = eps = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import arithmetic as ar
from .analytic import ConditionViolation
from .decomposition import PartialDecomposition
from .maps import (ANNULUS, TORUS, ConjugatedRotation, Identity, PlanarMap, Rotation, Twist,
                   _fd_partials, _identity_jac, circle_diff, compose, sample_points,
                   sup_distance_d0, sup_distance_dk)
from .standard_map import StandardSquareMap, build_standard_map

#: Moser steps used inside towers (the determinant error is dominated by the
#: flux tables, not by the step count, so 32 steps lose nothing measurable)
TOWER_MOSER_STEPS = 16


@lru_cache(maxsize=16)
def standard_map(epsilon: float, steps: int = TOWER_MOSER_STEPS) -> StandardSquareMap:
    return build_standard_map(epsilon, steps)


def stage_epsilon(n: int) -> float:
    return 1.0 / (3 * n)


class SmoothPhi(PlanarMap):
    """``phi_n``: ``C_n^{-1} o phi(eps) o C_n`` on every ``D^1_{n,j}``, identity on ``D^2_{n,j}``.

    The map is smooth across the half-domain boundaries because the standard
    map is the identity near the boundary of the square, so no seams are
    declared.
    """

    def __init__(self, q: int, standard: StandardSquareMap, surface: str = ANNULUS):
        self.q = int(q)
        self.std = standard
        self.surface = surface
        self.moser = True
        self.name = f"phi(q={self.q}, eps={standard.epsilon:.4g})"

    def _local(self, th):
        q = self.q
        j = np.floor(np.mod(th, 1.0) * q)
        u = np.mod(th, 1.0) - j / q
        # guard float slop at the right end of a domain
        over = u >= 1.0 / q
        j = np.where(over, j + 1, j)
        u = np.where(over, u - 1.0 / q, u)
        base = th - u
        return base, u, u < 0.5 / q

    def _apply(self, th, r, inverse: bool):
        th = np.asarray(th, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = th.shape
        th, r = th.ravel(), r.ravel()
        base, u, left = self._local(th)
        out_t, out_r = th.copy(), r.copy()
        if np.any(left):
            x = 4 * self.q * u[left] - 1
            y = 2 * r[left] - 1
            x2, y2 = self.std.inverse(x, y) if inverse else self.std.forward(x, y)
            out_t[left] = base[left] + (x2 + 1) / (4 * self.q)
            out_r[left] = (y2 + 1) / 2
        return out_t.reshape(shape), out_r.reshape(shape)

    def _fwd(self, th, r):
        return self._apply(th, r, False)

    def _inv(self, th, r):
        return self._apply(th, r, True)

    def _jac(self, th, r):
        th, r = np.atleast_1d(th).ravel(), np.atleast_1d(r).ravel()
        out = _identity_jac(th.size)
        _, u, left = self._local(th)
        if np.any(left):
            x = 4 * self.q * u[left] - 1
            y = 2 * r[left] - 1
            j, _ = self.std.jacobian(x, y, "phi")
            # D C^{-1} . J . D C with D C = diag(4q, 2)
            out[left, 0, 0] = j[:, 0, 0]
            out[left, 0, 1] = j[:, 0, 1] / (2 * self.q)
            out[left, 1, 0] = j[:, 1, 0] * (2 * self.q)
            out[left, 1, 1] = j[:, 1, 1]
        return out

    def _det(self, th, r):
        th, r = np.atleast_1d(th).ravel(), np.atleast_1d(r).ravel()
        out = np.ones(th.size)
        _, u, left = self._local(th)
        if np.any(left):
            _, d = self.std.jacobian(4 * self.q * u[left] - 1, 2 * r[left] - 1, "phi")
            out[left] = d
        return out


def compute_a_n(q_n: int, m_n: int, alpha_next: Fraction, check: bool = True) -> Fraction:
    """``(m_n alpha_{n+1} - 1/(2 q_n))`` reduced into ``(-1/(2q_n), 1/(2q_n)]``."""
    a = ar.symmetric_mod(m_n * Fraction(alpha_next) - Fraction(1, 2 * q_n), Fraction(1, q_n))
    if check and abs(a) > Fraction(1, Fraction(alpha_next).denominator):
        raise AssertionError(f"|a_n| = {a} exceeds 1/q_(n+1); growth or mixing index is broken")
    return a


@dataclass
class SmoothStage:
    n: int
    alpha_n: Fraction
    alpha_next: Fraction
    sigma: float
    b: int
    m: int
    a: Fraction
    prev: Optional["SmoothStage"] = None
    surface: str = ANNULUS
    moser_steps: int = TOWER_MOSER_STEPS
    _maps: dict = field(default_factory=dict, repr=False)

    @property
    def q(self) -> int:
        return self.alpha_n.denominator

    @property
    def p(self) -> int:
        return self.alpha_n.numerator

    @property
    def regime(self) -> str:
        return "smooth"

    @property
    def epsilon(self) -> float:
        return stage_epsilon(self.n)

    @property
    def residual(self) -> Fraction:
        return ar.mixing_residual(self.m, self.q, self.alpha_next)

    @property
    def shift(self) -> Fraction:
        return ar.frac_part(self.m * self.alpha_next)

    @property
    def standard(self) -> StandardSquareMap:
        return standard_map(self.epsilon, self.moser_steps)

    def _map(self, key: str, make: Callable[[], PlanarMap]) -> PlanarMap:
        if key not in self._maps:
            self._maps[key] = make()
        return self._maps[key]

    @property
    def phi(self) -> PlanarMap:
        return self._map("phi", lambda: SmoothPhi(self.q, self.standard, self.surface))

    @property
    def g(self) -> PlanarMap:
        return self._map("g", lambda: Twist(self.b, self.surface))

    @property
    def h(self) -> PlanarMap:
        return self._map("h", lambda: compose(self.g, self.phi))

    @property
    def H(self) -> PlanarMap:
        return self._map("H", lambda: self.h if self.prev is None else compose(self.prev.H, self.h))

    @property
    def H_prev(self) -> PlanarMap:
        return self.prev.H if self.prev is not None else Identity(self.surface)

    @property
    def f(self) -> ConjugatedRotation:
        return self._map("f", lambda: ConjugatedRotation(self.H, self.alpha_next, 1,
                                                        name=f"f_{self.n}"))

    @property
    def Phi(self) -> ConjugatedRotation:
        return self._map("Phi", lambda: ConjugatedRotation(self.phi, self.alpha_next, self.m,
                                                          name=f"Phi_{self.n}"))

    @property
    def rotation_n(self) -> Rotation:
        return Rotation(self.alpha_n, self.surface)

    def targets(self) -> tuple[float, float, float]:
        return 1.0 / (self.n * self.q ** self.sigma), 1.0 / self.n, 1.0 / self.n


def build_smooth_stage(n: int, alpha_n, alpha_next, sigma: float,
                       prev: Optional[SmoothStage] = None, surface: str = ANNULUS,
                       moser_steps: int = TOWER_MOSER_STEPS,
                       ledger: Optional[ar.ConditionLedger] = None) -> SmoothStage:
    alpha_n, alpha_next = ar.as_rational(alpha_n), ar.as_rational(alpha_next)
    q, q1 = alpha_n.denominator, alpha_next.denominator
    if ledger is not None:
        bad = ledger.first_violation(n)
        if bad is not None:
            raise ConditionViolation(bad)
    if q1 < 10 * n * n * q:
        raise ArithmeticError(f"stage {n}: growth q_(n+1) >= 10 n^2 q_n fails ({q1} < {10 * n * n * q})")
    b = ar.twist_coefficient(n, q, sigma)
    if b is None or b < 1:
        raise ValueError(f"stage {n}: twist coefficient must be >= 1")
    m = ar.mixing_index(q, alpha_next.numerator, q1, strict=False)
    a = compute_a_n(q, m, alpha_next)
    return SmoothStage(n, alpha_n, alpha_next, sigma, b, m, a, prev, surface, moser_steps)


def build_smooth_tower(seq: ar.ApproximationSequence, sigma: float, surface: str = ANNULUS,
                       moser_steps: int = TOWER_MOSER_STEPS,
                       ledger: Optional[ar.ConditionLedger] = None,
                       stages: Optional[int] = None) -> list[SmoothStage]:
    """Stages ``1..len(seq)-1``; stage ``n`` needs ``alpha_{n+1}``."""
    count = len(seq) - 1 if stages is None else stages
    if count < 1 or count > len(seq) - 1:
        raise ValueError("need at least two sequence entries per built stage")
    out: list[SmoothStage] = []
    prev = None
    for n in range(1, count + 1):
        prev = build_smooth_stage(n, seq.alpha(n), seq.alpha(n + 1), sigma, prev, surface,
                                  moser_steps, ledger)
        out.append(prev)
    return out


# --------------------------------------------------------------------------
# decompositions and vertical images
# --------------------------------------------------------------------------

def eta_intervals(q: int, n: int, a: Fraction) -> tuple[list[tuple[Fraction, Fraction]], list[str]]:
    """Exact endpoints of ``I_{n,j}`` and the shifted ``Ibar_{n,j}``, in that order per ``j``."""
    out, kinds = [], []
    e = Fraction(1, 6 * n * q)
    for j in range(q):
        out.append((Fraction(j, q) + e, Fraction(j, q) + Fraction(1, 2 * q) - e))
        kinds.append("I")
        out.append((Fraction(j, q) + Fraction(1, 2 * q) + e - a, Fraction(j + 1, q) - e - a))
        kinds.append("Ibar")
    return out, kinds


def build_eta_smooth(stage: SmoothStage, heights: int = 33) -> PartialDecomposition:
    n, q = stage.n, stage.q
    ivs, kinds = eta_intervals(q, n, stage.a)
    for (lo, hi), kind in zip(ivs, kinds):
        if kind != "Ibar":
            continue
        j = math.floor(lo * q)
        if not (Fraction(j, q) + Fraction(1, 2 * q) < lo and hi < Fraction(j + 1, q)):
            raise ValueError(f"Ibar atom [{lo}, {hi}] leaks out of D^2 (|a_n| too large)")
    lo_r, hi_r = Fraction(1, 3 * n), 1 - Fraction(1, 3 * n)
    hs = np.linspace(float(lo_r), float(hi_r), heights)
    return PartialDecomposition(np.array([float(lo) for lo, _ in ivs]),
                                np.array([float(hi) for _, hi in ivs]), hs, stage.surface,
                                label=f"eta_{n} (smooth)", kinds=np.array(kinds),
                                span=float(hi_r - lo_r))


def exact_eta_measure(q: int, n: int) -> Fraction:
    """Area covered by ``eta_n``: ``q (|I| + |Ibar|) (1 - 2/(3n))``."""
    length = Fraction(1, 2 * q) - Fraction(1, 3 * n * q)
    return q * 2 * length * (1 - Fraction(2, 3 * n))


@dataclass
class VerticalImageReport:
    stage: int
    atoms: int
    max_theta_spread: float
    max_r_error: float
    inclusion_ok: bool
    tolerance: float

    @property
    def ok(self) -> bool:
        return (self.max_theta_spread <= self.tolerance and self.max_r_error <= self.tolerance
                and self.inclusion_ok)


def shifted_inclusion(stage: SmoothStage) -> bool:
    """Exact check that ``R^{m_n}`` moves every ``Dbar^1_{n,j}`` into some ``D^2_{n,j'}``."""
    q, n = stage.q, stage.n
    shift = stage.shift
    e = Fraction(1, 6 * n * q)
    for j in range(q):
        lo = Fraction(j, q) + e + shift
        hi = Fraction(j, q) + Fraction(1, 2 * q) - e + shift
        k = math.floor(lo * q)
        if not (Fraction(k, q) + Fraction(1, 2 * q) <= lo and hi <= Fraction(k + 1, q)):
            return False
    return True


def verify_vertical_images(stage: SmoothStage, decomposition: Optional[PartialDecomposition] = None,
                           interior: int = 9, tolerance: float = 1e-6) -> VerticalImageReport:
    dec = decomposition or build_eta_smooth(stage)
    t = np.linspace(0.0, 1.0, interior + 2)
    lo = np.repeat(dec.lo, dec.heights.size)
    hi = np.repeat(dec.hi, dec.heights.size)
    rr = np.tile(dec.heights, dec.lo.size)
    th = (lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel()
    r = np.repeat(rr, t.size)
    it, ir = stage.Phi.forward(np.mod(th, 1.0), r)
    it = it.reshape(-1, t.size)
    ir = ir.reshape(-1, t.size)
    spread = np.abs(circle_diff(it, it[:, :1])).max()
    r_lo, r_hi = 1.0 / (3 * stage.n), 1.0 - 1.0 / (3 * stage.n)
    r_err = max(np.abs(ir.min(axis=1) - r_lo).max(), np.abs(ir.max(axis=1) - r_hi).max())
    return VerticalImageReport(stage.n, len(dec), float(spread), float(r_err),
                               shifted_inclusion(stage), tolerance)


# --------------------------------------------------------------------------
# norms and the conjugate-rotation bound
# --------------------------------------------------------------------------

#: finite-difference steps (in units of the stage scale 1/(4 q)) per order
_NORM_STEP = {1: 1e-3, 2: 3e-3, 3: 1e-2}


def map_norm(mp: PlanarMap, k: int, scale: float = 1.0, samples: int = 1024,
             seed: int = 0) -> float:
    """Sampled ``|||F|||_k`` of a map and its inverse.

    The zeroth-order term of a lift is not bounded, so the value is the max
    of 1 and the sup of all partials of orders ``1..k``; ``|||Id|||_k = 1``.
    ``scale`` is the length scale of the finest feature (sets the FD steps).
    """
    if not 1 <= k <= 4:
        raise ValueError("norms are supported for 1 <= k <= 4")
    margin = 0.01 if mp.surface == ANNULUS else 0.0
    th, r = sample_points(samples, mp.surface, seed, margin)
    best = 1.0
    for fm in (mp, mp.inverse()):
        def jac(t, s, fm=fm):
            return fm.jac(np.mod(t, 1.0), s, check_seams=False).reshape(-1, 4)
        best = max(best, float(np.abs(jac(th, r)).max()))
        for order in range(1, k):
            for part in _fd_partials(jac, th, r, order, _NORM_STEP[order] * scale):
                best = max(best, float(np.abs(part).max()))
    return best


def stage_scale(stage) -> float:
    q = stage.q
    s = stage
    while s.prev is not None:
        s = s.prev
        q = max(q, s.q)
    return 1.0 / (4 * q)


def norm_estimate(stage: SmoothStage, k: int, samples: int = 1024, seed: int = 0,
                  which: str = "H") -> float:
    """``|||H_n|||_k`` (or of ``h``/``phi`` via ``which``) by sampling."""
    mp = {"H": stage.H, "h": stage.h, "phi": stage.phi}[which]
    return map_norm(mp, k, stage_scale(stage), samples, seed)


def phi_scaling_fit(n: int, q_pair: tuple[int, int] = (4, 8), k: int = 1, samples: int = 1024,
                    seed: int = 0) -> dict:
    """Fit ``|||phi_n|||_k ~ c q^k`` from two values of ``q``."""
    std = standard_map(stage_epsilon(n))
    vals = [map_norm(SmoothPhi(q, std), k, 1.0 / (4 * q), samples, seed) for q in q_pair]
    ratio = vals[1] / vals[0]
    expected = (q_pair[1] / q_pair[0]) ** k
    return {"norms": vals, "ratio": ratio, "expected": expected,
            "c": [v / q ** k for v, q in zip(vals, q_pair)]}


def max_entry_derivative(mp: PlanarMap, grid: int = 128, seed: int = 0) -> float:
    """``||DF||_0`` as the max absolute Jacobian entry on a jittered grid."""
    rng = np.random.default_rng(seed)
    g = (np.arange(grid) + 0.5) / grid
    gt, gr = np.meshgrid(g, g, indexing="ij")
    jit = rng.uniform(-0.5, 0.5, size=(2, grid * grid)) / grid
    th = np.mod(gt.ravel() + jit[0], 1.0)
    r = gr.ravel() + jit[1]
    r = np.clip(r, 0.0, 1.0) if mp.surface == ANNULUS else np.mod(r, 1.0)
    return float(np.abs(mp.jac(th, r, check_seams=False)).max())


def conjugated_rotation_distance_check(h: PlanarMap, alpha: float, beta: float, k: int = 0, samples: int = 1024,
                  seed: int = 0, norm: Optional[float] = None, scale: float = 1.0,
                  ck_rule: Callable[[int], int] = ar.default_ck) -> dict:
    """Both sides of ``d_k(h R_a h^-1, h R_b h^-1) <= C_k |||h|||_{k+1}^{k+1} |a - b|``."""
    lhs = sup_distance_dk(ConjugatedRotation(h, float(alpha)), ConjugatedRotation(h, float(beta)),
                          k, samples, seed).value if k > 0 else \
        sup_distance_d0(ConjugatedRotation(h, float(alpha)), ConjugatedRotation(h, float(beta)),
                        samples, seed).value
    nrm = norm if norm is not None else map_norm(h, k + 1, scale, samples, seed)
    rhs = ck_rule(k) * nrm ** (k + 1) * abs(alpha - beta)
    return {"lhs": lhs, "rhs": rhs, "norm": nrm, "ok": lhs <= rhs}


def collar_error(stage: SmoothStage, samples: int = 2000, seed: int = 0) -> float:
    """Max deviation of ``f_n`` from ``R_{alpha_{n+1}}`` for ``r < 1/(6n)`` and ``r > 1 - 1/(6n)``."""
    rng = np.random.default_rng(seed)
    th = rng.random(samples)
    w = 1.0 / (6 * stage.n)
    r = rng.uniform(0, w, samples)
    r = np.where(rng.random(samples) < 0.5, r, 1.0 - r)
    a = stage.f.forward(th, r)
    b = Rotation(stage.alpha_next, stage.surface).forward(th, r)
    return float(max(np.abs(circle_diff(a[0], b[0])).max(), np.abs(a[1] - b[1]).max()))


def smooth_commutation_error(stage: SmoothStage, samples: int = 1000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    th, r = rng.random(samples), rng.random(samples)
    rot = Rotation(stage.alpha_n, stage.surface)
    a = stage.h.forward(*rot.forward(th, r))
    b = rot.forward(*stage.h.forward(th, r))
    return float(max(np.abs(circle_diff(a[0], b[0])).max(), np.abs(a[1] - b[1]).max()))


def norm_provider(sigma: float, surface: str = ANNULUS, k_seq: Callable[[int], int] = ar.default_k,
                  samples: int = 256, seed: int = 0,
                  moser_steps: int = TOWER_MOSER_STEPS) -> Callable[[int, list], dict]:
    """Measured norms for :func:`arithmetic.enforce_smooth_conditions`.

    The stage-``n`` conjugacy ``H_n`` only depends on ``alpha_1..alpha_n``,
    so it is built with a placeholder ``alpha_{n+1}`` (the twist and
    ``phi_n`` do not see it).  Orders above 4 are capped at 4, which turns
    the measured value into a lower bound; the ledger row says so.
    """
    def provide(n: int, alphas: list) -> dict:
        prev = None
        for i, al in enumerate(alphas, start=1):
            q = al.denominator
            b = ar.twist_coefficient(i, q, sigma)
            prev = SmoothStage(i, al, Fraction(1, 10 * i * i * q), sigma, b, 1, Fraction(0), prev,
                               surface, moser_steps)
        k = k_seq(n) + 1
        order = min(k, 4)
        scale = stage_scale(prev)
        est = {"norm_k": map_norm(prev.H, order, scale, samples, seed),
               "norm_1": map_norm(prev.H, 1, scale, samples, seed),
               "dh_prev": 1.0 if prev.prev is None else max_entry_derivative(prev.prev.H)}
        if order < k:
            est["norm_note"] = f"; order capped at 4 (needs {k}), value is a lower bound"
        return est
    return provide
