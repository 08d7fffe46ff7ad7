"""The real-analytic tower on the torus.

Stage ``n`` uses ``phi_n(theta, r) = (theta, r + q_n**2 cos(2 pi q_n theta))``,
the twist ``g_n(theta, r) = (theta + b_n r, r)`` with ``b_n = floor(n q_n**sigma)``,
``h_n = g_n o phi_n``, ``H_n = h_1 o ... o h_n`` and
``f_n = H_n o R_{alpha_{n+1}} o H_n^{-1}``.  The mixing map
``Phi_n = phi_n o R_{alpha_{n+1}}^{m_n} o phi_n^{-1}`` has the lift
``(theta + m_n alpha_{n+1}, r + psi_n(theta))``.

Stages whose ``q_n`` is too large for double precision (``q_n**2`` times a
cosine cannot be reduced mod 1 accurately) are built in arithmetic-only mode:
exact rational parameters and log-space inequality checks, but no float maps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from . import arithmetic as ar
from .decomposition import PartialDecomposition
from .maps import (TORUS, AnalyticShear, ConjugatedRotation, PlanarMap, Rotation, Twist,
                   circle_diff, compose)

log = logging.getLogger(__name__)

#: largest q_n for which float maps are assembled
FLOAT_Q_LIMIT = 4096


class DegenerateStageError(ValueError):
    """B_n covers the whole circle (q_n too small)."""


class ConditionViolation(ArithmeticError):
    def __init__(self, row: ar.ConditionRow):
        super().__init__(f"stage {row.stage}: condition {row.condition} violated "
                         f"({row.fmt(row.lhs)} {row.relation} {row.fmt(row.rhs)} is false)")
        self.row = row


# --------------------------------------------------------------------------
# stage
# --------------------------------------------------------------------------

@dataclass
class AnalyticStage:
    n: int
    alpha_n: Fraction
    alpha_next: Fraction
    sigma: float
    rho: float
    b: Optional[int]
    m: int
    prev: Optional["AnalyticStage"] = None
    arithmetic_only: bool = False
    _maps: dict = field(default_factory=dict, repr=False)

    @property
    def q(self) -> int:
        return self.alpha_n.denominator

    @property
    def p(self) -> int:
        return self.alpha_n.numerator

    @property
    def regime(self) -> str:
        return "analytic"

    @property
    def phase(self) -> Fraction:
        """``m_n q_n alpha_{n+1} mod 1`` (exact)."""
        return ar.frac_part(self.m * self.q * self.alpha_next)

    @property
    def residual(self) -> Fraction:
        return ar.mixing_residual(self.m, self.q, self.alpha_next)

    @property
    def shift(self) -> Fraction:
        """``m_n alpha_{n+1} mod 1``, the translation part of ``Phi_n``."""
        return ar.frac_part(self.m * self.alpha_next)

    def _need_floats(self):
        if self.arithmetic_only:
            raise RuntimeError(f"stage {self.n} is arithmetic-only (q_n too large for floats)")

    def _map(self, key: str, make: Callable[[], PlanarMap]) -> PlanarMap:
        self._need_floats()
        if key not in self._maps:
            self._maps[key] = make()
        return self._maps[key]

    @property
    def phi(self) -> PlanarMap:
        return self._map("phi", lambda: AnalyticShear(self.q))

    @property
    def g(self) -> PlanarMap:
        return self._map("g", lambda: Twist(self.b))

    @property
    def h(self) -> PlanarMap:
        return self._map("h", lambda: compose(self.g, self.phi))

    @property
    def H(self) -> PlanarMap:
        def make():
            if self.prev is None:
                return self.h
            return compose(self.prev.H, self.h)
        return self._map("H", make)

    @property
    def H_prev(self) -> PlanarMap:
        from .maps import Identity
        return self.prev.H if self.prev is not None else Identity(TORUS)

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
        return Rotation(self.alpha_n)

    def targets(self) -> tuple[float, float, float]:
        """``(gamma, delta, eps)`` demanded of every atom at this stage."""
        return 1.0 / (self.n * self.q ** self.sigma), 1.0 / self.n, 1.0 / self.n


def build_stage(n: int, alpha_n, alpha_next, sigma: float, prev: Optional[AnalyticStage] = None,
                rho: float = 0.01, ledger: Optional[ar.ConditionLedger] = None,
                check: bool = True, seed: int = 0) -> AnalyticStage:
    """Assemble stage ``n``; refuses when ``ledger`` records a violated condition for it.

    With ``check`` the commutation ``h_n R_{alpha_n} = R_{alpha_n} h_n`` and
    unit Jacobian determinants are verified on 1000 random points.
    """
    alpha_n, alpha_next = ar.as_rational(alpha_n), ar.as_rational(alpha_next)
    if ledger is not None:
        bad = ledger.first_violation(n)
        if bad is not None:
            raise ConditionViolation(bad)
    q = alpha_n.denominator
    b = ar.twist_coefficient(n, q, sigma)
    if b is not None and b < 1:
        raise ValueError(f"twist coefficient b_{n} = {b} must be >= 1")
    m = ar.mixing_index(q, alpha_next.numerator, alpha_next.denominator)
    stage = AnalyticStage(n, alpha_n, alpha_next, sigma, rho, b, m, prev,
                          arithmetic_only=q > FLOAT_Q_LIMIT or (prev is not None and prev.arithmetic_only))
    if check and not stage.arithmetic_only:
        err = commutation_error(stage, 1000, seed)
        if err > 1e-9:
            raise ArithmeticError(f"h_{n} does not commute with R_alpha_{n}: {err:.3g}")
        th, r = np.random.default_rng(seed).random((2, 1000))
        d = np.abs(stage.H.det(th, r) - 1).max()
        if d > 1e-9:
            raise ArithmeticError(f"H_{n} is not measure preserving: {d:.3g}")
    return stage


def build_tower(seq: ar.ApproximationSequence, sigma: float, rho: float = 0.01,
                ledger: Optional[ar.ConditionLedger] = None,
                stages: Optional[int] = None) -> list[AnalyticStage]:
    """Stages ``1..len(seq)-1`` (stage ``n`` needs ``alpha_{n+1}``)."""
    count = len(seq) - 1 if stages is None else stages
    if count < 1 or count > len(seq) - 1:
        raise ValueError("need at least two sequence entries per built stage")
    out: list[AnalyticStage] = []
    prev = None
    for n in range(1, count + 1):
        prev = build_stage(n, seq.alpha(n), seq.alpha(n + 1), sigma, prev, rho, ledger)
        out.append(prev)
    return out


def commutation_error(stage: AnalyticStage, samples: int = 1000, seed: int = 0) -> float:
    """Max ``|h_n R_{alpha_n} x - R_{alpha_n} h_n x|`` (mod 1) over random ``x``."""
    th, r = np.random.default_rng(seed).random((2, samples))
    rot, h = stage.rotation_n, stage.h
    a = h.forward(*rot.forward(th, r))
    b = rot.forward(*h.forward(th, r))
    return float(max(np.abs(circle_diff(a[0], b[0])).max(), np.abs(circle_diff(a[1], b[1])).max()))


# --------------------------------------------------------------------------
# psi_n, B_n, eta_n
# --------------------------------------------------------------------------

def psi_n(stage: AnalyticStage, theta):
    """``(psi_n, psi_n', psi_n'')`` at ``theta``."""
    from .ddmath import frac_mul

    q = stage.q
    s = float(stage.phase)
    x = 2 * math.pi * frac_mul(q, theta)
    y = 2 * math.pi * np.mod(frac_mul(q, theta) + s, 1.0)
    q2 = float(q) ** 2
    val = q2 * (np.cos(y) - np.cos(x))
    d1 = -2 * math.pi * q * q2 * (np.sin(y) - np.sin(x))
    d2 = -4 * math.pi ** 2 * q * q * q2 * (np.cos(y) - np.cos(x))
    return val, d1, d2


def sigma_n(stage: AnalyticStage, theta):
    """Correction ``psi_n + 2 q_n**2 cos(2 pi q_n theta)`` and its two derivatives."""
    from .ddmath import frac_mul

    q = stage.q
    x = 2 * math.pi * frac_mul(q, theta)
    val, d1, d2 = psi_n(stage, theta)
    q2 = float(q) ** 2
    return (val + 2 * q2 * np.cos(x), d1 - 4 * math.pi * q * q2 * np.sin(x),
            d2 - 8 * math.pi ** 2 * q * q * q2 * np.cos(x))


@dataclass
class BadSet:
    q: int
    intervals: list[tuple[float, float]]
    half_width: float

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def gaps(self) -> list[tuple[float, float]]:
        """The ``2 q`` components of the complement, in order."""
        w, q = self.half_width, self.q
        return [(k / (2 * q) + w, (k + 1) / (2 * q) - w) for k in range(2 * q)]

    def contains(self, theta) -> np.ndarray:
        t = np.mod(theta, 1.0) * 2 * self.q
        return np.abs(t - np.round(t)) <= self.half_width * 2 * self.q


def build_Bn(stage_or_q) -> BadSet:
    """Merged intervals of radius ``1/(2 q**1.5)`` around the points ``k/(2q)``."""
    q = stage_or_q.q if hasattr(stage_or_q, "q") else int(stage_or_q)
    w = 0.5 * q ** -1.5
    if 2 * w >= 1 / (2 * q):
        raise DegenerateStageError(
            f"B_n covers the circle for q_n={q} (measure {2 * q * 2 * w:g} >= 1)")
    # the k = 0 and k = 2q pieces meet across 0 and are stored as one wrapped interval
    ivs = [(1 - w, 1.0), (0.0, w)] + [(k / (2 * q) - w, k / (2 * q) + w) for k in range(1, 2 * q)]
    ivs = sorted(ivs)
    return BadSet(q, ivs, w)


def build_eta_analytic(stage: AnalyticStage, heights: int = 64, tol: float = 1e-12,
                       min_length: float = 1e-10) -> PartialDecomposition:
    """Cut every monotone branch of ``psi_n`` outside ``B_n`` into unit-image intervals."""
    bad = build_Bn(stage)
    gaps = np.array(bad.gaps())
    c, d = gaps[:, 0], gaps[:, 1]
    pc, pd = psi_n(stage, c)[0], psi_n(stage, d)[0]
    sign = np.sign(pd - pc)
    counts = np.floor(np.abs(pd - pc)).astype(int)
    note = []
    for k in np.nonzero(counts == 0)[0]:
        note.append(f"branch {k} skipped: psi image shorter than one unit")
    gi = np.repeat(np.arange(len(gaps)), counts)
    j = np.concatenate([np.arange(1, k + 1) for k in counts]) if counts.sum() else np.zeros(0)
    target = pc[gi] + sign[gi] * j
    lo, hi = c[gi].copy(), d[gi].copy()
    s = sign[gi]
    iters = int(math.ceil(math.log2((1 / (2 * stage.q)) / tol))) + 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = s * (psi_n(stage, mid)[0] - target) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    cuts = 0.5 * (lo + hi)
    starts, ends = [], []
    pos = 0
    for k, cnt in enumerate(counts):
        if cnt == 0:
            continue
        pts = np.concatenate([[c[k]], cuts[pos:pos + cnt]])
        starts.append(pts[:-1])
        ends.append(pts[1:])
        pos += cnt
    a = np.concatenate(starts) if starts else np.zeros(0)
    b = np.concatenate(ends) if ends else np.zeros(0)
    keep = (b - a) >= min_length
    for k in np.nonzero(~keep)[0]:
        note.append(f"atom [{a[k]!r}, {b[k]!r}] dropped (shorter than {min_length})")
    grid = np.arange(heights) / heights
    dec = PartialDecomposition(a[keep], b[keep], grid, TORUS, label=f"eta_{stage.n}", log=note)
    bound = stage.q ** -2.5
    if dec.n_intervals and dec.max_length() > bound * (1 + 1e-9):
        raise ArithmeticError(f"atom longer than q^-5/2: {dec.max_length()} > {bound}")
    return dec


def shear_derivative_check(stage: AnalyticStage, samples_per_branch: int = 100_000) -> dict:
    """Sampled extrema of ``|psi'|``, ``|psi''|``, ``|sigma'|``, ``|sigma''|`` on the complement of ``B_n``."""
    bad = build_Bn(stage)
    q = stage.q
    inf_d1, sup_d2, sup_s1, sup_s2, inf_sin = math.inf, 0.0, 0.0, 0.0, math.inf
    for a, b in bad.gaps():
        t = np.linspace(a, b, samples_per_branch)
        _, d1, d2 = psi_n(stage, t)
        _, s1, s2 = sigma_n(stage, t)
        inf_d1 = min(inf_d1, float(np.abs(d1).min()))
        sup_d2 = max(sup_d2, float(np.abs(d2).max()))
        sup_s1 = max(sup_s1, float(np.abs(s1).max()))
        sup_s2 = max(sup_s2, float(np.abs(s2).max()))
        inf_sin = min(inf_sin, float(np.abs(np.sin(2 * math.pi * q * t)).min()))
    lower, upper = q ** 2.5, 9 * math.pi ** 2 * q ** 4
    return {
        "inf_dpsi": inf_d1, "dpsi_bound": lower,
        "sup_ddpsi": sup_d2, "ddpsi_bound": upper,
        "sup_dsigma": sup_s1, "sup_ddsigma": sup_s2,
        "inf_sin": inf_sin, "sin_bound": q ** -0.5,
        "samples_per_branch": samples_per_branch, "branches": 2 * q,
        "ok": inf_d1 >= lower and sup_d2 <= upper and inf_sin >= q ** -0.5,
        "sigma_ok": sup_s1 < 1 and sup_s2 < 1,
    }


# --------------------------------------------------------------------------
# certified strip bounds
# --------------------------------------------------------------------------

def _b_bound(n: int, q: int, b: Optional[int], sigma: float) -> mpmath.mpf:
    if b is not None:
        return mpmath.mpf(b)
    return mpmath.mpf(n) * mpmath.power(mpmath.mpf(q), sigma)


def _prefix_triples(prefix, sigma: float) -> list[tuple[int, int, mpmath.mpf]]:
    out = []
    for item in prefix:
        if isinstance(item, AnalyticStage):
            out.append((item.n, item.q, _b_bound(item.n, item.q, item.b, item.sigma)))
        else:
            n, q, b = item
            out.append((n, q, _b_bound(n, q, b, sigma)))
    return out


def strip_widths(prefix: Sequence, rho: float, sigma: float = 0.25) -> list[tuple]:
    """Imaginary widths ``(w_theta, w_r)`` of ``H_k^{-1}(A^rho)`` for ``k = 0..len(prefix)``.

    ``H_k^{-1} = h_k^{-1} o ... o h_1^{-1}``; ``g^{-1}`` adds ``|b| w_r`` to
    ``w_theta`` and ``phi^{-1}`` adds ``q**2 exp(2 pi q w_theta)`` to ``w_r``.
    """
    with mpmath.workprec(ar.LOG_PREC):
        wt = wr = mpmath.mpf(rho)
        out = [(wt, wr)]
        for n, q, b in _prefix_triples(prefix, sigma):
            wt = wt + abs(b) * wr
            wr = wr + mpmath.mpf(q) ** 2 * mpmath.exp(2 * mpmath.pi * q * wt)
            out.append((wt, wr))
    return out


def strip_norm_bound(stage_prefix: Sequence, rho: float, sigma: float = 0.25) -> list[mpmath.mpf]:
    """Certified ``rho_0 = rho, rho_1, ..., rho_k`` for the prefix."""
    return [max(wt, wr) for wt, wr in strip_widths(stage_prefix, rho, sigma)]


def jacobian_bounds(prefix: Sequence, rho: float, sigma: float = 0.25) -> dict:
    """Upper bounds for (P3) ``||D(H) o R_t o H^{-1}||_rho`` and (P4) ``||DH||_0``.

    Both use sub-multiplicativity of the max-row-sum norm over
    ``Dh = [[1 + b c, b], [c, 1]]`` with ``|c| <= 2 pi q**3 exp(2 pi q w)``;
    ``w`` is the imaginary width of the theta coordinate fed to ``phi``,
    obtained by pushing the widths of ``H^{-1}(A^rho)`` forward again.
    """
    triples = _prefix_triples(prefix, sigma)
    with mpmath.workprec(ar.LOG_PREC):
        two_pi = 2 * mpmath.pi
        p4 = mpmath.mpf(1)
        for n, q, b in triples:
            c = two_pi * mpmath.mpf(q) ** 3
            p4 *= max(1 + abs(b) * c + abs(b), c + 1)
        wt, wr = strip_widths(prefix, rho, sigma)[-1]
        p3 = mpmath.mpf(1)
        for n, q, b in reversed(triples):
            c = two_pi * mpmath.mpf(q) ** 3 * mpmath.exp(two_pi * q * wt)
            p3 *= max(1 + abs(b) * c + abs(b), c + 1)
            wr = wr + mpmath.mpf(q) ** 2 * mpmath.exp(two_pi * q * wt)
            wt = wt + abs(b) * wr
    return {"p3": p3, "p4": p4}


def bound_provider(rho: float, sigma: float) -> Callable[[list], dict]:
    """Callable for :func:`akatower.arithmetic.enforce_analytic_conditions`."""
    def provide(prefix):
        out = jacobian_bounds(prefix, rho, sigma)
        out["rho_prev"] = strip_norm_bound(prefix, rho, sigma)[-1]
        return out
    return provide


def convergence_chain_log(n: int, q: int, sigma: float, rho_prev, log_dist) -> mpmath.mpf:
    """``ln`` of ``8 pi n q**(4+sigma) exp(4 pi n q**(1+sigma) rho_prev) |alpha - alpha_n|``."""
    if log_dist == ar.NEG_INF:
        return ar.NEG_INF
    with mpmath.workprec(ar.LOG_PREC):
        lq = ar.log_int(q)
        return (mpmath.log(8 * mpmath.pi * n) + (4 + mpmath.mpf(sigma)) * lq
                + 4 * mpmath.pi * n * mpmath.exp((1 + mpmath.mpf(sigma)) * lq) * mpmath.mpf(rho_prev)
                + log_dist)


def verify_convergence_bound(stage, log_dist=None, rho_prev=None, rho: float = 0.01,
                             distance=None) -> ar.ConditionRow:
    """Both sides of ``ln(chain) <= -q_n``.

    Give either ``log_dist = ln|alpha - alpha_n|`` or the plain ``distance``.
    ``stage`` is an :class:`AnalyticStage` or a ``(n, q, sigma)`` triple; when
    ``rho_prev`` is omitted it is recomputed from the stage's prefix.
    """
    if isinstance(stage, AnalyticStage):
        n, q, sigma = stage.n, stage.q, stage.sigma
        if rho_prev is None:
            chain = []
            s = stage.prev
            while s is not None:
                chain.insert(0, s)
                s = s.prev
            rho_prev = strip_norm_bound(chain, stage.rho, sigma)[-1]
    else:
        n, q, sigma = stage
        if rho_prev is None:
            rho_prev = rho
    if distance is not None:
        distance = ar.as_rational(distance) if not isinstance(distance, float) else Fraction(distance)
        log_dist = ar.NEG_INF if distance == 0 else ar.log_abs_diff(distance, Fraction(0))
    if log_dist is None:
        raise ValueError("give log_dist or distance")
    log_dist = mpmath.mpf(log_dist)
    lhs = convergence_chain_log(n, q, sigma, rho_prev, log_dist)
    rhs = -mpmath.mpf(q)
    return ar.ConditionRow(n, "convergence chain", lhs, rhs, bool(lhs <= rhs), "<=",
                           note="ln(8 pi n q^(4+s) exp(4 pi n q^(1+s) rho_{n-1}) |alpha-alpha_n|) <= -q_n")
