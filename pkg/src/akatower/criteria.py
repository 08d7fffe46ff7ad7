"""Measurable versions of the weak mixing machinery.

* :func:`measure_distribution` - the ``(gamma, delta, eps)``-distribution of a
  horizontal atom by a map, measured along the atom;
* :func:`check_uniform_stretch` - the derivative criterion for uniform
  stretch together with a direct measurement;
* :func:`strip_distribution_check` - the exact strip estimate for a twist;
* :func:`square_distribution_check` - how an atom is spread over a square by
  ``g_n o Phi``;
* :func:`aggregate_criterion` - the stage verdict.

Preimage measures ``lambda(I cap Phi^{-1}(T x J~))`` are computed from a
dense sample of the atom: on rows where the ``r``-image is monotone the
endpoints of ``J~`` are inverted by binary search plus linear interpolation,
elsewhere every sampling segment is intersected exactly with ``J~``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numba
import numpy as np
from scipy import optimize

from .decomposition import Atom, PartialDecomposition
from .maps import ANNULUS, TORUS, PlanarMap, Twist, circle_diff, iterate, sup_distance_d0

# --------------------------------------------------------------------------
# test families of subintervals
# --------------------------------------------------------------------------


def dyadic_family(levels: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Relative dyadic subintervals ``[k/2^l, (k+1)/2^l]`` for ``l = 0..levels``."""
    lo, hi = [], []
    for lev in range(levels + 1):
        n = 2 ** lev
        lo.extend(k / n for k in range(n))
        hi.extend((k + 1) / n for k in range(n))
    return np.array(lo), np.array(hi)


def default_family(seed: int = 0, levels: int = 6, random: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Dyadic family down to ``lambda(J)/2^levels`` plus ``random`` seeded subintervals."""
    lo, hi = dyadic_family(levels)
    if random:
        rng = np.random.default_rng(seed)
        ab = np.sort(rng.random((random, 2)), axis=1)
        lo = np.concatenate([lo, ab[:, 0]])
        hi = np.concatenate([hi, ab[:, 1]])
    return lo, hi


# --------------------------------------------------------------------------
# preimage kernel
# --------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _inv_interp(v, th, y):
    """``theta`` where the increasing sample ``v`` reaches ``y`` (clamped)."""
    n = v.size
    if y <= v[0]:
        return th[0]
    if y >= v[n - 1]:
        return th[n - 1]
    lo, hi = 0, n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if v[mid] <= y:
            lo = mid
        else:
            hi = mid
    t = (y - v[lo]) / (v[hi] - v[lo])
    return th[lo] + t * (th[hi] - th[lo])


@numba.njit(cache=True, nogil=True)
def _preimage_batch(th, v, jlo, jlen, wrap, flo, fhi):
    """``out[a, f] = lambda{theta in row a : v(theta) in J~_f (mod 1 if wrap[a])}``."""
    rows, m = v.shape
    nf = flo.size
    out = np.zeros((rows, nf))
    mono = np.zeros(rows, dtype=np.bool_)
    for a in range(rows):
        inc = True
        dec = True
        for i in range(m - 1):
            d = v[a, i + 1] - v[a, i]
            if d <= 0.0:
                inc = False
            if d >= 0.0:
                dec = False
        vmin = v[a, 0]
        vmax = v[a, 0]
        for i in range(m):
            vmin = min(vmin, v[a, i])
            vmax = max(vmax, v[a, i])
        if inc or dec:
            mono[a] = True
            if inc:
                vv = v[a].copy()
                tt = th[a].copy()
            else:
                vv = v[a, ::-1].copy()
                tt = th[a, ::-1].copy()
            for f in range(nf):
                lo = jlo[a] + jlen[a] * flo[f]
                hi = jlo[a] + jlen[a] * fhi[f]
                total = 0.0
                if wrap[a]:
                    k0 = int(math.floor(vmin - hi)) - 1
                    k1 = int(math.ceil(vmax - lo)) + 1
                else:
                    k0 = 0
                    k1 = 0
                for k in range(k0, k1 + 1):
                    x0 = max(lo + k, vmin)
                    x1 = min(hi + k, vmax)
                    if x1 > x0:
                        total += abs(_inv_interp(vv, tt, x1) - _inv_interp(vv, tt, x0))
                out[a, f] = total
        else:
            for i in range(m - 1):
                v0, v1 = v[a, i], v[a, i + 1]
                seg = abs(th[a, i + 1] - th[a, i])
                s0, s1 = min(v0, v1), max(v0, v1)
                for f in range(nf):
                    lo = jlo[a] + jlen[a] * flo[f]
                    hi = jlo[a] + jlen[a] * fhi[f]
                    if wrap[a]:
                        k0 = int(math.floor(s0 - hi)) - 1
                        k1 = int(math.ceil(s1 - lo)) + 1
                    else:
                        k0 = 0
                        k1 = 0
                    for k in range(k0, k1 + 1):
                        x0 = max(lo + k, s0)
                        x1 = min(hi + k, s1)
                        if s1 == s0:
                            if lo + k <= s0 <= hi + k:
                                out[a, f] += seg
                        elif x1 > x0:
                            out[a, f] += seg * (x1 - x0) / (s1 - s0)
    return out, mono


# --------------------------------------------------------------------------
# distribution reports
# --------------------------------------------------------------------------

@dataclass
class DistributionReport:
    atom_id: int
    J: tuple[float, float]
    gamma: float
    delta: float
    eps: float
    targets: tuple[float, float, float]
    passed: bool
    length: float = 0.0
    samples: int = 0
    family_size: int = 0
    worst: tuple[float, float] = (0.0, 1.0)
    monotone: bool = True

    def as_record(self, stage: Optional[int] = None) -> dict:
        return {"stage": "" if stage is None else stage, "atom_id": self.atom_id,
                "gamma": self.gamma, "delta": self.delta, "eps": self.eps,
                "gamma_target": self.targets[0], "delta_target": self.targets[1],
                "eps_target": self.targets[2], "pass": self.passed}


def _circular_spread(u: np.ndarray) -> np.ndarray:
    """Length of the shortest arc containing each row of points on the circle."""
    s = np.sort(np.mod(u, 1.0), axis=1)
    gaps = np.diff(s, axis=1)
    wrap_gap = s[:, 0] + 1.0 - s[:, -1]
    big = np.maximum(gaps.max(axis=1) if gaps.shape[1] else 0.0, wrap_gap)
    return 1.0 - big


def _unwrap_rows(v: np.ndarray) -> np.ndarray:
    d = circle_diff(v[:, 1:], v[:, :-1])
    return np.concatenate([v[:, :1], v[:, :1] + np.cumsum(d, axis=1)], axis=1)


def _refine_extreme(Phi: PlanarMap, lo, hi, r, th_row, v_row, idx, sign, torus):
    """Bisection-type refinement (bounded Brent) of an interior extremum of the r-image."""
    a = th_row[max(idx - 1, 0)]
    b = th_row[min(idx + 1, th_row.size - 1)]
    ref = v_row[idx]

    def fun(t):
        val = Phi.forward(np.array([t]), np.array([r]))[1][0]
        if torus:
            val = ref + circle_diff(val, ref)
        return sign * val

    res = optimize.minimize_scalar(fun, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-14 * max(hi - lo, 1e-300)})
    return sign * min(res.fun, sign * ref)


def _atom_arrays(atoms) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(atoms, Atom):
        atoms = [atoms]
    ids = np.array([a.id for a in atoms], dtype=np.int64)
    return (ids, np.array([a.lo for a in atoms]), np.array([a.hi for a in atoms]),
            np.array([a.r for a in atoms]))


def decomposition_atoms(dec: PartialDecomposition, heights: Union[str, Sequence[int]] = "all"):
    """Atoms of a decomposition, optionally restricted to a subset of height indices."""
    H = dec.heights.size
    hidx = range(H) if heights == "all" else ([0] if heights == "first" else list(heights))
    out = []
    for i in range(dec.n_intervals):
        for h in hidx:
            out.append(dec.atom(i * H + h))
    return out


def measure_distribution(Phi: PlanarMap, atoms, family: Optional[tuple] = None,
                         resolution: int = 1000,
                         targets: tuple[float, float, float] = (1.0, 1.0, 1.0),
                         seed: int = 0, chunk: int = 2048, refine: bool = True,
                         full_tol: float = 1e-9) -> list[DistributionReport]:
    """Measured ``(gamma, delta, eps)`` for each atom (an :class:`Atom` or a list of them).

    ``J`` is the range of the (lifted) ``r``-image; an image whose lift spans
    at least ``1 - full_tol`` is treated as covering the whole circle
    (``lambda(J) = 1`` and preimages are counted modulo one).  ``eps`` is the
    worst relative discrepancy over ``family`` (relative endpoints in
    ``[0, 1]``; default: dyadic down to ``lambda(J)/64`` plus 32 random).
    """
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000 samples per atom")
    flo, fhi = family if family is not None else default_family(seed)
    flo = np.ascontiguousarray(flo, dtype=float)
    fhi = np.ascontiguousarray(fhi, dtype=float)
    ids, los, his, rs = _atom_arrays(atoms)
    torus = Phi.surface == TORUS
    t = np.linspace(0.0, 1.0, resolution)
    reports: list[DistributionReport] = []
    for start in range(0, ids.size, chunk):
        sl = slice(start, start + chunk)
        lo, hi, r = los[sl], his[sl], rs[sl]
        th = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        u, v = Phi.forward(np.mod(th, 1.0).ravel(), np.repeat(r, resolution))
        u = u.reshape(th.shape)
        v = v.reshape(th.shape)
        if torus:
            v = _unwrap_rows(v)
        vmin = v.min(axis=1)
        vmax = v.max(axis=1)
        if refine:
            amin, amax = v.argmin(axis=1), v.argmax(axis=1)
            for a in np.nonzero((amin > 0) & (amin < resolution - 1))[0]:
                vmin[a] = _refine_extreme(Phi, lo[a], hi[a], r[a], th[a], v[a], amin[a], 1.0, torus)
            for a in np.nonzero((amax > 0) & (amax < resolution - 1))[0]:
                vmax[a] = _refine_extreme(Phi, lo[a], hi[a], r[a], th[a], v[a], amax[a], -1.0, torus)
        span = vmax - vmin
        full = torus & (span >= 1.0 - full_tol)
        jlen = np.where(full, 1.0, np.minimum(span, 1.0))
        meas, mono = _preimage_batch(np.ascontiguousarray(th), np.ascontiguousarray(v),
                                     np.ascontiguousarray(vmin), np.ascontiguousarray(jlen),
                                     np.ascontiguousarray(full), flo, fhi)
        gamma = _circular_spread(u)
        lam_i = hi - lo
        lam_jt = jlen[:, None] * (fhi - flo)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(meas * jlen[:, None] - lam_i[:, None] * lam_jt) / (lam_i[:, None] * lam_jt)
        rel = np.where(lam_jt > 0, rel, 0.0)
        worst = rel.argmax(axis=1)
        eps = rel.max(axis=1)
        for a in range(lo.size):
            g = float(gamma[a])
            if g >= 1.0 - 1e-12:
                g = 1.0
            d = float(1.0 - jlen[a])
            e = float(eps[a]) if jlen[a] > 0 else math.inf
            ok = (g < 1.0 and jlen[a] > 0 and g <= targets[0] and d <= targets[1]
                  and e <= targets[2])
            reports.append(DistributionReport(
                int(ids[start + a]), (float(vmin[a]), float(vmin[a] + jlen[a])), g, d, e,
                tuple(targets), bool(ok), float(lam_i[a]), resolution, flo.size,
                (float(flo[worst[a]]), float(fhi[worst[a]])), bool(mono[a])))
    return reports


# --------------------------------------------------------------------------
# uniform stretch
# --------------------------------------------------------------------------

@dataclass
class StretchReport:
    inf_df_len: float
    k: float
    sup_ddf_len: float
    eps_inf_df: float
    criterion_ok: bool
    direct_eps: float
    direct_span: float
    direct_ok: bool

    @property
    def consistent(self) -> bool:
        """The derivative criterion never passes while the direct measurement fails."""
        return (not self.criterion_ok) or self.direct_ok


def check_uniform_stretch(f, df, ddf, interval: tuple[float, float], eps: float, k: float,
                          samples: int = 10_000, levels: int = 4) -> StretchReport:
    """Derivative criterion for ``(eps, k)``-uniform stretch plus a direct cross-check.

    ``f``, ``df`` and ``ddf`` are vectorised callables.  The direct check
    computes ``lambda(I cap f^{-1} J~)`` for the dyadic subintervals ``J~`` of
    ``J = [inf f, sup f]`` down to ``lambda(J) / 2^levels``, from the dense sample.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("empty interval")
    x = np.linspace(lo, hi, samples)
    try:
        d1 = np.abs(np.asarray(df(x), dtype=float))
        d2 = np.abs(np.asarray(ddf(x), dtype=float))
    except Exception as exc:  # pragma: no cover - depends on the caller
        raise ValueError("derivatives unavailable on the interval") from exc
    lam = hi - lo
    inf1 = float(d1.min())
    sup2 = float(d2.max())
    crit = inf1 * lam >= k and sup2 * lam <= eps * inf1
    y = np.asarray(f(x), dtype=float)
    jlo, jhi = float(y.min()), float(y.max())
    span = jhi - jlo
    flo, fhi = dyadic_family(levels)
    meas, _ = _preimage_batch(x[None, :].copy(), y[None, :].copy(), np.array([jlo]),
                              np.array([span]), np.array([False]), flo, fhi)
    lam_jt = span * (fhi - flo)
    rel = np.abs(meas[0] * span - lam * lam_jt) / (lam * lam_jt) if span > 0 else np.array([math.inf])
    direct_eps = float(rel.max())
    return StretchReport(inf1 * lam, k, sup2 * lam, eps * inf1, bool(crit), direct_eps, span,
                         bool(span >= k and direct_eps <= eps))


# --------------------------------------------------------------------------
# strip and square distribution
# --------------------------------------------------------------------------

def strip_preimage_pieces(b: int, gamma, c, K: tuple, L: tuple) -> list[tuple[Fraction, Fraction]]:
    """Exact subintervals of ``{r in K : b r in [l1 - gamma, l2] - c (mod 1)}``."""
    b = int(b)
    gamma, c = Fraction(gamma), Fraction(c)
    k1, k2 = Fraction(K[0]), Fraction(K[1])
    l1, l2 = Fraction(L[0]), Fraction(L[1])
    if b == 0:
        raise ValueError("b must be non-zero")
    w_lo, w_hi = l1 - gamma - c, l2 - c
    if w_hi - w_lo >= 1:
        return [(k1, k2)]
    t0, t1 = sorted((b * k1, b * k2))
    out = []
    for k in range(math.floor(t0 - w_hi), math.ceil(t1 - w_lo) + 1):
        a, z = max(t0, w_lo + k), min(t1, w_hi + k)
        if z > a:
            out.append(tuple(sorted((a / b, z / b))))
    return sorted(out)


def strip_preimage_measure(b: int, gamma, c, K: tuple, L: tuple) -> Fraction:
    """Exact ``lambda{r in K : b r in [l1 - gamma, l2] - c (mod 1)}``."""
    return sum((z - a for a, z in strip_preimage_pieces(b, gamma, c, K, L)), Fraction(0))


@dataclass
class StripReport:
    lambda_Q: Fraction
    lhs: Fraction
    rhs: Fraction
    ok: bool


def strip_distribution_check(b: int, gamma, c, K: tuple, L: tuple) -> StripReport:
    """Exact ``lambda(Q)`` and both sides of ``|lambda(Q) - lambda(K) lambda(L)| <= bound``."""
    b = int(b)
    lk = Fraction(K[1]) - Fraction(K[0])
    ll = Fraction(L[1]) - Fraction(L[0])
    if abs(b) < 2 or abs(b) * lk <= 2:
        raise ValueError("need |b| >= 2 and |b| lambda(K) > 2")
    gamma = Fraction(gamma)
    q = strip_preimage_measure(b, gamma, c, K, L)
    lhs = abs(q - lk * ll)
    rhs = gamma * lk + 2 * ll / abs(b) + 2 * gamma / abs(b)
    return StripReport(q, lhs, rhs, lhs <= rhs)


@dataclass
class SquareReport:
    measure: float
    lambda_I: float
    lambda_J: float
    mu_S: float
    discrepancy: float
    bound: float
    relative: float
    ok: bool
    oracle: Optional[float] = None


def _in_square(th, r, s0, r0, side):
    return (np.mod(th - s0, 1.0) <= side) & (r >= r0) & (r <= r0 + side)


def _bisect_transitions(fun, a, b, ia, iters: int = 60):
    """Locate indicator switches in ``(a, b)``; ``ia`` is the indicator at ``a``."""
    for _ in range(iters):
        mid = 0.5 * (a + b)
        im = fun(mid)
        same = im == ia
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    return 0.5 * (a + b)


def square_distribution_check(stage, Phi: PlanarMap, atom: Atom, S: tuple,
                              J: Optional[tuple] = None, resolution: int = 20000,
                              n: Optional[int] = None, g: Optional[PlanarMap] = None) -> SquareReport:
    """``|lambda(I cap Phi^-1 g^-1 S) lambda(J) - lambda(I) mu(S)|`` against ``(8/n) lambda(I) mu(S)``.

    ``S = (theta0, r0, side)``.  The indicator along the atom is sampled
    densely and every switch is located by bisection, so the measured set is
    exact up to the sampling of very thin excursions.
    """
    s0, r0, side = (float(v) for v in S)
    n = n if n is not None else stage.n
    g = g if g is not None else Twist(stage.b, Phi.surface)
    if J is None:
        rep = measure_distribution(Phi, atom, resolution=max(resolution, 1000), refine=True)[0]
        J = rep.J
    jl = min(J[1] - J[0], 1.0)
    if Phi.surface == ANNULUS or jl < 1.0:
        lo_ok = r0 >= J[0] - 1e-12 if Phi.surface == ANNULUS else \
            (np.mod(r0 - J[0], 1.0) + side <= jl + 1e-12)
        hi_ok = r0 + side <= J[1] + 1e-12 if Phi.surface == ANNULUS else True
        if not (lo_ok and hi_ok):
            raise ValueError("square S is not contained in T x J")

    def ind(theta):
        a, b = Phi.forward(np.mod(theta, 1.0), np.full(theta.shape, atom.r))
        a, b = g.forward(a, b)
        return _in_square(a, b, s0, r0, side)

    th = np.linspace(atom.lo, atom.hi, resolution)
    flags = ind(th)
    sw = np.nonzero(flags[1:] != flags[:-1])[0]
    cuts = _bisect_transitions(ind, th[sw], th[sw + 1], flags[sw]) if sw.size else np.array([])
    edges = np.concatenate([[atom.lo], cuts, [atom.hi]])
    states = np.concatenate([[flags[0]], flags[sw + 1]])
    meas = float(np.sum(np.diff(edges)[states]))
    lam_i = atom.hi - atom.lo
    mu = side * side
    disc = abs(meas * jl - lam_i * mu)
    bound = 8.0 / n * lam_i * mu
    return SquareReport(meas, lam_i, jl, mu, disc, bound, disc / (lam_i * mu), disc <= bound)


def vertical_square_oracle(theta_c: float, b: int, atom: Atom, J: tuple, S: tuple,
                           Phi: Optional[PlanarMap] = None) -> float:
    """Measure for an atom whose image is the vertical segment ``{theta_c} x J``.

    The pieces of ``r`` with ``g(theta_c, r) in S`` are exact rationals.
    Without ``Phi`` the segment is assumed to be traversed affinely; with it
    each piece is pulled back to the atom through ``Phi^{-1}``.
    """
    s0, r0, side = (Fraction(v) for v in S)
    pieces = strip_preimage_pieces(b, 0, Fraction(theta_c), (r0, r0 + side), (s0, s0 + side))
    if Phi is None:
        q = sum((z - a for a, z in pieces), Fraction(0))
        return float(Fraction(atom.hi - atom.lo) * q / (Fraction(J[1]) - Fraction(J[0])))
    if not pieces:
        return 0.0
    ends = np.array([[float(a), float(z)] for a, z in pieces])
    th, _ = Phi.backward(np.full(ends.size, theta_c), ends.ravel())
    th = th.reshape(ends.shape)
    d = circle_diff(th[:, 1], th[:, 0])
    return float(np.abs(d).sum())


# --------------------------------------------------------------------------
# d_0 proxy and the stage verdict
# --------------------------------------------------------------------------

@dataclass
class D0Check:
    label: str
    sampled: float
    tail: float
    bound: float

    @property
    def total(self) -> float:
        return self.sampled + self.tail

    @property
    def ok(self) -> bool:
        return self.total < self.bound


def d0_proxy(stages: Sequence, n: int, m: int, tail: float = 0.0, samples: int = 2048,
             seed: int = 0) -> D0Check:
    """Telescoping proxy for ``d_0(f^m, f_n^m)``.

    Sums sampled ``d_0(f_{j+1}^m, f_j^m)`` over the built, float-evaluable
    stages ``j >= n`` and adds ``tail``, a caller-supplied bound for the part
    of the telescoping sum beyond the last such stage.  Compare with ``2^-n``.
    """
    total = 0.0
    evaluable = [s for s in stages if not getattr(s, "arithmetic_only", False)]
    by_n = {s.n: s for s in evaluable}
    j = n
    while j + 1 in by_n and j in by_n:
        a = iterate(by_n[j + 1].f, m)
        b = iterate(by_n[j].f, m)
        total += sup_distance_d0(a, b, samples, seed).value
        j += 1
    return D0Check(f"d0(f^{m}, f_{n}^{m})", total, float(tail), 2.0 ** -n)


@dataclass
class Condition:
    name: str
    value: float
    bound: float
    relation: str
    ok: bool
    note: str = ""


@dataclass
class StageVerdict:
    stage: int
    regime: str
    conditions: list[Condition] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.ok]


def aggregate_criterion(stage, decomposition: PartialDecomposition,
                        reports: Sequence[DistributionReport], d0_checks: Sequence[D0Check] = (),
                        dh_prev: Optional[float] = None,
                        coverage_floor: Optional[float] = None) -> StageVerdict:
    """AND of the per-stage conditions of the weak mixing criterion, with details."""
    q, n = stage.q, stage.n
    v = StageVerdict(n, getattr(stage, "regime", "?"))
    ml = decomposition.max_length()
    v.conditions.append(Condition("atom length < 1/q_n", ml, 1.0 / q, "<", ml < 1.0 / q))
    cov = decomposition.coverage()
    floor = coverage_floor if coverage_floor is not None else 0.0
    v.conditions.append(Condition("coverage", cov, floor, ">=", cov >= floor,
                                  "measured area of the atoms; must tend to 1 across stages"))
    bad = [r for r in reports if not r.passed]
    worst = max((r.eps for r in reports), default=math.inf)
    v.conditions.append(Condition("atoms distributed", float(len(reports) - len(bad)),
                                  float(len(reports)), "==", bool(reports) and not bad,
                                  f"worst eps {worst:.3g}"))
    if dh_prev is not None:
        v.conditions.append(Condition("||DH_{n-1}||_0 < ln q_n", float(dh_prev), math.log(q), "<",
                                      dh_prev < math.log(q)))
    for d in d0_checks:
        v.conditions.append(Condition(d.label, d.total, d.bound, "<", d.ok,
                                      f"sampled {d.sampled:.3g} + tail {d.tail:.3g}"))
    return v


def coverage_trend(values: Sequence[float]) -> bool:
    """Coverage increases stage by stage (the finite shadow of ``eta_n -> points``)."""
    return all(b >= a for a, b in zip(values, values[1:]))


# --------------------------------------------------------------------------
# CSV export
# --------------------------------------------------------------------------

REPORT_COLUMNS = ["stage", "atom_id", "gamma", "delta", "eps", "gamma_target", "delta_target",
                  "eps_target", "pass"]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_csv(reports: Iterable[DistributionReport], stage: Optional[int] = None,
                out: Optional[io.TextIOBase] = None) -> str:
    """RFC-4180 CSV (CRLF line ends, minimal quoting), one row per atom."""
    buf = out if out is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        rec = r.as_record(stage)
        w.writerow([_fmt(rec[c]) for c in REPORT_COLUMNS])
    return buf.getvalue() if out is None else ""


def d0_tail(m: int, norm: float, log_dist, factor: float = 2.0) -> float:
    """Tail bound ``factor * m * norm * |alpha - alpha_{L+1}|`` for the telescoping sum.

    ``norm`` bounds ``||DH||_0`` of the stages beyond the last built one (the
    last measured value or an analytic bound) and ``log_dist`` is
    ``ln|alpha - alpha_{L+1}|``; the default factor 2 absorbs the geometric
    decay of the remaining terms.
    """
    import mpmath

    if log_dist is None:
        return 0.0
    val = mpmath.mpf(factor) * m * mpmath.mpf(norm) * mpmath.exp(mpmath.mpf(log_dist))
    return float(val)
