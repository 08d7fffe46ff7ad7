"""Exact rational arithmetic for the approximation sequences of a tower.

Rationals are :class:`fractions.Fraction` (aliased as ``BigRational``): the
stdlib type already keeps numerator and denominator coprime with a positive
denominator after every operation.  Quantities that are far too small to
materialize (``exp(-q**1.75)`` for ``q ~ 2**(10**6)``) are handled as natural
logarithms in :mod:`mpmath`, whose exponent range is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath

BigRational = Fraction

#: working precision (bits) for log-space comparisons
LOG_PREC = 96

NEG_INF = mpmath.mpf("-inf")


def as_rational(x: Union[str, int, Fraction, Decimal]) -> Fraction:
    """Exact rational value of a decimal or ``p/q`` string, integer or rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        s = x.strip().rstrip(".").replace("…", "")
        if "/" in s:
            return Fraction(s)
        return Fraction(Decimal(s))
    return Fraction(x)


def frac_part(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def dist_to_int(x: Fraction) -> Fraction:
    """Exact ``inf_k |x + k|``."""
    f = frac_part(x)
    return min(f, 1 - f)


def symmetric_mod(x: Fraction, modulus: Fraction) -> Fraction:
    """Representative of ``x mod modulus`` in ``(-modulus/2, modulus/2]``."""
    k = math.floor(x / modulus + Fraction(1, 2))
    r = x - k * modulus
    if r <= -modulus / 2:
        r += modulus
    return r


def to_float_mod1(x: Fraction) -> float:
    """Float of ``x mod 1``, reduced exactly before conversion."""
    return float(frac_part(x))


# --------------------------------------------------------------------------
# log-space helpers
# --------------------------------------------------------------------------

def log_int(n: int) -> mpmath.mpf:
    with mpmath.workprec(LOG_PREC):
        return mpmath.log(mpmath.mpf(n))


def log_abs_diff(a: Fraction, b: Fraction) -> mpmath.mpf:
    """``ln|a - b|`` without normalizing huge fractions (no gcd)."""
    num = a.numerator * b.denominator - b.numerator * a.denominator
    if num == 0:
        return NEG_INF
    with mpmath.workprec(LOG_PREC):
        return mpmath.log(mpmath.mpf(abs(num))) - mpmath.log(
            mpmath.mpf(a.denominator)) - mpmath.log(mpmath.mpf(b.denominator))


def log_add(x: mpmath.mpf, y: mpmath.mpf) -> mpmath.mpf:
    """``ln(e**x + e**y)`` for log-magnitudes of any size."""
    if x == NEG_INF:
        return y
    if y == NEG_INF:
        return x
    hi, lo = (x, y) if x >= y else (y, x)
    with mpmath.workprec(LOG_PREC):
        gap = lo - hi
        if gap < -400:
            # e**gap underflows any useful precision; keep a certified bump
            return hi + mpmath.mpf(2) ** -300
        return hi + mpmath.log1p(mpmath.exp(gap))


def int_pow_ge(a: int, e: int, b: int) -> bool:
    """Exact ``a**e <= b`` for positive ints, avoiding the power when bit lengths decide."""
    la, lb = a.bit_length(), b.bit_length()
    if lb > e * la:
        return True
    if lb < e * (la - 1) + 1:
        return False
    return a ** e <= b


# --------------------------------------------------------------------------
# continued fractions
# --------------------------------------------------------------------------

class ConvergentList(list):
    """List of convergents; ``truncated`` is set when a rational input ran out of terms."""

    truncated: bool = False


def continued_fraction(x: Fraction, max_terms: Optional[int] = None) -> list[int]:
    terms = []
    p, q = x.numerator, x.denominator
    while q and (max_terms is None or len(terms) < max_terms):
        a, r = divmod(p, q)
        terms.append(a)
        p, q = q, r
    return terms


def convergents(x, count: int) -> ConvergentList:
    """First ``count`` continued-fraction convergents ``p/q`` of ``x`` in (0, 1).

    The trivial zeroth convergent ``0/1`` is skipped.  If ``x`` is a rational
    whose expansion ends early, every available convergent is returned and
    the ``truncated`` attribute of the result is set.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    x = as_rational(x)
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    terms = continued_fraction(x, count + 1)
    out = ConvergentList()
    p_prev, q_prev, p, q = 1, 0, terms[0], 1
    for a in terms[1:]:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        out.append(Fraction(p, q))
        if len(out) == count:
            break
    out.truncated = len(out) < count
    return out


# --------------------------------------------------------------------------
# mixing time
# --------------------------------------------------------------------------

def _first_hit(a: int, n: int, lo: int, hi: int) -> Optional[int]:
    """Smallest ``x >= 0`` with ``lo <= (a*x mod n) <= hi`` for ``0 <= lo <= hi < n``."""
    a %= n
    if lo == 0:
        return 0
    if a == 0:
        return None
    x = -(-lo // a)
    if a * x <= hi:
        return x
    # no multiple of a in [lo, hi]; look for the first wrap y that brings one in
    y = _first_hit(n % a, a, (-hi) % a, (-lo) % a)
    if y is None:
        return None
    return -(-(lo + n * y) // a)


def _first_hit_positive(a: int, n: int, lo: int, hi: int) -> Optional[int]:
    """Like :func:`_first_hit` but for ``x >= 1``: substitute ``x = 1 + y``."""
    lo1, hi1 = (lo - a) % n, (hi - a) % n
    if hi - lo >= n - 1 or lo1 > hi1:
        return 1
    y = _first_hit(a, n, lo1, hi1)
    return None if y is None else 1 + y


def _mixing_ok(m: int, c: int, q_n: int, q_next: int, strict: bool) -> bool:
    # |m c/q' - 1/2 + k| < q/q'  <=>  |2 m c - q' (mod 2q')| < 2q
    v = (2 * m * c - q_next) % (2 * q_next)
    d = min(v, 2 * q_next - v)
    return d < 2 * q_n if strict else d <= 2 * q_n


def mixing_index_bruteforce(q_n: int, p_next: int, q_next: int, strict: bool = True) -> int:
    c = (q_n * p_next) % q_next
    for m in range(1, q_next + 1):
        if _mixing_ok(m, c, q_n, q_next, strict):
            return m
    raise ArithmeticError("no admissible mixing index")


def mixing_index(q_n: int, p_next: int, q_next: int, strict: bool = True) -> int:
    """Smallest ``m <= q_next`` with ``dist(m q_n p_next / q_next - 1/2, Z) < q_n / q_next``.

    ``strict=False`` uses ``<=`` (the smooth-case definition).  Runs in
    ``O(log q_next)`` big-integer steps, so it works for denominators with
    millions of bits.
    """
    if math.gcd(p_next, q_next) != 1:
        raise ValueError("p_next and q_next must be coprime")
    if q_next < q_n:
        raise ValueError("q_next must be >= q_n")
    c = (q_n * p_next) % q_next
    if q_next < 2 * q_n:
        return mixing_index_bruteforce(q_n, p_next, q_next, strict)
    slack = 1 if strict else 0
    m = _first_hit_positive(2 * c, 2 * q_next, q_next - 2 * q_n + slack,
                            q_next + 2 * q_n - slack)
    if m is None or m > q_next or not _mixing_ok(m, c, q_n, q_next, strict):
        raise ArithmeticError(
            f"no m <= {q_next} puts m*q_n*alpha_next within q_n/q_next of 1/2")
    return m


def mixing_residual(m: int, q_n: int, alpha_next: Fraction) -> Fraction:
    """Exact ``dist(m q_n alpha_next - 1/2, Z)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return dist_to_int(m * q_n * Fraction(alpha_next) - Fraction(1, 2))


# --------------------------------------------------------------------------
# sequences and condition ledgers
# --------------------------------------------------------------------------

def default_k(n: int) -> int:
    return n * n


def default_ck(k: int) -> int:
    """Conservative stand-in for the composition constant ``C_k`` (``C_0 = 1``)."""
    return math.factorial(k + 1) * 4 ** k if k > 0 else 1


@dataclass
class ConditionRow:
    stage: int
    condition: str
    lhs: object
    rhs: object
    holds: bool
    relation: str = "<="
    required: bool = True
    note: str = ""

    def fmt(self, v) -> str:
        if isinstance(v, mpmath.mpf):
            return mpmath.nstr(v, 12)
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, int) and not isinstance(v, bool) and v.bit_length() > 128:
            # millions of digits are useless in a ledger; show sign and size
            return f"{'-' if v < 0 else ''}2^{abs(v).bit_length() - 1}..{abs(v).bit_length()}"
        return str(v)

    def as_record(self) -> dict:
        return {
            "stage": self.stage, "condition": self.condition,
            "lhs": self.fmt(self.lhs), "relation": self.relation,
            "rhs": self.fmt(self.rhs), "holds": self.holds,
            "required": self.required, "note": self.note,
        }


@dataclass
class ConditionLedger:
    rows: list[ConditionRow] = field(default_factory=list)

    def add(self, row: ConditionRow) -> ConditionRow:
        self.rows.append(row)
        return row

    def for_stage(self, n: int) -> list[ConditionRow]:
        return [r for r in self.rows if r.stage == n]

    def violations(self, required_only: bool = True) -> list[ConditionRow]:
        return [r for r in self.rows if not r.holds and (r.required or not required_only)]

    def first_violation(self, n: Optional[int] = None) -> Optional[ConditionRow]:
        for r in self.rows:
            if not r.holds and r.required and (n is None or r.stage == n):
                return r
        return None

    @property
    def ok(self) -> bool:
        return not self.violations()


@dataclass
class ApproximationSequence:
    """Rational approximations ``alpha_n = p_n/q_n`` (stage ``n`` is ``entries[n-1]``).

    The limit ``alpha`` is either an explicit decimal ``target`` or, when no
    target is given, the last entry shifted by ``exp(tail_log)`` (no shift when
    ``tail_log`` is None).  ``alpha`` itself is never needed beyond these.
    """

    entries: list[Fraction]
    target: Optional[str] = None
    regime: str = "analytic"
    sigma: float = 0.25
    delta: Optional[float] = None
    tail_log: Optional[mpmath.mpf] = None

    def __post_init__(self):
        self.entries = [as_rational(e) for e in self.entries]
        if self.tail_log is not None:
            self.tail_log = mpmath.mpf(self.tail_log)

    def __len__(self):
        return len(self.entries)

    def alpha(self, n: int) -> Fraction:
        return self.entries[n - 1]

    def q(self, n: int) -> int:
        return self.entries[n - 1].denominator

    def log_distance(self, n: int) -> mpmath.mpf:
        """Certified upper bound on ``ln|alpha - alpha_n|``."""
        a_n = self.alpha(n)
        if self.target is not None:
            return log_abs_diff(as_rational(self.target), a_n)
        last = self.entries[-1]
        base = log_abs_diff(last, a_n)
        tail = NEG_INF if self.tail_log is None else self.tail_log
        return log_add(base, tail)

    def growth_violations(self) -> list[str]:
        out = []
        for n in range(1, len(self.entries)):
            q, q1 = self.q(n), self.q(n + 1)
            if q1 <= q:
                out.append(f"q_{n + 1} <= q_{n}")
            if self.regime == "analytic" and not int_pow_ge(q, 7, q1):
                out.append(f"q_{n + 1} < q_{n}^7")
            if self.regime == "smooth" and q1 < 10 * n * n * q:
                out.append(f"q_{n + 1} < 10 n^2 q_{n}")
        return out

    def subsequence(self, idx: Sequence[int]) -> "ApproximationSequence":
        return ApproximationSequence([self.entries[i - 1] for i in idx], self.target,
                                     self.regime, self.sigma, self.delta, self.tail_log)


#: bound provider signature: prefix of accepted (n, q, b) triples -> dict with
#: ``rho_prev`` (strip width of H_{n-1}^{-1}), ``p3`` and ``p4`` bounds
BoundProvider = Callable[[list], dict]


def twist_coefficient(n: int, q: int, sigma: float) -> Optional[int]:
    """``[n q**sigma]``; None when ``q`` is too large to evaluate exactly."""
    if q.bit_length() > 2000:
        return None
    with mpmath.workprec(q.bit_length() + 128):
        v = mpmath.mpf(n) * mpmath.power(mpmath.mpf(q), mpmath.mpf(sigma))
        b = int(mpmath.floor(v))
    return b


def enforce_analytic_conditions(
        seq: ApproximationSequence, sigma: float, rho: float,
        strip_norm_bounds: BoundProvider, jac_bounds: Optional[BoundProvider] = None,
        delta: Optional[float] = None,
) -> tuple[ApproximationSequence, ConditionLedger]:
    """Greedy subsequence on which (P1)-(P4) and the growth law hold.

    ``strip_norm_bounds(prefix)`` returns ``{"rho_prev": ...}`` and
    ``jac_bounds(prefix)`` returns ``{"p3": ..., "p4": ...}`` for the
    conjugacy built from the accepted ``prefix`` of ``(n, q, b)`` triples (use
    :func:`akatower.analytic.bound_provider`).  The ledger keeps both sides of
    every inequality evaluated, for accepted and rejected stages alike.
    """
    if not seq.entries:
        raise ValueError("empty approximation sequence")
    delta = seq.delta if delta is None else delta
    upper = 1.0 if delta is None else min(delta / 3.0, 1.0)
    if not 0 < sigma < upper:
        raise ValueError(f"sigma must lie in (0, {upper})")
    jac_bounds = jac_bounds or strip_norm_bounds
    ledger = ConditionLedger()
    accepted: list[int] = []
    prefix: list[tuple] = []
    with mpmath.workprec(LOG_PREC):
        s = mpmath.mpf(sigma)
        for i in range(1, len(seq) + 1):
            n = len(accepted) + 1
            q = seq.q(i)
            lq = log_int(q)
            rows = []
            if accepted:
                q_prev = seq.q(accepted[-1])
                rows.append(ConditionRow(n, "growth q_n >= q_{n-1}^7", q_prev, q,
                                         int_pow_ge(q_prev, 7, q), "^7<="))
            ld = seq.log_distance(i)
            p1_rhs = -mpmath.exp((1 + 3 * s) * lq)
            rows.append(ConditionRow(n, "P1", ld, p1_rhs, bool(ld < p1_rhs), "<",
                                     note="ln|alpha-alpha_n| < -q_n^(1+3 sigma)"))
            rho_prev = mpmath.mpf(strip_norm_bounds(prefix)["rho_prev"])
            p2_lhs = mpmath.exp(s * lq)
            p2_rhs = 4 * mpmath.pi * n * rho_prev + mpmath.log(8 * mpmath.pi * n) + (s + 4) * lq
            rows.append(ConditionRow(n, "P2", p2_lhs, p2_rhs, bool(p2_lhs >= p2_rhs), ">=",
                                     note="q_n^sigma >= 4 pi n rho_{n-1} + ln(8 pi n q_n^(sigma+4))"))
            jb = jac_bounds(prefix)
            p3 = mpmath.mpf(jb["p3"])
            rows.append(ConditionRow(n, "P3", q, p3, bool(mpmath.mpf(q) >= p3)
                                     if q.bit_length() < 4000 else bool(lq >= mpmath.log(p3)), ">=",
                                     note="q_n >= ||D(H_{n-1}) R_t H_{n-1}^{-1}||_rho"))
            p4 = mpmath.mpf(jb["p4"])
            rows.append(ConditionRow(n, "P4", p4, lq, bool(p4 <= lq), "<=",
                                     note="||DH_{n-1}||_0 <= ln q_n"))
            for r in rows:
                ledger.add(r)
            bad = [r for r in rows if not r.holds]
            if bad:
                ledger.add(ConditionRow(n, "rejected", seq.entries[i - 1], bad[0].condition,
                                        False, "cites", required=False,
                                        note=f"entry {i} rejected by {bad[0].condition}"))
                continue
            accepted.append(i)
            prefix.append((n, q, twist_coefficient(n, q, sigma)))
    if not accepted:
        first = ledger.first_violation()
        raise ArithmeticError(
            f"no stage satisfies the analytic conditions; first violation: {first.condition}")
    return seq.subsequence(accepted), ledger


def enforce_smooth_conditions(
        seq: ApproximationSequence, k_seq: Optional[Callable[[int], int]] = None,
        ck_rule: Callable[[int], int] = default_ck,
        norm_estimates: Optional[Callable[[int, list], dict]] = None,
        epsilon: Optional[float] = None, required: bool = True,
) -> tuple[ApproximationSequence, ConditionLedger]:
    """Growth law, both convergence inequalities and the ``ln q_n`` derivative bound.

    ``norm_estimates(n, alphas)`` receives the accepted prefix plus the
    candidate entry and returns measured norms of the stage-``n`` conjugacy:
    ``{"norm_k": |||H_n|||_{k_n+1} or None, "norm_1": |||H_n|||_1,
    "dh_prev": ||DH_{n-1}||_0}``.  A missing norm makes its inequality
    unevaluable, which counts as a violation.  With ``required=False`` the
    convergence rows are recorded but do not reject a stage.
    """
    if not seq.entries:
        raise ValueError("empty approximation sequence")
    k_seq = k_seq or default_k
    if epsilon is not None:
        tail = sum(1.0 / k_seq(n) for n in range(1, 10_000))
        if tail >= epsilon:
            raise ValueError("sum of 1/k_n must be below epsilon")
    ledger = ConditionLedger()
    accepted: list[int] = []
    with mpmath.workprec(LOG_PREC):
        for i in range(1, len(seq) + 1):
            n = len(accepted) + 1
            q = seq.q(i)
            rows = []
            if accepted:
                q_prev = seq.q(accepted[-1])
                rows.append(ConditionRow(n, "growth (q_n >= 10 (n-1)^2 q_{n-1})", q,
                                         10 * (n - 1) ** 2 * q_prev, q >= 10 * (n - 1) ** 2 * q_prev,
                                         ">="))
            ld = seq.log_distance(i)
            prefix = [seq.alpha(j) for j in accepted] + [seq.alpha(i)]
            est = norm_estimates(n, prefix) if norm_estimates else {}
            k = k_seq(n)
            nk = est.get("norm_k")
            if nk is None:
                rows.append(ConditionRow(n, "conv (k_n)", ld, "unavailable", False, "<",
                                         required=required,
                                         note=f"|||H_n|||_{k + 1} not measurable"))
            else:
                rhs = -mpmath.log(2 * k * ck_rule(k)) - (k + 1) * mpmath.log(mpmath.mpf(nk))
                rows.append(ConditionRow(n, "conv (k_n)", ld, rhs, bool(ld < rhs), "<",
                                         required=required,
                                         note="ln|alpha-alpha_n| < -ln(2 k_n C_k |||H_n|||^(k_n+1))"
                                         + est.get("norm_note", "")))
            n1 = est.get("norm_1")
            if n1 is None:
                rows.append(ConditionRow(n, "conv (m_{n-1}=q_n)", ld, "unavailable", False, "<",
                                         required=required))
            else:
                rhs = -((n + 1) * mpmath.log(2) + log_int(q) + mpmath.log(mpmath.mpf(n1)))
                rows.append(ConditionRow(n, "conv (m_{n-1}=q_n)", ld, rhs, bool(ld < rhs), "<",
                                         required=required,
                                         note="ln|alpha-alpha_n| < -ln(2^(n+1) q_n |||H_n|||_1)"))
            dh = est.get("dh_prev", 1.0)
            rows.append(ConditionRow(n, "||DH_{n-1}||_0 < ln q_n", mpmath.mpf(dh), log_int(q),
                                     bool(mpmath.mpf(dh) < log_int(q)), "<", required=required))
            for r in rows:
                ledger.add(r)
            bad = [r for r in rows if not r.holds and r.required]
            if bad:
                ledger.add(ConditionRow(n, "rejected", seq.entries[i - 1], bad[0].condition,
                                        False, "cites", required=False,
                                        note=f"entry {i} rejected by {bad[0].condition}"))
                continue
            accepted.append(i)
    if not accepted:
        raise ArithmeticError("no stage satisfies the smooth conditions")
    return seq.subsequence(accepted), ledger
