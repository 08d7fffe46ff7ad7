import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akatower import analytic as an
from akatower import arithmetic as ar


@st.composite
def mixing_triples(draw):
    q_next = draw(st.integers(2, 3000))
    q_n = draw(st.integers(1, q_next))
    p_next = draw(st.integers(1, q_next).filter(lambda p: math.gcd(p, q_next) == 1))
    return q_n, p_next, q_next


def _scan(q_n, p_next, q_next, strict):
    # independent oracle: exact rational scan over every admissible m
    alpha = Fraction(p_next, q_next)
    bound = Fraction(q_n, q_next)
    for m in range(1, q_next + 1):
        d = ar.dist_to_int(m * q_n * alpha - Fraction(1, 2))
        if d < bound or (not strict and d == bound):
            return m
    return None


@settings(max_examples=300, deadline=None)
@given(mixing_triples(), st.booleans())
def test_mixing_index_matches_rational_scan(t, strict):
    expected = _scan(*t, strict)
    if expected is None:
        with pytest.raises(ArithmeticError):
            ar.mixing_index(*t, strict=strict)
    else:
        assert ar.mixing_index(*t, strict=strict) == expected


def test_mixing_index_huge_denominator_is_fast():
    K = 200_000
    q_next = 1 << K
    p_next = (1 << (K - 4)) + 1
    m = ar.mixing_index(16, p_next, q_next)
    assert 1 <= m <= q_next
    assert ar.mixing_residual(m, 16, Fraction(p_next, q_next)) < Fraction(16, q_next)


def test_mixing_index_rejects_bad_input():
    with pytest.raises(ValueError):
        ar.mixing_index(4, 2, 10)
    with pytest.raises(ValueError):
        ar.mixing_index(40, 1, 7)
    with pytest.raises(ValueError):
        ar.mixing_residual(0, 4, Fraction(1, 40))


def test_smooth_tower_mixing_indices():
    # the indices of the demo smooth tower, recomputed by the rational scan
    assert ar.mixing_index(4, 1, 40, strict=False) == _scan(4, 1, 40, False) == 4
    assert ar.mixing_index(40, 1, 1600, strict=False) == _scan(40, 1, 1600, False) == 19


def test_convergents_of_golden_mean():
    fib = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    cv = ar.convergents("0.6180339887498948482", 9)
    assert cv == [Fraction(fib[i], fib[i + 1]) for i in range(9)]
    assert not cv.truncated


def test_convergents_truncated_rational():
    cv = ar.convergents(Fraction(3, 8), 10)
    assert cv[-1] == Fraction(3, 8)
    assert cv.truncated
    with pytest.raises(ValueError):
        ar.convergents(Fraction(3, 2), 2)


@given(st.fractions(), st.fractions())
def test_log_abs_diff_against_mpmath(a, b):
    got = ar.log_abs_diff(a, b)
    if a == b:
        assert got == ar.NEG_INF
    else:
        with mpmath.workdps(50):
            ref = mpmath.log(abs(mpmath.mpf(a.numerator) / a.denominator
                                 - mpmath.mpf(b.numerator) / b.denominator))
        assert abs(got - ref) < 1e-20 * max(1, abs(ref))


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_log_add(x, y):
    ref = math.log(math.exp(x) + math.exp(y))
    assert float(ar.log_add(mpmath.mpf(x), mpmath.mpf(y))) == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert ar.log_add(ar.NEG_INF, mpmath.mpf(x)) == x


@given(st.integers(1, 10 ** 6), st.integers(1, 9), st.integers(1, 10 ** 40))
def test_int_pow_ge(a, e, b):
    assert ar.int_pow_ge(a, e, b) == (a ** e <= b)


@given(st.fractions(), st.fractions(min_value=Fraction(1, 100), max_value=10))
def test_symmetric_mod(x, mod):
    r = ar.symmetric_mod(x, mod)
    assert -mod / 2 < r <= mod / 2
    assert ((x - r) / mod).denominator == 1


def test_as_rational_forms():
    assert ar.as_rational("0.125") == Fraction(1, 8)
    assert ar.as_rational("3/7") == Fraction(3, 7)
    assert ar.as_rational(5) == 5
    assert ar.to_float_mod1(Fraction(17, 4)) == 0.25


def test_twist_coefficient():
    assert ar.twist_coefficient(1, 16, 0.25) == 2
    assert ar.twist_coefficient(2, 40, 0.5) == 12
    assert ar.twist_coefficient(1, 1 << 3000, 0.25) is None


def test_sequence_growth_and_distance():
    seq = ar.ApproximationSequence(["1/4", "1/40", "1/100"], regime="smooth")
    assert seq.growth_violations() == ["q_3 < 10 n^2 q_2"]
    seq = ar.ApproximationSequence(["1/4", "1/40"], target="0.03")
    assert float(seq.log_distance(2)) == pytest.approx(math.log(0.005))
    seq = ar.ApproximationSequence(["1/4", "1/40"], tail_log=-10)
    assert float(seq.log_distance(2)) == pytest.approx(-10.0)
    assert float(seq.log_distance(1)) == pytest.approx(math.log(0.225 + math.exp(-10)))


def test_ledger_formats_huge_integers():
    row = ar.ConditionRow(1, "P3", 1 << 100_000, 3, True, ">=")
    rec = row.as_record()
    assert rec["lhs"] == "2^100000..100001"
    assert rec["rhs"] == "3"


def test_analytic_enforcement_cites_first_violation():
    # the limit sits exp(-1000) from 1/33: too far for P1 at either entry
    seq = ar.ApproximationSequence(["1/32", "1/33"], regime="analytic", sigma=0.9, delta=3,
                                   tail_log=-1000)
    with pytest.raises(ArithmeticError, match="first violation: P1"):
        ar.enforce_analytic_conditions(seq, 0.9, 0.01, an.bound_provider(0.01, 0.9), delta=3)


def test_analytic_enforcement_sigma_range():
    seq = ar.ApproximationSequence(["1/16", "1/17"], delta=1.5)
    with pytest.raises(ValueError, match="sigma"):
        ar.enforce_analytic_conditions(seq, 0.75, 0.01, an.bound_provider(0.01, 0.75))


def test_smooth_enforcement_missing_norms_violate():
    seq = ar.ApproximationSequence(["1/4", "1/40"], regime="smooth", tail_log=-100)
    with pytest.raises(ArithmeticError):
        ar.enforce_smooth_conditions(seq)
    acc, ledger = ar.enforce_smooth_conditions(seq, required=False)
    assert len(acc) == 2
    assert all(not r.holds for r in ledger.rows if r.condition.startswith("conv"))
