from fractions import Fraction

import numpy as np
import pytest

from akatower.ddmath import cos2pi_qtheta, frac_mul, two_prod


@pytest.mark.parametrize("q", [7, 2 ** 24 + 3, 2 ** 40 + 12345, 3 ** 60])
def test_frac_mul_against_exact_rationals(q):
    th = np.random.default_rng(q % 1000).random(300)
    got = frac_mul(q, th)
    exact = np.array([float((q * Fraction(t)) % 1) for t in th])
    err = np.abs(got - exact)
    err = np.minimum(err, 1 - err)
    assert err.max() < 1e-12


def test_two_prod_is_error_free():
    a, b = 0.1, 3.0 ** 20
    p, e = two_prod(a, b)
    assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_cosine_phase():
    assert cos2pi_qtheta(2 ** 30, np.array([0.0]), 0.5)[0] == pytest.approx(-1.0)
