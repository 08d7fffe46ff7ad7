from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from akatower.maps import (ANNULUS, Affine, AnalyticShear, ConjugatedRotation, Identity,
                           Rotation, Twist, circle_diff, compose, evaluate, iterate, jacobian,
                           sup_distance_d0)

RNG = np.random.default_rng(11)
TH, R = RNG.random((2, 500))


def _close(a, b, tol=1e-12):
    return (np.abs(circle_diff(a[0], b[0])).max() <= tol
            and np.abs(circle_diff(a[1], b[1])).max() <= tol)


@pytest.mark.parametrize("mp", [Rotation(Fraction(3, 7)), Twist(5), AnalyticShear(8),
                                Affine([[2, 1], [1, 1]]),
                                compose(Twist(3), AnalyticShear(4), Rotation(0.1))])
def test_round_trip_and_unit_determinant(mp):
    assert _close(mp.backward(*mp.forward(TH, R)), (TH, R), 1e-10)
    assert np.abs(mp.det(TH, R) - 1).max() < 1e-12


def test_compose_applies_rightmost_first():
    a, b = Twist(2), AnalyticShear(3)
    ab = compose(a, b)
    assert _close(ab.forward(TH, R), a.forward(*b.forward(TH, R)))
    assert _close(ab.inverse().forward(TH, R), b.backward(*a.backward(TH, R)))


@pytest.mark.parametrize("mp", [Twist(3), AnalyticShear(4), compose(Twist(2), AnalyticShear(3))])
def test_jacobian_matches_finite_differences(mp):
    h = 1e-7
    th, r = TH[:50] * 0.9 + 0.05, R[:50] * 0.9 + 0.05
    j = mp.jac(th, r)
    for col, (dt, dr) in enumerate(((h, 0), (0, h))):
        up = mp.forward(th + dt, r + dr)
        dn = mp.forward(th - dt, r - dr)
        fd0 = circle_diff(up[0], dn[0]) / (2 * h)
        fd1 = circle_diff(up[1], dn[1]) / (2 * h)
        scale = max(1.0, np.abs(j).max())
        assert np.abs(fd0 - j[:, 0, col]).max() < 1e-5 * scale
        assert np.abs(fd1 - j[:, 1, col]).max() < 1e-5 * scale


def test_rotation_power_is_exact():
    r = Rotation(Fraction(1, 3))
    assert r.power(3).exact == 1 and r.power(3).t == 0.0
    assert iterate(r, 7).forward(np.array([0.0]), np.array([0.5]))[0][0] == pytest.approx(1 / 3)


def test_conjugated_rotation_iterate_collapses():
    h = compose(Twist(2), AnalyticShear(3))
    f = ConjugatedRotation(h, Fraction(1, 10))
    looped = (TH, R)
    for _ in range(4):
        looped = f.forward(*looped)
    assert _close(iterate(f, 4).forward(TH, R), looped, 1e-9)
    # a full period returns every point
    assert _close(iterate(f, 10).forward(TH, R), (TH, R), 1e-9)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_rotation_distance(a, b):
    d = sup_distance_d0(Rotation(a), Rotation(b), 64).value
    expected = min(abs(a - b), 1 - abs(a - b))
    assert d == pytest.approx(expected, abs=1e-12)


def test_identity_and_helpers():
    i = Identity(ANNULUS)
    assert evaluate(i, (0.25, 0.5)) == pytest.approx((0.25, 0.5))
    assert np.allclose(jacobian(Twist(4), (0.1, 0.2)), [[1, 4], [0, 1]])
    assert circle_diff(0.95, 0.05) == pytest.approx(-0.1)
