from fractions import Fraction

import numpy as np
import pytest

from akatower import ergodic as eg
from akatower.maps import AnalyticShear, ConjugatedRotation, Identity, Rotation, Twist, compose

A = "0,0.5,0.25,0.75"


def test_rect_parse_and_validation():
    r = eg.Rect.parse("0, 0.5, 0.25, 0.75")
    assert r.measure == 0.25
    assert eg.as_rect(r) is r
    assert eg.Rect.parse([0, 1, 0, 1]).measure == 1.0
    for bad in ("0,0.5,0.25", "0.6,0.5,0,1", "0,1.5,0,1"):
        with pytest.raises(ValueError):
            eg.Rect.parse(bad)
    assert list(r.contains(np.array([0.0, 0.5, 0.2]), np.array([0.25, 0.3, 0.75]))) == \
           [True, False, False]


def test_half_turn_correlation_matches_exact_value():
    # R_{1/2} moves A off itself: mu(A cap R^-1 A) = 0, correlation = mu(A)^2 = 1/16
    est = eg.correlation(Rotation(Fraction(1, 2)), 1, A, A, 10 ** 5)
    assert est.hits == 0
    assert est.estimate == pytest.approx(0.25 ** 2)
    assert eg.rotation_correlation(0.5, A, A) == pytest.approx(0.25 ** 2)


def test_identity_correlation():
    est = eg.correlation(Identity(), 3, A, A, 10 ** 5)
    assert est.hits == 10 ** 5 and est.ci == 0.0
    assert est.estimate == pytest.approx(0.25 - 0.25 ** 2)


@pytest.mark.parametrize("shift", [0.1, 0.37, 0.8])
def test_rotation_correlation_within_ci(shift):
    est = eg.correlation(Rotation(shift), 1, A, "0.2,0.9,0,0.5", 2 * 10 ** 5, seed=3)
    exact = eg.rotation_correlation(shift, A, "0.2,0.9,0,0.5")
    assert abs(est.estimate - exact) <= 3 * est.ci + 1e-12


def test_correlation_is_independent_of_workers():
    f = ConjugatedRotation(compose(Twist(2), AnalyticShear(3)), Fraction(1, 7))
    runs = [eg.correlation(f, 5, A, A, 150_000, seed=8, workers=w) for w in (1, 3, 8)]
    assert len({(r.hits, r.estimate) for r in runs}) == 1
    assert eg.correlations_csv(runs[:1]) == eg.correlations_csv(runs[1:2])


def test_correlation_needs_enough_samples():
    with pytest.raises(ValueError):
        eg.correlation(Identity(), 1, A, A, 100)


def test_csv_layout():
    est = eg.correlation(Identity(), 1, A, A, 10 ** 4, map_id="id")
    text = eg.correlations_csv([est])
    head, row, tail = text.split("\r\n")
    assert head == ",".join(eg.CSV_COLUMNS) and tail == ""
    assert row.startswith("id,1,")


def test_orbit_of_rotation_and_conjugated_rotation():
    th, r = eg.orbit(Rotation(0.25), (0.1, 0.4), 5)
    assert np.allclose(th, [0.1, 0.35, 0.6, 0.85, 0.1]) and np.all(r == 0.4)
    h = compose(Twist(2), AnalyticShear(3))
    f = ConjugatedRotation(h, Fraction(1, 6))
    th, r = eg.orbit(f, (0.3, 0.2), 7)
    # period 6 returns to the start
    assert th[6] == pytest.approx(th[0]) and r[6] == pytest.approx(r[0])
    # a generic map takes the stepping path
    th2, r2 = eg.orbit(Twist(1), (0.0, 0.5), 3)
    assert np.allclose(th2, [0.0, 0.5, 0.0])


def test_birkhoff_average_of_irrational_rotation():
    rect = "0,0.3,0,1"
    avg = eg.birkhoff_average(Rotation((5 ** 0.5 - 1) / 2), eg.indicator(rect), (0.0, 0.5),
                              20_000)
    assert avg == pytest.approx(0.3, abs=1e-3)
    with pytest.raises(ValueError):
        eg.birkhoff_average(Rotation(0.1), eg.indicator(rect), (0, 0), 0)


def test_jacobian_sweep():
    assert eg.jacobian_sweep(Rotation(0.3)) == 0.0
    assert eg.jacobian_sweep(Twist(5)) == 0.0
    assert eg.jacobian_sweep(AnalyticShear(8)) < 1e-12


def test_block_rng_streams():
    a = eg.block_rng(1, 0).random(4)
    assert np.array_equal(a, eg.block_rng(1, 0).random(4))
    assert not np.array_equal(a, eg.block_rng(1, 1).random(4))
    assert eg.run_blocks(lambda i, n: n, 100_001, workers=4) == 100_001
