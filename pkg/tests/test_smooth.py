from fractions import Fraction

import numpy as np
import pytest

from akatower import arithmetic as ar
from akatower import smooth as sm
from akatower import standard_map as smp


@pytest.fixture(scope="module")
def phi():
    return sm.standard_map(1 / 3)


def test_standard_map_inverts(phi):
    x, y = np.random.default_rng(0).uniform(-1, 1, (2, 2000))
    u, v = phi.inverse(*phi.forward(x, y))
    assert np.abs(u - x).max() < 1e-9 and np.abs(v - y).max() < 1e-9


def test_standard_map_is_quarter_turn_in_the_core(phi):
    eps = phi.epsilon
    x, y = np.random.default_rng(1).uniform(-(1 - 2 * eps), 1 - 2 * eps, (2, 2000))
    u, v = phi.forward(x, y)
    assert np.abs(u - y).max() < 1e-9 and np.abs(v + x).max() < 1e-9


def test_standard_map_det_with_tower_steps(phi):
    assert phi.det_sweep(48) < 1e-3


def test_standard_map_parameters():
    with pytest.raises(ValueError):
        smp.standard_params(0.5)
    with pytest.raises(ValueError, match="moser_steps"):
        smp.build_standard_map(1 / 3, moser_steps=8)
    k = smp.gauge_exponent(1 / 3)
    assert k % 2 == 0 and k >= 4


def test_one_form_primitive_is_rejected_by_the_quality_gate():
    # the direct one-form circulates strongly and its finite-difference
    # determinant is far from 1; the builder must refuse it
    with pytest.raises(smp.CorrectorQualityError):
        smp.build_standard_map(1 / 3, moser_steps=64, primitive="one_form")
    with pytest.raises(ValueError, match="primitive"):
        smp.build_standard_map(1 / 3, primitive="other")


def test_a_n_and_stage_parameters(smooth_stages):
    s1, s2 = smooth_stages
    assert (s1.b, s1.m, s2.b, s2.m) == (2, 4, 12, 19)
    for st in smooth_stages:
        assert abs(st.a) <= Fraction(1, st.alpha_next.denominator)
        # a_n = m_n alpha_{n+1} - 1/(2 q_n) modulo 1/q_n
        d = st.m * st.alpha_next - Fraction(1, 2 * st.q) - st.a
        assert (d * st.q).denominator == 1
        assert sm.shifted_inclusion(st)


def test_growth_is_enforced():
    with pytest.raises(ArithmeticError, match="growth"):
        sm.build_smooth_stage(1, "1/4", "1/39", 0.5)


def test_eta_measure_matches_decomposition(smooth_stages):
    for st in smooth_stages:
        dec = sm.build_eta_smooth(st)
        assert dec.coverage() == pytest.approx(float(sm.exact_eta_measure(st.q, st.n)), rel=1e-12)
        assert set(dec.kinds) == {"I", "Ibar"}
        assert dec.heights[0] == pytest.approx(1 / (3 * st.n))


def test_collar_and_commutation(smooth_stages):
    for st in smooth_stages:
        assert sm.collar_error(st) < 1e-12
        assert sm.smooth_commutation_error(st) < 1e-9


def test_phi_is_identity_on_the_right_half(smooth_stages):
    st = smooth_stages[0]
    rng = np.random.default_rng(3)
    j = rng.integers(0, st.q, 500)
    th = (j + 0.5 + 0.5 * rng.random(500)) / st.q
    r = rng.random(500)
    u, v = st.phi.forward(th, r)
    assert np.array_equal(u, th) and np.array_equal(v, r)


def test_conjugated_rotation_distance_bound():
    # a twist commutes with rotations, so the distance is exactly |a - b|
    from akatower.maps import Twist
    res = sm.conjugated_rotation_distance_check(Twist(3), 0.1, 0.1004)
    assert res["ok"] and res["lhs"] == pytest.approx(4e-4)
    assert res["norm"] >= 3


def test_max_entry_derivative_of_twist():
    from akatower.maps import Twist
    assert sm.max_entry_derivative(Twist(7)) == pytest.approx(7)


def test_norm_provider_shapes():
    provide = sm.norm_provider(0.5, samples=64)
    est = provide(1, [Fraction(1, 4)])
    assert est["dh_prev"] == 1.0 and est["norm_1"] >= 1.0
    assert ar.default_k(1) == 1
