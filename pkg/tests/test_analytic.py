import math
from fractions import Fraction

import numpy as np
import pytest

from akatower import analytic as an
from akatower import arithmetic as ar


def test_bad_set_geometry(analytic_stage):
    bad = an.build_Bn(analytic_stage)
    q = 16
    assert bad.measure == pytest.approx(2 * q ** -0.5)
    gaps = bad.gaps()
    assert len(gaps) == 2 * q
    mid = np.array([(a + b) / 2 for a, b in gaps])
    assert not bad.contains(mid).any()
    assert bad.contains(np.arange(2 * q) / (2 * q)).all()


def test_bad_set_degenerate_for_small_q():
    with pytest.raises(an.DegenerateStageError):
        an.build_Bn(4)
    an.build_Bn(5)


def test_psi_derivatives_match_finite_differences(analytic_stage):
    th = np.random.default_rng(0).random(200)
    h = 1e-8
    v, d1, d2 = an.psi_n(analytic_stage, th)
    vp, d1p, _ = an.psi_n(analytic_stage, th + h)
    vm, d1m, _ = an.psi_n(analytic_stage, th - h)
    assert np.allclose((vp - vm) / (2 * h), d1, rtol=1e-5, atol=1e-3 * np.abs(d1).max())
    assert np.allclose((d1p - d1m) / (2 * h), d2, rtol=1e-5, atol=1e-3 * np.abs(d2).max())


def test_psi_is_the_vertical_displacement_of_Phi(analytic_stage):
    # Phi_n moves (theta, r) to (theta + shift, r + psi_n(theta))
    th, r = np.random.default_rng(1).random((2, 300))
    u, v = analytic_stage.Phi.forward(th, r)
    psi = an.psi_n(analytic_stage, th)[0]
    assert np.abs(ar.to_float_mod1(analytic_stage.shift) - np.mod(u - th, 1.0)).max() < 1e-9
    assert np.abs(np.mod(v - r - psi + 0.5, 1.0) - 0.5).max() < 1e-6


def test_stage_invariants(analytic_stage):
    st = analytic_stage
    assert (st.q, st.b) == (16, 2)
    assert st.residual < Fraction(st.q, st.alpha_next.denominator)
    assert an.commutation_error(st) < 1e-9
    th, r = np.random.default_rng(2).random((2, 500))
    for mp in (st.h, st.H, st.f, st.Phi):
        assert np.abs(mp.det(th, r) - 1).max() < 1e-9
    gamma, delta, eps = st.targets()
    assert gamma == pytest.approx(1 / 2) and delta == eps == 1.0


def test_eta_atoms_are_short_and_disjoint(analytic_stage):
    dec = an.build_eta_analytic(analytic_stage, 8)
    assert dec.max_length() <= 16 ** -2.5 * (1 + 1e-9)
    order = np.argsort(dec.lo)
    assert np.all(dec.lo[order][1:] >= dec.hi[order][:-1])
    bad = an.build_Bn(analytic_stage)
    assert not bad.contains((dec.lo + dec.hi) / 2).any()
    assert len(dec) == dec.n_intervals * 8


def test_shear_derivative_check_bounds(analytic_stage):
    res = an.shear_derivative_check(analytic_stage, 5000)
    assert res["inf_dpsi"] >= res["dpsi_bound"]
    assert res["sup_ddpsi"] <= res["ddpsi_bound"]
    assert res["inf_sin"] >= res["sin_bound"] * 0.999


def test_arithmetic_only_stage_refuses_floats():
    st = an.build_stage(1, Fraction(1, 8192), Fraction(1, 2 ** 100), 0.25)
    assert st.arithmetic_only
    with pytest.raises(RuntimeError):
        st.Phi


def test_build_stage_refuses_ledger_violation():
    ledger = ar.ConditionLedger()
    ledger.add(ar.ConditionRow(1, "P2", 1, 2, False, ">="))
    with pytest.raises(an.ConditionViolation, match="P2"):
        an.build_stage(1, "1/16", Fraction(1, 2 ** 28), 0.25, ledger=ledger)


def test_convergence_bound_rows():
    row = an.verify_convergence_bound((1, 32, 0.9), log_dist=-1e6, rho_prev=0.01)
    assert row.condition == "convergence chain" and row.holds
    row = an.verify_convergence_bound((1, 32, 0.9), distance=Fraction(1, 10 ** 6), rho_prev=0.01)
    assert not row.holds
    with pytest.raises(ValueError):
        an.verify_convergence_bound((1, 32, 0.9))


def test_convergence_chain_is_monotone_in_distance():
    a = an.convergence_chain_log(1, 32, 0.9, 0.01, -100)
    b = an.convergence_chain_log(1, 32, 0.9, 0.01, -200)
    assert a - b == pytest.approx(100)


def test_strip_and_jacobian_bounds_grow():
    prefix = [(1, 32, None), (2, 2 ** 40, None)]
    rhos = an.strip_norm_bound(prefix, 0.01, 0.9)
    # rho_0 followed by the widths after each stage
    assert len(rhos) == 3 and rhos[0] == 0.01 and rhos[0] < rhos[1] < rhos[2]
    jb = an.jacobian_bounds(prefix[:1], 0.01, 0.9)
    assert jb["p4"] >= 1 and jb["p3"] >= 1
    assert math.isfinite(float(jb["p4"]))
