import pytest

from akatower import suites


def test_analytic_criterion_suite(analytic_tower):
    res = suites.criterion_suite(analytic_tower)
    names = {r[1]: r for r in res.rows}
    assert res.ok
    assert names["mixing index"][5] is True
    assert names["atoms distributed"][2] == names["atoms distributed"][4]
    d0 = next(r for r in res.rows if r[1].startswith("d0"))
    assert "vacuous" in d0[6]


def test_smooth_criterion_suite_reports_honest_failures(smooth_tower):
    res = suites.criterion_suite(smooth_tower)
    failed = {(r[0], r[1]) for r in res.rows if r[5] is False}
    # the demo tower is far too small for the derivative and d0 conditions;
    # the distribution and arithmetic rows hold
    assert failed == {(1, "d0(f^4, f_1^4)"), (2, "||DH_{n-1}||_0 < ln q_n")}
    assert not res.ok
    assert all(r[5] for r in res.rows if r[1] in ("atoms distributed", "mixing index",
                                                  "coverage trend"))


def test_distribution_suite_smooth(smooth_tower):
    res = suites.distribution_suite(smooth_tower)
    assert res.ok and len(res.rows) == 264 + 2640
    assert res.csv().startswith("stage,atom_id,gamma,delta,eps")


def test_stretch_suite_skips_smooth_stages(smooth_tower):
    res = suites.stretch_suite(smooth_tower)
    assert res.ok and not res.rows and len(res.notes) == 2


def test_run_rejects_unknown_suite(smooth_tower):
    with pytest.raises(ValueError):
        suites.run(smooth_tower, "nonsense")
