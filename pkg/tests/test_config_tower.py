import json
from fractions import Fraction

import pytest

from akatower import analytic as an
from akatower.config import ConfigError, int_expr, load_config, parse_config, rational_expr
from akatower.tower import (TowerFormatError, build_tower, dumps, load, loads, save,
                            stage_parameters)


def test_int_expr():
    assert int_expr("2^24+1") == 2 ** 24 + 1
    assert int_expr("3*2**40 - 7") == 3 * 2 ** 40 - 7
    assert int_expr("-(5)") == -5
    for bad in ("2^-1", "2^(2^25)", "__import__('os')", "1.5", "2 +"):
        with pytest.raises(ConfigError):
            int_expr(bad)


def test_rational_expr():
    assert rational_expr("(2^24+1)/2^28") == Fraction(2 ** 24 + 1, 2 ** 28)
    assert rational_expr("6/8") == Fraction(3, 4)
    assert rational_expr("7") == 7
    with pytest.raises(ConfigError):
        rational_expr("1/2/3")
    with pytest.raises(ConfigError):
        rational_expr("1/0")


def test_config_defaults_by_regime():
    a = parse_config({"regime": "analytic", "alphas": ["1/16", "1/2^28"]})
    s = parse_config({"regime": "smooth", "alphas": ["1/4", "1/40"]})
    assert (a.conditions, a.surface, a.heights) == ("enforce", "torus", 64)
    assert (s.conditions, s.surface, s.heights) == ("advisory", "annulus", 33)


@pytest.mark.parametrize("data, message", [
    ({}, "empty configuration"),
    ({"regime": "smooth", "alphas": ["1/4", "1/40"], "colour": 1}, "unknown config key: colour"),
    ({"alphas": ["1/4", "1/40"]}, "missing config key: regime"),
    ({"regime": "quantum", "alphas": ["1/4", "1/40"]}, "regime"),
    ({"regime": "smooth", "alphas": ["1/4"]}, "at least two"),
    ({"regime": "smooth", "alphas": ["1/4", "1/40"], "conditions": "maybe"}, "conditions"),
    ({"regime": "smooth", "alphas": ["1/4", "1/40"], "tail_log": "lots"}, "tail_log"),
    ({"regime": "smooth", "alphas": ["1/4", "1/40"], "workers": 0}, "workers"),
])
def test_config_errors(data, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(data)


def test_load_config_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("")
    with pytest.raises(ConfigError, match="empty"):
        load_config(p)
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_config_json_round_trip():
    cfg = parse_config({"regime": "smooth", "alphas": ["1/4", "1/40", "1/1600"], "sigma": 0.5,
                        "seed": 7})
    again = parse_config(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg


def test_smooth_tower_round_trip(smooth_tower, tmp_path):
    path = tmp_path / "s.tower"
    save(smooth_tower, path)
    back = load(path)
    assert [stage_parameters(s) for s in back.stages] == \
           [stage_parameters(s) for s in smooth_tower.stages]
    assert back.sequence.entries == smooth_tower.sequence.entries
    assert [r.as_record() for r in back.ledger.rows] == \
           [r.as_record() for r in smooth_tower.ledger.rows]
    assert dumps(back) == dumps(smooth_tower)


def test_analytic_tower_round_trip(analytic_tower):
    back = loads(dumps(analytic_tower))
    st = back.stage(1)
    assert (st.b, st.m) == (2, analytic_tower.stage(1).m)
    assert not st.arithmetic_only


def test_arithmetic_only_stage_round_trip():
    cfg = parse_config({"regime": "analytic", "alphas": ["1/16", "(2^24+1)/2^28", "1/2^200"],
                        "conditions": "off"})
    tower = build_tower(cfg)
    assert [s.arithmetic_only for s in tower.stages] == [False, True]
    back = loads(dumps(tower))
    assert [stage_parameters(s) for s in back.stages] == [stage_parameters(s) for s in tower.stages]
    assert back.stage(2).arithmetic_only
    assert [s.n for s in back.float_stages] == [1]


def test_degenerate_stage_is_refused():
    cfg = parse_config({"regime": "analytic", "alphas": ["1/4", "1/4096"]})
    with pytest.raises(an.DegenerateStageError):
        build_tower(cfg)


def test_enforced_analytic_build_refuses_without_two_entries():
    cfg = parse_config({"regime": "analytic", "alphas": ["1/16", "(2^24+1)/2^28"]})
    with pytest.raises(ArithmeticError):
        build_tower(cfg)


@pytest.mark.parametrize("text, message", [
    ("", "not a version-1"),
    ("akatower-tower 2\nend\n", "not a version-1"),
    ("akatower-tower 1\nconfig {}\n", "truncated"),
    ("akatower-tower 1\nend\n", "missing config"),
    ("akatower-tower 1\nwhat 1\nend\n", "unknown record"),
    ("akatower-tower 1\nconfig {\"regime\": 1}\nend\n", "bad config"),
])
def test_bad_tower_files(text, message):
    with pytest.raises(TowerFormatError, match=message):
        loads(text)


def test_stage_record_width(smooth_tower):
    text = dumps(smooth_tower).replace("stage 1 1 4 ", "stage 1 1 4 9 ", 1)
    with pytest.raises(TowerFormatError, match="9 fields"):
        loads(text)
