import csv
import io
import json

import pytest

from akatower.cli import main
from akatower.render import read_ppm
from akatower.tower import load, save

SMOOTH = {"regime": "smooth", "alphas": ["1/4", "1/40", "1/1600"], "sigma": 0.5}


@pytest.fixture
def smooth_file(smooth_tower, tmp_path):
    path = tmp_path / "s.tower"
    save(smooth_tower, path)
    return path


@pytest.fixture
def analytic_file(analytic_tower, tmp_path):
    path = tmp_path / "a.tower"
    save(analytic_tower, path)
    return path


def _write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data) if isinstance(data, dict) else data)
    return str(p)


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["build"]) == 2
    assert main(["build", "--config", _write(tmp_path, "e.json", "")]) == 2
    assert main(["build", "--config", _write(tmp_path, "k.json", {**SMOOTH, "x": 1})]) == 2
    assert "unknown config key: x" in capsys.readouterr().err
    assert main(["report", "--tower", str(tmp_path / "none.tower")]) == 2
    assert main(["report"]) == 2
    garbage = tmp_path / "g.tower"
    garbage.write_text("hello\n")
    assert main(["report", "--tower", str(garbage)]) == 2


def test_build_writes_tower_and_ledger(tmp_path, capsys):
    cfg = _write(tmp_path, "s.json", SMOOTH)
    assert main(["build", "--config", cfg]) == 0
    tower = load(tmp_path / "s.tower")
    assert [(s.n, s.b, s.m) for s in tower.stages] == [(1, 2, 4), (2, 12, 19)]
    rows = list(csv.reader(io.StringIO((tmp_path / "s.tower.ledger.csv").read_bytes().decode())))
    assert rows[0][:3] == ["stage", "condition", "lhs"]
    assert len(rows) == 1 + len(tower.ledger.rows)


def test_build_refusals(tmp_path, capsys):
    assert main(["build", "--config",
                 _write(tmp_path, "d.json", {"regime": "analytic", "alphas": ["1/4", "1/4096"]})]) == 1
    assert "degenerate stage" in capsys.readouterr().err
    cfg = _write(tmp_path, "p.json", {"regime": "analytic", "alphas": ["1/16", "(2^24+1)/2^28"]})
    assert main(["build", "--config", cfg]) == 1
    enforced = _write(tmp_path, "g.json", {**SMOOTH, "alphas": ["1/4", "1/39"],
                                           "conditions": "off"})
    assert main(["build", "--config", enforced]) == 1


def test_verify_jacobian_and_suite_names(smooth_file, tmp_path, capsys):
    out = tmp_path / "jac.csv"
    assert main(["verify", "--tower", str(smooth_file), "--suite", "jacobian",
                 "--out", str(out)]) == 0
    text = out.read_bytes().decode()
    assert text.startswith("stage,map,max_abs_det_minus_1,tolerance,pass\r\n")
    assert text.count("\r\n") == 1 + 2 * 4
    assert main(["verify", "--tower", str(smooth_file), "--suite", "nope"]) == 2


def test_verify_detects_tampered_mixing_index(analytic_file, tmp_path):
    text = analytic_file.read_text().splitlines()
    for i, ln in enumerate(text):
        if ln.startswith("stage 1 "):
            f = ln.split()
            f[7] = str(int(f[7]) + 1)
            text[i] = " ".join(f)
    bad = tmp_path / "bad.tower"
    bad.write_text("\n".join(text) + "\n")
    out = tmp_path / "crit.csv"
    assert main(["verify", "--tower", str(bad), "--suite", "criterion", "--out", str(out)]) == 1
    rows = [r for r in csv.reader(io.StringIO(out.read_bytes().decode()))
            if r[1] == "mixing index"]
    assert rows and rows[0][5] == "false"


def test_mix_defaults_and_errors(smooth_file, tmp_path):
    out = tmp_path / "mix.csv"
    assert main(["mix", "--tower", str(smooth_file), "--samples", "20000", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_bytes().decode())))
    assert rows[0] == ["map_id", "power", "A", "B", "samples", "estimate", "ci", "seed"]
    assert [r[1] for r in rows[1:]] == ["1", "19"] and rows[1][0] == "f_2"
    assert main(["mix", "--tower", str(smooth_file), "--samples", "50"]) == 2
    assert main(["mix", "--tower", str(smooth_file), "--stage", "9", "--samples", "20000"]) == 2
    assert main(["mix", "--tower", str(smooth_file), "--A", "0,2,0,1", "--samples", "20000"]) == 2
    assert main(["mix", "--tower", str(smooth_file), "--workers", "0"]) == 2


def test_render_outputs(smooth_file, tmp_path):
    for what in ("atoms", "images", "orbit"):
        out = tmp_path / f"{what}.ppm"
        assert main(["render", "--tower", str(smooth_file), "--what", what, "--stage", "1",
                     "--size", "64", "--samples", "2000", "--out", str(out)]) == 0
        assert read_ppm(out).shape == (64, 64, 3)
    assert main(["render", "--tower", str(smooth_file)]) == 2


def test_report(smooth_file, tmp_path, capsys):
    assert main(["report", "--tower", str(smooth_file)]) == 0
    out = capsys.readouterr().out
    assert "regime: smooth" in out and "required violations: 0" in out
    assert "condition ledger:" in out
