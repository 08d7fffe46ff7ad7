"""Building a tower from a configuration, and its plain-text serialization.

File format (version 1), one record per line::

    akatower-tower 1
    config {"regime": "smooth", ...}
    alpha <index> <numerator> <denominator>
    stage <n> <p_n> <q_n> <p_next> <q_next> <b_n> <m_n> <a_num> <a_den>
    ledger <stage> <holds> <required> <json record>
    end

Integers are written in decimal, converted through gmpy2 because the
denominators of analytic towers can have millions of digits.  Loading uses
the stored stage parameters as they are; nothing is recomputed, so an edited
file is caught by verification rather than silently repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import gmpy2

from . import analytic as an
from . import arithmetic as ar
from . import smooth as sm
from .config import ConfigError, TowerConfig, parse_config

FORMAT = "akatower-tower"
VERSION = 1
NONE = "-"


class TowerFormatError(ValueError):
    """Unreadable or inconsistent tower file."""


@dataclass
class Tower:
    config: TowerConfig
    sequence: ar.ApproximationSequence
    ledger: ar.ConditionLedger
    stages: list = field(default_factory=list)

    @property
    def regime(self) -> str:
        return self.config.regime

    def stage(self, n: int):
        for s in self.stages:
            if s.n == n:
                return s
        raise KeyError(f"tower has no stage {n}")

    @property
    def float_stages(self) -> list:
        return [s for s in self.stages if not getattr(s, "arithmetic_only", False)]


def _sequence(cfg: TowerConfig) -> ar.ApproximationSequence:
    return ar.ApproximationSequence(list(cfg.fractions), cfg.target, cfg.regime, cfg.sigma,
                                    cfg.delta, cfg.tail_log)


def build_tower(cfg: TowerConfig) -> Tower:
    """Condition ledger plus stages for ``cfg``.

    ``conditions = "enforce"`` builds on the subsequence accepted by the
    ledger; ``"advisory"`` keeps every entry and only records the rows;
    ``"off"`` skips the ledger.  Raises
    :class:`akatower.analytic.DegenerateStageError` when an analytic stage's
    bad set covers the circle.
    """
    seq = _sequence(cfg)
    if cfg.regime == "analytic":
        for i, a in enumerate(seq.entries[:-1], start=1):
            if a.denominator <= an.FLOAT_Q_LIMIT:
                an.build_Bn(a.denominator)
    ledger = ar.ConditionLedger()
    mode = cfg.conditions
    if mode != "off":
        if cfg.regime == "analytic":
            accepted, ledger = ar.enforce_analytic_conditions(
                seq, cfg.sigma, cfg.rho, an.bound_provider(cfg.rho, cfg.sigma), delta=cfg.delta)
        else:
            accepted, ledger = ar.enforce_smooth_conditions(
                seq, norm_estimates=sm.norm_provider(cfg.sigma, cfg.surface, seed=cfg.seed,
                                                     moser_steps=cfg.moser_steps),
                required=mode == "enforce")
        if mode == "enforce":
            seq = accepted
    if len(seq) < 2:
        raise ArithmeticError("fewer than two accepted sequence entries; no stage can be built")
    stages_n = min(cfg.stages, len(seq) - 1) if cfg.stages else None
    if cfg.regime == "analytic":
        stages = an.build_tower(seq, cfg.sigma, cfg.rho, stages=stages_n)
    else:
        stages = sm.build_smooth_tower(seq, cfg.sigma, cfg.surface, cfg.moser_steps,
                                       stages=stages_n)
    return Tower(cfg, seq, ledger, stages)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _int(v: int) -> str:
    return gmpy2.mpz(v).digits(10)


def _parse_int(s: str) -> int:
    try:
        return int(gmpy2.mpz(s, 10))
    except ValueError as exc:
        raise TowerFormatError(f"not an integer: {s[:40]!r}") from exc


def dumps(tower: Tower) -> str:
    lines = [f"{FORMAT} {VERSION}", "config " + json.dumps(tower.config.to_json(), sort_keys=True)]
    for i, a in enumerate(tower.sequence.entries, start=1):
        lines.append(f"alpha {i} {_int(a.numerator)} {_int(a.denominator)}")
    for s in tower.stages:
        a = getattr(s, "a", None)
        an_ = f"{_int(a.numerator)} {_int(a.denominator)}" if a is not None else f"{NONE} {NONE}"
        b = _int(s.b) if s.b is not None else NONE
        lines.append(f"stage {s.n} {_int(s.p)} {_int(s.q)} {_int(s.alpha_next.numerator)} "
                     f"{_int(s.alpha_next.denominator)} {b} {_int(s.m)} {an_}")
    for r in tower.ledger.rows:
        rec = r.as_record()
        lines.append(f"ledger {r.stage} {int(bool(r.holds))} {int(bool(r.required))} "
                     + json.dumps(rec, sort_keys=True))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save(tower: Tower, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(tower))


def loads(text: str) -> Tower:
    lines = text.splitlines()
    if not lines or lines[0].split() != [FORMAT, str(VERSION)]:
        raise TowerFormatError(f"not a version-{VERSION} tower file")
    if lines[-1] != "end":
        raise TowerFormatError("truncated tower file (missing 'end')")
    cfg: Optional[TowerConfig] = None
    alphas: dict[int, Fraction] = {}
    rows: list[list[str]] = []
    ledger = ar.ConditionLedger()
    for ln in lines[1:-1]:
        key, _, rest = ln.partition(" ")
        if key == "config":
            try:
                cfg = parse_config(json.loads(rest))
            except (json.JSONDecodeError, ConfigError) as exc:
                raise TowerFormatError(f"bad config record: {exc}") from exc
        elif key == "alpha":
            i, p, q = rest.split()
            alphas[int(i)] = Fraction(_parse_int(p), _parse_int(q))
        elif key == "stage":
            rows.append(rest.split())
        elif key == "ledger":
            st, holds, req, rec = rest.split(" ", 3)
            d = json.loads(rec)
            ledger.add(ar.ConditionRow(int(st), d["condition"], d["lhs"], d["rhs"], holds == "1",
                                       d["relation"], req == "1", d.get("note", "")))
        else:
            raise TowerFormatError(f"unknown record {key!r}")
    if cfg is None:
        raise TowerFormatError("missing config record")
    entries = [alphas[i] for i in sorted(alphas)]
    seq = ar.ApproximationSequence(entries, cfg.target, cfg.regime, cfg.sigma, cfg.delta,
                                   cfg.tail_log)
    stages = []
    prev = None
    for row in rows:
        if len(row) != 9:
            raise TowerFormatError("stage record needs 9 fields")
        n = int(row[0])
        alpha_n = Fraction(_parse_int(row[1]), _parse_int(row[2]))
        alpha_next = Fraction(_parse_int(row[3]), _parse_int(row[4]))
        b = None if row[5] == NONE else _parse_int(row[5])
        m = _parse_int(row[6])
        if cfg.regime == "analytic":
            only = alpha_n.denominator > an.FLOAT_Q_LIMIT or (prev is not None and prev.arithmetic_only)
            prev = an.AnalyticStage(n, alpha_n, alpha_next, cfg.sigma, cfg.rho, b, m, prev,
                                    arithmetic_only=only)
        else:
            a = Fraction(_parse_int(row[7]), _parse_int(row[8]))
            prev = sm.SmoothStage(n, alpha_n, alpha_next, cfg.sigma, b, m, a, prev,
                                  cfg.surface, cfg.moser_steps)
        stages.append(prev)
    return Tower(cfg, seq, ledger, stages)


def load(path: Union[str, Path]) -> Tower:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TowerFormatError(f"cannot read tower {path}: {exc.strerror}") from exc
    return loads(text)


def stage_parameters(stage) -> tuple:
    """Exact per-stage parameters (used for round-trip comparisons)."""
    return (stage.n, stage.p, stage.q, stage.alpha_next, stage.b, stage.m, getattr(stage, "a", None))
