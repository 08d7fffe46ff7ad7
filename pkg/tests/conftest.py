"""Shared fixtures: stages that are expensive enough to build once per session."""

from fractions import Fraction

import pytest

from akatower import analytic as an
from akatower import arithmetic as ar
from akatower import smooth as sm
from akatower.config import parse_config
from akatower.tower import build_tower

SMOOTH_ALPHAS = ["1/4", "1/40", "1/1600"]
ANALYTIC_NEXT = Fraction(2 ** 24 + 1, 2 ** 28)


@pytest.fixture(scope="session")
def smooth_stages():
    seq = ar.ApproximationSequence(SMOOTH_ALPHAS, regime="smooth", sigma=0.5)
    return sm.build_smooth_tower(seq, 0.5)


@pytest.fixture(scope="session")
def analytic_stage():
    return an.build_stage(1, Fraction(1, 16), ANALYTIC_NEXT, 0.25)


@pytest.fixture(scope="session")
def smooth_tower():
    cfg = parse_config({"regime": "smooth", "alphas": SMOOTH_ALPHAS, "sigma": 0.5})
    return build_tower(cfg)


@pytest.fixture(scope="session")
def analytic_tower():
    cfg = parse_config({"regime": "analytic", "alphas": ["1/16", "(2^24+1)/2^28"],
                        "sigma": 0.25, "conditions": "off"})
    return build_tower(cfg)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """``acceptance(number, ok, detail)`` records one line for the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
