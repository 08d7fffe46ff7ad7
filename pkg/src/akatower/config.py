"""JSON tower configurations.

Example::

    {
      "regime": "smooth",
      "alphas": ["1/4", "1/40", "1/1600", "1/144000"],
      "sigma": 0.5,
      "seed": 0
    }

Rational entries are strings ``"p/q"`` whose numerator and denominator may
be small integer expressions such as ``"2^24+1"`` or ``"3*2^40"``, so
huge denominators can be written compactly.
"""

from __future__ import annotations

import ast
import json
import operator
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import mpmath


class ConfigError(ValueError):
    """Invalid configuration (maps to exit status 2 in the CLI)."""


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Pow: operator.pow}


def int_expr(text: Union[str, int]) -> int:
    """Evaluate an integer expression built from literals, ``+ - *`` and ``^``/``**``."""
    if isinstance(text, int):
        return text

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow) and (right < 0 or right > 1 << 24):
                raise ConfigError(f"exponent out of range in {text!r}")
            return _OPS[type(node.op)](left, right)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ConfigError(f"unsupported integer expression {text!r}")

    try:
        return ev(ast.parse(str(text).strip().replace("^", "**"), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse integer expression {text!r}") from exc


def rational_expr(text: Union[str, int]) -> Fraction:
    """``"p/q"`` with integer-expression parts, or a plain integer expression."""
    if isinstance(text, int):
        return Fraction(text)
    s = str(text)
    depth = 0
    cut = -1
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "/" and depth == 0:
            if cut >= 0:
                raise ConfigError(f"more than one '/' in {text!r}")
            cut = i
    if cut < 0:
        return Fraction(int_expr(s))
    q = int_expr(s[cut + 1:])
    if q == 0:
        raise ConfigError(f"zero denominator in {text!r}")
    return Fraction(int_expr(s[:cut]), q)


@dataclass
class TowerConfig:
    regime: str
    alphas: list
    sigma: float = 0.25
    rho: float = 0.01
    delta: Optional[float] = None
    tail_log: Optional[str] = None
    target: Optional[str] = None
    stages: Optional[int] = None
    conditions: Optional[str] = None
    surface: Optional[str] = None
    heights: Optional[int] = None
    moser_steps: int = 16
    seed: int = 0
    samples: int = 10 ** 5
    workers: int = 1
    resolution: int = 1000
    family_random: int = 32

    fractions: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.regime not in ("analytic", "smooth"):
            raise ConfigError(f"regime must be 'analytic' or 'smooth', not {self.regime!r}")
        if not isinstance(self.alphas, list) or len(self.alphas) < 2:
            raise ConfigError("alphas must list at least two rationals")
        self.fractions = [rational_expr(a) for a in self.alphas]
        if self.conditions is None:
            # the smooth convergence inequalities are out of reach at desk scale, so
            # they are recorded rather than enforced unless asked for
            self.conditions = "enforce" if self.regime == "analytic" else "advisory"
        if self.conditions not in ("enforce", "advisory", "off"):
            raise ConfigError("conditions must be 'enforce', 'advisory' or 'off'")
        if self.surface is None:
            self.surface = "torus" if self.regime == "analytic" else "annulus"
        if self.surface not in ("torus", "annulus"):
            raise ConfigError(f"unknown surface {self.surface!r}")
        if self.heights is None:
            self.heights = 64 if self.regime == "analytic" else 33
        if self.tail_log is not None:
            try:
                mpmath.mpf(str(self.tail_log))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"tail_log is not a number: {self.tail_log!r}") from exc
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("fractions")
        return d


KEYS = {f.name for f in fields(TowerConfig)} - {"fractions"}


def parse_config(data: dict) -> TowerConfig:
    if not isinstance(data, dict) or not data:
        raise ConfigError("empty configuration")
    unknown = sorted(set(data) - KEYS)
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    for req in ("regime", "alphas"):
        if req not in data:
            raise ConfigError(f"missing config key: {req}")
    try:
        return TowerConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Union[str, Path]) -> TowerConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    if not text.strip():
        raise ConfigError("empty configuration")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(data)
