"""Command line entry point: ``akatower build|verify|mix|render|report``.

Exit status: 0 success, 1 verification failure (or a build refused by the
conditions), 2 usage, configuration or file-format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def _load_tower(path: Optional[str]):
    from .tower import TowerFormatError, load

    if not path:
        raise UsageError("--tower is required")
    try:
        return load(path)
    except TowerFormatError as exc:
        raise UsageError(str(exc)) from exc


def _stage(tower, n: Optional[int]):
    stages = tower.float_stages
    if not stages:
        raise UsageError("the tower has no float-evaluable stage")
    if n is None:
        return stages[-1]
    for s in stages:
        if s.n == n:
            return s
    raise UsageError(f"stage {n} is not a float-evaluable stage of this tower")


def ledger_csv(ledger) -> str:
    buf = io.StringIO()
    cols = ["stage", "condition", "lhs", "relation", "rhs", "holds", "required", "note"]
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for r in ledger.rows:
        rec = r.as_record()
        w.writerow(["true" if v is True else "false" if v is False else v
                    for v in (rec[c] for c in cols)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_build(args) -> int:
    from .analytic import ConditionViolation, DegenerateStageError
    from .tower import build_tower, save

    if not args.config:
        raise UsageError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    try:
        tower = build_tower(cfg)
    except DegenerateStageError as exc:
        print(f"error: degenerate stage: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConditionViolation, ArithmeticError, ValueError) as exc:
        print(f"error: build refused: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = args.out or str(Path(args.config).with_suffix(".tower"))
    save(tower, out)
    ledger_path = args.ledger or out + ".ledger.csv"
    Path(ledger_path).write_text(ledger_csv(tower.ledger), newline="")
    print(f"wrote {out} ({len(tower.stages)} stages) and {ledger_path}")
    bad = tower.ledger.violations()
    for r in bad:
        print(f"violation: stage {r.stage} {r.condition}: {r.fmt(r.lhs)} {r.relation} "
              f"{r.fmt(r.rhs)} {r.note}".rstrip(), file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_verify(args) -> int:
    from . import suites

    tower = _load_tower(args.tower)
    if args.seed is not None:
        tower.config.seed = args.seed
    if args.suite not in suites.SUITES + ("all",):
        raise UsageError(f"unknown suite {args.suite!r}")
    results = suites.run(tower, args.suite)
    if args.suite == "all" and args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for r in results:
            (d / f"{r.name}.csv").write_text(r.csv(), newline="")
    else:
        _emit("".join(r.csv() for r in results), args.out)
    for r in results:
        for note in r.notes:
            print(f"note: {note}", file=sys.stderr)
        print(f"{r.name}: {'pass' if r.ok else 'FAIL'} ({len(r.rows)} rows)", file=sys.stderr)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def cmd_mix(args) -> int:
    from .ergodic import correlation, correlations_csv

    tower = _load_tower(args.tower)
    st = _stage(tower, args.stage)
    seed = tower.config.seed if args.seed is None else args.seed
    samples = args.samples or tower.config.samples
    powers = args.power or [1, st.m]
    try:
        rows = [correlation(st.f, p, args.A, args.B, samples, seed, args.workers,
                            map_id=f"f_{st.n}") for p in powers]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(correlations_csv(rows), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    from . import render, suites

    tower = _load_tower(args.tower)
    st = _stage(tower, args.stage)
    seed = tower.config.seed if args.seed is None else args.seed
    if not args.out:
        raise UsageError("--out is required")
    if args.what == "atoms":
        img = render.render_atoms(suites.decomposition(st, tower.config.heights), args.size,
                                  workers=args.workers)
    elif args.what == "images":
        img = render.render_images(st.Phi, suites.decomposition(st, tower.config.heights),
                                   args.size, workers=args.workers)
    else:
        starts = render.seeded_starts(16, seed, st.f.surface)
        length = max(1, (args.samples or 64_000) // len(starts))
        img = render.render_orbit(st.f, starts, length, args.size, args.workers)
    render.write_ppm(img, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    tower = _load_tower(args.tower)
    lines = [f"regime: {tower.regime}", f"sigma: {tower.config.sigma}",
             f"sequence entries: {len(tower.sequence)}", "",
             "stage  q_n (digits)  b_n  m_n  mode"]
    for s in tower.stages:
        q = s.q
        digits = len(str(q)) if q.bit_length() < 10_000 else f"~{int(q.bit_length() * 0.30103)}"
        mode = "arithmetic-only" if getattr(s, "arithmetic_only", False) else "float"
        qs = str(q) if q.bit_length() < 64 else f"({digits} digits)"
        lines.append(f"{s.n:>5}  {qs}  {s.b if s.b is not None else '-'}  {s.m if s.m.bit_length() < 64 else '(huge)'}  {mode}")
    lines += ["", "condition ledger:"]
    for r in tower.ledger.rows:
        mark = "ok  " if r.holds else ("FAIL" if r.required else "adv ")
        lines.append(f"  [{mark}] stage {r.stage} {r.condition}: {r.fmt(r.lhs)} {r.relation} "
                     f"{r.fmt(r.rhs)}")
    bad = tower.ledger.violations()
    lines += ["", f"required violations: {len(bad)}"]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="akatower",
                                description="Finite stages of conjugation towers and their checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{build,verify,mix,render,report}")

    def common(sp, tower=True):
        if tower:
            sp.add_argument("--tower", help="tower file written by 'build'")
        sp.add_argument("--out", help="output path (default: stdout where sensible)")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--workers", type=int, default=1, help="worker threads")
        return sp

    b = common(sub.add_parser("build", help="build a tower from a JSON config"), tower=False)
    b.add_argument("--config", help="JSON configuration")
    b.add_argument("--ledger", help="ledger CSV path (default: <out>.ledger.csv)")
    b.set_defaults(func=cmd_build)

    v = common(sub.add_parser("verify", help="run verification suites"))
    v.add_argument("--suite", default="all",
                   help="stretch | distribution | criterion | jacobian | all")
    v.set_defaults(func=cmd_verify)

    m = common(sub.add_parser("mix", help="correlation estimates for f_n"))
    m.add_argument("--stage", type=int)
    m.add_argument("--A", default="0,0.5,0.25,0.75", help="rectangle t0,t1,r0,r1")
    m.add_argument("--B", default="0,0.5,0.25,0.75", help="rectangle t0,t1,r0,r1")
    m.add_argument("--samples", type=int)
    m.add_argument("--power", type=int, action="append", help="iterate (repeatable; default 1 and m_n)")
    m.set_defaults(func=cmd_mix)

    r = common(sub.add_parser("render", help="write a PPM picture"))
    r.add_argument("--what", choices=("atoms", "images", "orbit"), default="atoms")
    r.add_argument("--stage", type=int)
    r.add_argument("--size", type=int, default=1024)
    r.add_argument("--samples", type=int, help="orbit points in total")
    r.set_defaults(func=cmd_render)

    rep = common(sub.add_parser("report", help="summarise a tower and its ledger"))
    rep.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
