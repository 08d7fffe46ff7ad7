"""Verification suites run by ``akatower verify`` (and by the tests).

Each suite returns a :class:`SuiteResult`: CSV-ready rows plus an overall
pass flag.  Arithmetic-only stages have no float maps and are skipped by the
numerical suites; their inequalities live in the condition ledger.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from . import analytic as an
from . import arithmetic as ar
from . import criteria as cr
from . import smooth as sm
from .ergodic import jacobian_sweep
from .tower import Tower

SUITES = ("stretch", "distribution", "criterion", "jacobian")

#: ``k`` demanded of psi_n on an eta_n atom: its image has length one, and
#: the stretch must reach at least half of that
STRETCH_K = 0.5

DET_TOL = {"analytic": 1e-9, "smooth": 1e-3}
COMMUTATION_TOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    ok: bool = True
    notes: list = field(default_factory=list)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def decomposition(stage, heights: int):
    if stage.regime == "analytic":
        return an.build_eta_analytic(stage, heights)
    return sm.build_eta_smooth(stage, heights)


def _atoms(tower: Tower, stage, dec):
    # psi_n does not depend on r, so analytic atoms are measured at one height
    # and the report is shared by the whole column
    if stage.regime == "analytic":
        return cr.decomposition_atoms(dec, "first")
    return list(dec)


def stretch_suite(tower: Tower, samples: int = 2000) -> SuiteResult:
    res = SuiteResult("stretch", ["stage", "atom_id", "inf_df_len", "k", "sup_ddf_len",
                                  "eps_inf_df", "criterion_ok", "direct_eps", "pass"])
    for st in tower.float_stages:
        if st.regime != "analytic":
            res.notes.append(f"stage {st.n}: smooth stages have no shear function; skipped")
            continue
        dec = decomposition(st, tower.config.heights)
        eps = 1.0 / st.n
        f = lambda x, st=st: an.psi_n(st, x)[0]
        df = lambda x, st=st: an.psi_n(st, x)[1]
        ddf = lambda x, st=st: an.psi_n(st, x)[2]
        H = dec.heights.size
        for i in range(dec.n_intervals):
            rep = cr.check_uniform_stretch(f, df, ddf, (dec.lo[i], dec.hi[i]), eps, STRETCH_K,
                                           samples)
            ok = rep.criterion_ok and rep.direct_ok and rep.consistent
            res.rows.append([st.n, i * H, rep.inf_df_len, rep.k, rep.sup_ddf_len, rep.eps_inf_df,
                             rep.criterion_ok, rep.direct_eps, ok])
            res.ok &= ok
    return res


def distribution_reports(tower: Tower, stage, dec=None):
    dec = dec if dec is not None else decomposition(stage, tower.config.heights)
    fam = cr.default_family(tower.config.seed, random=tower.config.family_random)
    reps = cr.measure_distribution(stage.Phi, _atoms(tower, stage, dec), fam,
                                   tower.config.resolution, stage.targets(), tower.config.seed)
    return dec, reps


def distribution_suite(tower: Tower) -> SuiteResult:
    res = SuiteResult("distribution", list(cr.REPORT_COLUMNS))
    for st in tower.float_stages:
        _, reps = distribution_reports(tower, st)
        for r in reps:
            rec = r.as_record(st.n)
            res.rows.append([rec[c] for c in cr.REPORT_COLUMNS])
            res.ok &= r.passed
    return res


def _tail(tower: Tower, stage, last) -> float:
    """Bound for the telescoping terms beyond the last float stage."""
    seq = tower.sequence
    L = last.n
    if L + 1 > len(seq):
        return 0.0
    ld = seq.log_distance(L + 1)
    if ld == ar.NEG_INF:
        return 0.0
    if tower.regime == "analytic":
        prefix = [(j, seq.q(j), None) for j in range(1, L + 2)]
        norm = an.jacobian_bounds(prefix, tower.config.rho, tower.config.sigma)["p4"]
    else:
        norm = sm.max_entry_derivative(last.H)
    return cr.d0_tail(stage.m, norm, ld)


def criterion_suite(tower: Tower, samples: int = 2048) -> SuiteResult:
    res = SuiteResult("criterion", ["stage", "condition", "value", "relation", "bound", "pass",
                                    "note"])
    floats = tower.float_stages
    cover = []
    for st in floats:
        dec, reps = distribution_reports(tower, st)
        dh = 1.0 if st.prev is None else sm.max_entry_derivative(st.prev.H)
        d0 = cr.d0_proxy(floats, st.n, st.m, _tail(tower, st, floats[-1]), samples,
                         tower.config.seed)
        v = cr.aggregate_criterion(st, dec, reps, [d0], dh)
        if d0.total == 0.0:
            row = next(c for c in v.conditions if c.name == d0.label)
            row.note += "; vacuous: no later stage and alpha is the last sequence entry"
        m_ok = st.m == ar.mixing_index(st.q, st.alpha_next.numerator, st.alpha_next.denominator,
                                    strict=st.regime == "analytic")
        v.conditions.append(cr.Condition("mixing index", float(st.m), float(st.m), "==", m_ok,
                                         "stored m_n equals the recomputed mixing index"))
        cover.append(dec.coverage())
        for c in v.conditions:
            res.rows.append([st.n, c.name, c.value, c.relation, c.bound, c.ok, c.note])
        res.ok &= v.ok
    if len(cover) > 1:
        trend = cr.coverage_trend(cover)
        res.rows.append(["all", "coverage trend", cover[-1], "increasing", cover[0], trend,
                         " ".join(f"{c:.4g}" for c in cover)])
        res.ok &= trend
    return res


def jacobian_suite(tower: Tower, grid: int = 128) -> SuiteResult:
    res = SuiteResult("jacobian", ["stage", "map", "max_abs_det_minus_1", "tolerance", "pass"])
    tol = DET_TOL[tower.regime]
    for st in tower.float_stages:
        for name in ("f", "H", "Phi"):
            err = jacobian_sweep(getattr(st, name), grid, tower.config.seed)
            ok = err <= tol
            res.rows.append([st.n, f"{name}_{st.n}", err, tol, ok])
            res.ok &= ok
        comm = (an.commutation_error(st, 1000, tower.config.seed) if st.regime == "analytic"
                else sm.smooth_commutation_error(st, 1000, tower.config.seed))
        ok = comm <= COMMUTATION_TOL
        res.rows.append([st.n, f"h_{st.n} R - R h_{st.n}", comm, COMMUTATION_TOL, ok])
        res.ok &= ok
    return res


RUNNERS = {"stretch": stretch_suite, "distribution": distribution_suite,
           "criterion": criterion_suite, "jacobian": jacobian_suite}


def run(tower: Tower, suite: str) -> list[SuiteResult]:
    names = SUITES if suite == "all" else (suite,)
    for n in names:
        if n not in RUNNERS:
            raise ValueError(f"unknown suite {n!r}")
    return [RUNNERS[n](tower) for n in names]
