"""One analytic stage in detail, then a two-stage condition ledger with huge denominators."""

from fractions import Fraction

import numpy as np

from akatower import analytic as an
from akatower import arithmetic as ar
from akatower import criteria as cr

stage = an.build_stage(1, Fraction(1, 16), Fraction(2 ** 24 + 1, 2 ** 28), 0.25)
print(f"q_1 = {stage.q}, b_1 = {stage.b}, m_1 = {stage.m}")
print(f"m_1 q_1 alpha_2 sits {float(stage.residual):.3g} from 1/2 (mod 1)")

bad = an.build_Bn(stage)
print(f"\nThe bad set B_1 has {len(bad.intervals)} pieces and measure {bad.measure:.3f}.")
res = an.shear_derivative_check(stage, 20_000)
print(f"Off B_1: inf|psi'| = {res['inf_dpsi']:.0f} >= {res['dpsi_bound']:.0f}, "
      f"sup|psi''| = {res['sup_ddpsi']:.3g} <= {res['ddpsi_bound']:.3g}")

dec = an.build_eta_analytic(stage, 64)
print(f"\neta_1: {dec.n_intervals} intervals x 64 heights, covering {dec.coverage():.3f}")
sample = cr.decomposition_atoms(dec, "first")[::500]
reps = cr.measure_distribution(stage.Phi, sample, targets=stage.targets())
eps = np.array([r.eps for r in reps])
print(f"distribution of {len(reps)} sampled atoms: worst eps {eps.max():.3g}, "
      f"all pass: {all(r.passed for r in reps)}")

# A sequence whose second denominator has millions of bits.  Everything below
# runs in log space or on exact integers.
K = 6_600_000
seq = ar.ApproximationSequence([Fraction(1, 32), Fraction((1 << (K - 5)) + 1, 1 << K)],
                               regime="analytic", sigma=0.9, delta=3, tail_log="-1e7351200")
accepted, ledger = ar.enforce_analytic_conditions(seq, 0.9, 0.01, an.bound_provider(0.01, 0.9),
                                                  delta=3)
print(f"\nTwo-stage ledger with q_2 = 2^{K}:")
for r in ledger.rows:
    print(f"  stage {r.stage} {r.condition:<24} {r.fmt(r.lhs)} {r.relation} {r.fmt(r.rhs)}")
