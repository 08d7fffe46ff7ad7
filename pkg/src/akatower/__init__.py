"""Finite stages of Anosov-Katok conjugation towers on the torus and the annulus.

Modules
-------
arithmetic     exact rationals, approximation sequences, mixing indices, condition ledgers
maps           composable planar maps with Jacobians and sampled distances
analytic       the real-analytic torus tower and its eta_n decompositions
standard_map   the smooth standard square map with a Moser correction
smooth         the smooth annulus tower, vertical images and norm estimates
criteria       distribution, stretch, strip and square checks and the stage verdict
ergodic        Monte-Carlo correlations, Birkhoff averages, Jacobian sweeps
tower, config  configuration files and tower serialization
render         PPM output
cli            the ``akatower`` command
"""

__version__ = "0.1.0"
