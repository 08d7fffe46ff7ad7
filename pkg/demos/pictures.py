"""Write PPM pictures of eta_1, its Phi_1-image and an f_2 orbit cloud to ./pictures/."""

from pathlib import Path

from akatower import arithmetic as ar
from akatower import render
from akatower import smooth as sm

out = Path("pictures")
out.mkdir(exist_ok=True)
seq = ar.ApproximationSequence(["1/4", "1/40", "1/1600"], regime="smooth", sigma=0.5)
s1, s2 = sm.build_smooth_tower(seq, 0.5)

dec = sm.build_eta_smooth(s1)
render.write_ppm(render.render_atoms(dec, 512), out / "eta1_atoms.ppm")
# horizontal atoms become vertical bands over [1/3, 2/3]
render.write_ppm(render.render_images(s1.Phi, dec, 512), out / "eta1_images.ppm")
starts = render.seeded_starts(8, 0, "annulus")
render.write_ppm(render.render_orbit(s2.f, starts, 4000, 512), out / "f2_orbits.ppm")
print("wrote", ", ".join(sorted(p.name for p in out.glob("*.ppm"))))
