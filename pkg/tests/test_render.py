import numpy as np
import pytest

from akatower import render
from akatower.decomposition import PartialDecomposition
from akatower.maps import Rotation


def test_ppm_header_and_round_trip(tmp_path):
    img = render.canvas(8)
    img[0, 0] = (255, 0, 0)
    data = render.ppm_bytes(img)
    assert data.startswith(b"P6\n8 8\n255\n")
    assert len(data) == len(b"P6\n8 8\n255\n") + 8 * 8 * 3
    path = tmp_path / "x.ppm"
    render.write_ppm(img, path)
    assert np.array_equal(render.read_ppm(path), img)


def test_ppm_rejects_bad_arrays(tmp_path):
    with pytest.raises(ValueError):
        render.ppm_bytes(np.zeros((4, 4, 3), dtype=float))
    p = tmp_path / "bad.ppm"
    p.write_bytes(b"P3\n1 1\n255\n000")
    with pytest.raises(ValueError):
        render.read_ppm(p)


def test_pixel_orientation():
    col, row = render.to_pixels(np.array([0.0, 0.999, 1.0]), np.array([0.0, 0.999, 0.5]), 10)
    assert list(col) == [0, 9, 0]
    # r = 0 is the bottom row, r near 1 the top
    assert list(row) == [9, 0, 4]


def test_atoms_render_and_worker_independence():
    dec = PartialDecomposition([0.1, 0.6], [0.3, 0.9], [0.25, 0.75])
    a = render.render_atoms(dec, 64, workers=1)
    b = render.render_atoms(dec, 64, workers=4)
    assert np.array_equal(a, b)
    lit = np.any(a != render.BACKGROUND, axis=2)
    assert lit.sum() > 0
    # every lit row is one of the two heights
    assert set(np.nonzero(lit.any(axis=1))[0]) == {64 - 1 - 16, 64 - 1 - 48}


def test_orbit_render_deterministic():
    starts = render.seeded_starts(4, 1)
    a = render.render_orbit(Rotation(0.01), starts, 100, 32, workers=1)
    b = render.render_orbit(Rotation(0.01), starts, 100, 32, workers=3)
    assert np.array_equal(a, b)
    ann = render.seeded_starts(50, 2, "annulus")
    assert all(0.05 <= r <= 0.95 for _, r in ann)
