import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexoverlap.cyclotomic import ZERO, CycloNum
from hexoverlap.spectra import (
    hex_grid,
    intensity,
    peak_share,
    shares_non_decreasing,
    sixfold_score,
    square_grid,
    top_peaks,
    write_csv,
    write_pgm,
)
from hexoverlap.substitution import MultiColorPointSet, iterate_arrays, patch_to_arrays


def lattice(R):
    r = np.arange(-R, R + 1)
    xy = np.stack(np.meshgrid(r, r), axis=-1).reshape(-1, 2).astype(float)
    return xy[np.hypot(xy[:, 0], xy[:, 1]) <= R]


@pytest.fixture(scope="module")
def ts_xy(ts, ts_gen):
    t0, p0 = patch_to_arrays(ts, ts_gen.patch)
    _, pos = iterate_arrays(ts, t0, p0, 6)
    return ts.frame.embed(pos)


def test_single_point_flat():
    G = intensity(MultiColorPointSet({0: [ZERO]}), hex_grid(2, 4))
    assert np.allclose(G.values, 1.0)
    assert top_peaks(G) == []


def test_empty_rejected():
    with pytest.raises(ValueError):
        intensity(np.zeros((0, 2)), hex_grid())
    with pytest.raises(ValueError):
        intensity(np.ones((3, 2)) * 50, hex_grid(), radius=1.0)


def test_square_lattice_peaks():
    G = intensity(lattice(20), square_grid(2, 8))
    top = top_peaks(G, 5)
    # every integer node carries the full weight N, so they tie and all survive
    pos = {(round(x, 9), round(y, 9)) for x, y, _ in top}
    assert {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)} <= pos
    assert all(x == int(x) and y == int(y) for x, y in pos)
    assert all(v == pytest.approx(G.count) for _, _, v in top)
    assert G.at(0, 0) == pytest.approx(G.count)


def test_square_contrast_grows():
    ratios = []
    for R in (10, 20):
        G = intensity(lattice(R), square_grid(2, 8))
        ratios.append(G.at(4, 0) / float(np.median(G.values)))
    assert ratios[1] > ratios[0]


@settings(max_examples=20, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_translation_covariance(tx, ty):
    xy = lattice(6) * 0.7 + np.array([0.13, -0.4])
    a = intensity(xy, hex_grid(2, 4)).values
    b = intensity(xy + np.array([tx, ty]), hex_grid(2, 4)).values
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * a.max())


def test_nonnegative_and_origin(ts_xy):
    G = intensity(ts_xy, hex_grid(2, 8), radius=16)
    assert (G.values >= 0).all()
    assert G.at(0, 0) == pytest.approx(G.count, rel=1e-12)


def test_symmetrized_score_is_one():
    rng = np.random.default_rng(3)
    base = rng.uniform(0.5, 3, size=(5, 2))
    I = rng.uniform(1, 10, size=5)
    peaks = []
    for k in range(6):
        c, s = math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)
        for (x, y), v in zip(base, I):
            peaks.append((c * x - s * y, s * x + c * y, float(v)))
    assert sixfold_score(peaks) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sixfold_score(peaks[:3])


def test_ts_sixfold_and_square_control(ts_xy):
    scores, keys = [], []
    for R in (16, 32):
        G = intensity(ts_xy, hex_grid(2, 8), radius=R)
        peaks = top_peaks(G, None, min_rel=0.1)
        scores.append(sixfold_score(peaks))
        keys.append({(round(x, 6), round(y, 6)) for x, y, _ in peaks})
    assert min(scores) >= 0.95
    assert keys[0] == keys[1]
    G = intensity(lattice(20), square_grid(2, 8))
    sq = sixfold_score(top_peaks(G, None, min_rel=0.1))
    assert sq < min(scores)


def test_peak_share_excludes_lattice():
    G = intensity(lattice(10), square_grid(2, 8))
    assert peak_share(G, exclude_lattice=False) == pytest.approx(1.0, rel=1e-9)
    assert peak_share(G) < 0.05


def test_shares_tolerance():
    assert shares_non_decreasing([0.44, 0.4398, 0.45])
    assert not shares_non_decreasing([0.44, 0.40])


def test_writers(tmp_path, ts_xy):
    G = intensity(ts_xy, hex_grid(1, 3), radius=8)
    write_csv(G, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "kx,ky,I"
    assert len(lines) == 1 + 7 * 7
    kx, ky, v = map(float, lines[1].split(","))
    write_pgm(G, tmp_path / "a.pgm")
    data = (tmp_path / "a.pgm").read_bytes()
    head = b"P5\n7 7\n65535\n"
    assert data.startswith(head)
    img = np.frombuffer(data[len(head):], dtype=">u2").reshape(7, 7)
    assert img.max() == 65535
    # origin is the brightest node and sits in the middle
    assert img[3, 3] == 65535
    write_pgm(G, tmp_path / "b.pgm")
    assert (tmp_path / "b.pgm").read_bytes() == data
