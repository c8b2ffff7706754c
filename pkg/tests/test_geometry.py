from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st
from shapely.geometry import Polygon as SPolygon

from hexoverlap.cyclotomic import ONE, ZERO, CycloNum, RealQuad, zeta_pow
from hexoverlap.geometry import GeometryError, Polygon, area, clip, cover_exact, cover_report, interiors_intersect
from hexoverlap.tsdata import half_hexagon

I = zeta_pow(3)
SQUARE = Polygon([ZERO, ONE, ONE + I, I])


def pt(x, y):
    return CycloNum(x, 0, 0, y)


def rect(x0, y0, x1, y1):
    return Polygon([pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)])


def test_area_examples():
    assert area(SQUARE) == RealQuad(1)
    assert area(Polygon([ZERO, CycloNum(2), 2 + 2 * I])) == RealQuad(2)


def test_half_hexagon_area_scales_with_edge():
    t = RealQuad(0, Fraction(2, 3))  # 2/sqrt3
    assert area(half_hexagon(t, 0, 1)) == RealQuad(0, 1)
    assert area(half_hexagon(RealQuad(1), 0, 1)) == RealQuad(0, Fraction(3, 4))


def test_degenerate_polygons_rejected():
    with pytest.raises(GeometryError):
        Polygon([ZERO, ONE, CycloNum(2)])
    with pytest.raises(GeometryError):
        Polygon([ZERO, I, ONE + I, ONE])  # clockwise
    with pytest.raises(GeometryError):
        Polygon([ZERO, ONE])


def test_shifted_square():
    assert not interiors_intersect(SQUARE, SQUARE, shift=ONE)
    assert interiors_intersect(SQUARE, SQUARE, shift=CycloNum(Fraction(1, 2)))
    assert not interiors_intersect(SQUARE, SQUARE, shift=CycloNum(2))
    assert not interiors_intersect(SQUARE, SQUARE, shift=ONE + I)  # corner contact


def test_clip_examples():
    assert clip(SQUARE, SQUARE) == SQUARE
    half = clip(SQUARE, SQUARE.translate(CycloNum(Fraction(1, 2))))
    assert area(half) == RealQuad(Fraction(1, 2))
    assert half == rect(Fraction(1, 2), 0, 1, 1)
    assert clip(SQUARE, SQUARE.translate(CycloNum(3))) is None
    assert clip(SQUARE, SQUARE.translate(ONE)) is None


def test_cover_examples():
    left, right = rect(0, 0, Fraction(1, 2), 1), rect(Fraction(1, 2), 0, 1, 1)
    assert cover_exact(SQUARE, [left, right])
    rep = cover_report(SQUARE, [left])
    assert any("deficit" in r for r in rep)
    rep = cover_report(SQUARE, [left, right, right])
    assert any("overlap" in r for r in rep)
    assert not cover_exact(SQUARE, [left, right.translate(CycloNum(Fraction(1, 4)))])


# --- random convex polygons with vertices in Z[zeta] --------------------------


def _hull(points):
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and turn(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and turn(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@st.composite
def convex(draw):
    raw = draw(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=3, max_size=9))
    h = _hull(raw)
    assume(len(h) >= 3)
    rot = draw(st.integers(0, 11))
    shift = CycloNum(*draw(st.tuples(*[st.integers(-3, 3)] * 4)))
    return Polygon([pt(x, y) * zeta_pow(rot) + shift for x, y in h])


def shp(P):
    return SPolygon(P.embed())


@settings(max_examples=80, deadline=None)
@given(convex(), convex())
def test_clip_commutes(P, Q):
    a, b = clip(P, Q), clip(Q, P)
    assert (a is None) == (b is None)
    if a is not None:
        assert area(a) == area(b)


@settings(max_examples=80, deadline=None)
@given(convex(), convex())
def test_intersect_iff_positive_area(P, Q):
    c = clip(P, Q)
    assert interiors_intersect(P, Q) == (c is not None and area(c).sign() > 0)


@settings(max_examples=80, deadline=None)
@given(convex(), convex())
def test_against_shapely(P, Q):
    assert float(area(P)) == pytest.approx(shp(P).area, rel=1e-9)
    c = clip(P, Q)
    ref = shp(P).intersection(shp(Q)).area
    if c is None:
        assert ref == pytest.approx(0.0, abs=1e-9)
    else:
        assert float(area(c)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


@st.composite
def subdivided(draw):
    """A rectangle cut into a grid of cells, possibly with one cell dropped or moved."""
    nx, ny = draw(st.integers(1, 3)), draw(st.integers(1, 3))
    cells = [rect(i, j, i + 1, j + 1) for i in range(nx) for j in range(ny)]
    mode = draw(st.sampled_from(["ok", "drop", "dup", "move"]))
    if mode == "drop" and len(cells) > 1:
        cells.pop(draw(st.integers(0, len(cells) - 1)))
    elif mode == "dup":
        cells.append(cells[0])
    elif mode == "move":
        cells[-1] = cells[-1].translate(CycloNum(Fraction(1, 3)))
    return rect(0, 0, nx, ny), cells


@settings(max_examples=60, deadline=None)
@given(subdivided(), st.integers(0, 11), st.tuples(*[st.integers(-4, 4)] * 4))
def test_cover_rigid_motion_invariant(case, rot, shift):
    parent, kids = case
    t = CycloNum(*shift)

    def move(P):
        return P.rotate(rot).translate(t)

    assert cover_exact(parent, kids) == cover_exact(move(parent), [move(k) for k in kids])


@settings(max_examples=60, deadline=None)
@given(subdivided(), st.fractions(min_value=Fraction(1, 20), max_value=20))
def test_predicates_scale_invariant(case, s):
    parent, kids = case
    assert cover_exact(parent, kids) == cover_exact(parent.scale(s), [k.scale(s) for k in kids])
    a, b = kids[0], kids[-1]
    assert interiors_intersect(a, b) == interiors_intersect(a.scale(s), b.scale(s))
