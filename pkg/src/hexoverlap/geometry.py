"""Exact convex-polygon predicates with vertices in Q(zeta_12).

Every decision here reduces to the sign of an element of Q(sqrt 3), evaluated
with integer arithmetic.  Polygons are convex and counterclockwise; boundary
contact never counts as an intersection.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import List, Optional, Sequence, Tuple

from .cyclotomic import CycloNum, RealQuad, re_im, zeta_pow

__all__ = [
    "GeometryError",
    "Polygon",
    "cross",
    "area",
    "interiors_intersect",
    "clip",
    "cover_exact",
]


class GeometryError(ValueError):
    pass


def cross(p: CycloNum, q: CycloNum) -> RealQuad:
    """Im(conj(p) * q), the signed parallelogram area spanned by p and q."""
    px, py = re_im(p)
    qx, qy = re_im(q)
    return px * qy - py * qx


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _int_coords(points: Sequence[CycloNum]) -> List[Tuple[int, int, int, int]]:
    """Scale Re/Im parts of all points to a common integer grid.

    Each point becomes (xa, xb, ya, yb) with x = (xa + xb*sqrt3)/D and likewise
    for y; D is shared so cross-product signs are unchanged.
    """
    parts = []
    den = 1
    for p in points:
        x, y = re_im(p)
        quad = (x.a, x.b, y.a, y.b)
        for f in quad:
            den = _lcm(den, f.denominator)
        parts.append(quad)
    return [tuple(int(f * den) for f in quad) for quad in parts]


def _sign(a: int, b: int) -> int:
    # sign of a + b*sqrt3
    if a >= 0 and b >= 0:
        return 0 if (a == 0 and b == 0) else 1
    if a <= 0 and b <= 0:
        return -1
    lhs, rhs = a * a, 3 * b * b
    if lhs == rhs:
        return 0
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


def _cross_sign(o, p, q) -> int:
    """Sign of cross(p - o, q - o) on integer (xa, xb, ya, yb) coordinates."""
    ux0, ux1, uy0, uy1 = p[0] - o[0], p[1] - o[1], p[2] - o[2], p[3] - o[3]
    vx0, vx1, vy0, vy1 = q[0] - o[0], q[1] - o[1], q[2] - o[2], q[3] - o[3]
    # (ux0 + ux1 s)(vy0 + vy1 s) - (uy0 + uy1 s)(vx0 + vx1 s), s^2 = 3
    a = ux0 * vy0 + 3 * ux1 * vy1 - uy0 * vx0 - 3 * uy1 * vx1
    b = ux0 * vy1 + ux1 * vy0 - uy0 * vx1 - uy1 * vx0
    return _sign(a, b)


def _strictly_inside_some(edge_poly, other) -> bool:
    """True iff for every edge of edge_poly some vertex of other lies strictly left."""
    n = len(edge_poly)
    for k in range(n):
        a, b = edge_poly[k], edge_poly[(k + 1) % n]
        for w in other:
            if _cross_sign(a, b, w) > 0:
                break
        else:
            return False
    return True


def _ii_coords(pc, qc) -> bool:
    return _strictly_inside_some(pc, qc) and _strictly_inside_some(qc, pc)


class Polygon:
    """Convex counterclockwise polygon; construction validates exactly."""

    __slots__ = ("vertices", "_hash")

    def __init__(self, vertices: Sequence[CycloNum], validate: bool = True):
        verts = tuple(CycloNum.coerce(v) for v in vertices)
        self.vertices = verts
        self._hash = None
        if validate:
            self._validate()

    def _validate(self) -> None:
        verts = self.vertices
        n = len(verts)
        if n < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        coords = _int_coords(verts)
        # every other vertex strictly left of every edge: strict convexity,
        # counterclockwise orientation, no repeated or collinear vertices
        for k in range(n):
            a, b = coords[k], coords[(k + 1) % n]
            for m in range(n):
                if m == k or m == (k + 1) % n:
                    continue
                if _cross_sign(a, b, coords[m]) <= 0:
                    raise GeometryError("polygon is not strictly convex and counterclockwise")

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __repr__(self) -> str:
        return "Polygon([" + "; ".join(v.serialize() for v in self.vertices) + "])"

    def canonical(self) -> Tuple[CycloNum, ...]:
        """Vertex cycle rotated to start at its smallest vertex."""
        verts = self.vertices
        k = min(range(len(verts)), key=lambda m: verts[m].c)
        return verts[k:] + verts[:k]

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.canonical())
        return self._hash

    def translate(self, t: CycloNum) -> "Polygon":
        return Polygon([v + t for v in self.vertices], validate=False)

    def rotate(self, k: int) -> "Polygon":
        """Rotate about the origin by k*pi/6."""
        z = zeta_pow(k)
        return Polygon([v * z for v in self.vertices], validate=False)

    def scale(self, s) -> "Polygon":
        if isinstance(s, (int, Fraction)) and s <= 0:
            raise GeometryError("scale factor must be positive")
        return Polygon([v * s for v in self.vertices], validate=False)

    def map(self, f, reverse: bool = False) -> "Polygon":
        """Image under a real-linear map; pass reverse=True if f flips orientation."""
        img = [f(v) for v in self.vertices]
        if reverse:
            img.reverse()
        return Polygon(img, validate=False)

    def coords(self):
        return _int_coords(self.vertices)

    def embed(self):
        return [v.embed() for v in self.vertices]

    def contains_point(self, p: CycloNum, strict: bool = False) -> bool:
        coords = _int_coords(list(self.vertices) + [p])
        pc = coords[-1]
        vs = coords[:-1]
        n = len(vs)
        for k in range(n):
            s = _cross_sign(vs[k], vs[(k + 1) % n], pc)
            if s < 0 or (strict and s == 0):
                return False
        return True

    def max_radius2(self) -> RealQuad:
        """max |v|^2 over vertices: squared circumradius about the origin."""
        return max(v.norm2() for v in self.vertices)


def area(P: Polygon) -> RealQuad:
    verts = P.vertices
    n = len(verts)
    total = RealQuad(0)
    for k in range(n):
        total = total + cross(verts[k], verts[(k + 1) % n])
    result = total * Fraction(1, 2)
    if result.sign() <= 0:
        raise GeometryError("degenerate polygon (non-positive area)")
    return result


def interiors_intersect(P: Polygon, Q: Polygon, shift: Optional[CycloNum] = None) -> bool:
    """Do the open interiors of (P + shift) and Q meet?

    Separating-axis test over the edge normals of both polygons; a closed
    half-plane separation (touching allowed) means the interiors are disjoint.
    """
    pv = P.vertices if shift is None else [v + shift for v in P.vertices]
    coords = _int_coords(list(pv) + list(Q.vertices))
    return _ii_coords(coords[: len(pv)], coords[len(pv):])


def _segment_line_point(s: CycloNum, e: CycloNum, ds: RealQuad, de: RealQuad) -> CycloNum:
    t = ds / (ds - de)
    return s + (e - s) * t.to_cyclo()


def _cleanup(points: List[CycloNum]) -> List[CycloNum]:
    out: List[CycloNum] = []
    for p in points:
        if not out or out[-1] != p:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for k in range(n):
            a, b, c = out[k - 1], out[k], out[(k + 1) % n]
            if cross(b - a, c - b).sign() == 0:
                del out[k]
                changed = True
                break
    return out


def clip(P: Polygon, Q: Polygon) -> Optional[Polygon]:
    """Exact convex intersection P ∩ Q, or None when it has no interior."""
    if not interiors_intersect(P, Q):
        return None
    poly = list(P.vertices)
    qv = Q.vertices
    m = len(qv)
    for k in range(m):
        a, b = qv[k], qv[(k + 1) % m]
        edge = b - a
        if not poly:
            break
        sides = [cross(edge, p - a) for p in poly]
        out: List[CycloNum] = []
        n = len(poly)
        for idx in range(n):
            s, e = poly[idx], poly[(idx + 1) % n]
            ds, de = sides[idx], sides[(idx + 1) % n]
            s_in = ds.sign() >= 0
            e_in = de.sign() >= 0
            if s_in:
                out.append(s)
            if s_in != e_in and ds.sign() != 0 and de.sign() != 0:
                out.append(_segment_line_point(s, e, ds, de))
        poly = _cleanup(out)
    if len(poly) < 3:
        return None
    result = Polygon(poly, validate=False)
    try:
        if area(result).sign() <= 0:
            return None
    except GeometryError:
        return None
    return result


def cover_exact(parent: Polygon, children: Sequence[Polygon]) -> bool:
    """Children tile the parent exactly: contained, interior-disjoint, no area gap."""
    return not cover_report(parent, children)


def cover_report(parent: Polygon, children: Sequence[Polygon]) -> List[str]:
    """Human-readable list of cover_exact violations (empty when it holds)."""
    problems = []
    total = RealQuad(0)
    for k, ch in enumerate(children):
        a = area(ch)
        total = total + a
        inter = clip(ch, parent)
        if inter is None or area(inter) != a:
            problems.append(f"child {k} not contained in parent")
    for (k, a), (m, b) in combinations(enumerate(children), 2):
        if interiors_intersect(a, b):
            problems.append(f"children {k} and {m} overlap")
    pa = area(parent)
    if total != pa:
        kind = "deficit" if total < pa else "excess"
        problems.append(f"area {kind}: children {total}, parent {pa}")
    return problems
