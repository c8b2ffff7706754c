"""Generic tile-substitutions with prototiles supported on convex polygons.

A :class:`RuleSet` maps each prototile j to a list of children (i, d): the
tile of type i translated by d.  Tiles themselves are ``(proto, t)`` pairs, so
a patch is a set of such pairs and containment between patches is exact set
containment.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cyclotomic import ZERO, CycloNum, Expansion, RealQuad
from .geometry import Polygon, area, cover_report, interiors_intersect, _int_coords, _cross_sign

log = logging.getLogger(__name__)

__all__ = [
    "SubstitutionError",
    "Prototile",
    "Tile",
    "Patch",
    "RuleSet",
    "IntFrame",
    "ValidationReport",
    "MultiColorPointSet",
    "GeneratingPatch",
    "apply_to_tile",
    "apply_to_patch",
    "iterate",
    "validate_ruleset",
    "substitution_matrix",
    "is_primitive",
    "perron_eigenvalue",
    "find_generating_patch",
    "is_generating",
    "tiling_to_pointset",
    "pointset_to_tiling",
    "flc_census",
    "meyer_gap",
    "inradius_estimate",
    "patch_to_arrays",
    "arrays_to_patch",
    "iterate_arrays",
    "norm4_exact_le",
]


class SubstitutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Prototile:
    id: int
    label: str
    support: Polygon
    shape: int = 0  # index of the distinct support polygon


@dataclass(frozen=True, order=True)
class Tile:
    proto: int
    t: CycloNum

    def shifted(self, s: CycloNum) -> "Tile":
        return Tile(self.proto, self.t + s)


class Patch:
    """Finite set of tiles; optionally checked for pairwise interior-disjointness."""

    __slots__ = ("tiles",)

    def __init__(self, tiles: Iterable[Tile] = (), rules: Optional["RuleSet"] = None):
        self.tiles: FrozenSet[Tile] = frozenset(tiles)
        if rules is not None:
            clash = rules.find_collision(self)
            if clash is not None:
                a, b = clash
                raise SubstitutionError(
                    f"interior collision between {rules.label(a.proto)} at {a.t} "
                    f"and {rules.label(b.proto)} at {b.t}"
                )

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(sorted(self.tiles))

    def __contains__(self, tile) -> bool:
        return tile in self.tiles

    def __eq__(self, other) -> bool:
        return isinstance(other, Patch) and self.tiles == other.tiles

    def __hash__(self) -> int:
        return hash(self.tiles)

    def __le__(self, other: "Patch") -> bool:
        return self.tiles <= other.tiles

    def __repr__(self) -> str:
        return f"Patch({len(self.tiles)} tiles)"

    def shifted(self, s: CycloNum) -> "Patch":
        return Patch(t.shifted(s) for t in self.tiles)


@dataclass
class ValidationReport:
    total: int
    failures: Dict[int, List[str]] = field(default_factory=dict)

    @property
    def passed(self) -> int:
        return self.total - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self, rules: "RuleSet") -> List[str]:
        out = [f"{'PASS' if self.ok else 'FAIL'} {self.passed}/{self.total} prototiles"]
        for j in sorted(self.failures):
            for msg in self.failures[j]:
                out.append(f"  {rules.label(j)}: {msg}")
        return out


class RuleSet:
    """Substitution data: prototiles, expansion, and per-prototile children."""

    def __init__(
        self,
        prototiles: Sequence[Tuple[str, Polygon]],
        expansion: Expansion,
        children: Sequence[Sequence[Tuple[int, CycloNum]]],
        name: str = "",
    ):
        if len(children) != len(prototiles):
            raise SubstitutionError("need one child list per prototile")
        shapes: Dict[Polygon, int] = {}
        protos = []
        for k, (label, poly) in enumerate(prototiles):
            s = shapes.setdefault(poly, len(shapes))
            protos.append(Prototile(k, label, poly, s))
        self.prototiles: Tuple[Prototile, ...] = tuple(protos)
        self.shapes: Tuple[Polygon, ...] = tuple(sorted(shapes, key=shapes.get))
        self.expansion = expansion
        m = len(protos)
        kids = []
        for j, lst in enumerate(children):
            if not lst:
                raise SubstitutionError(f"prototile {protos[j].label} has no children")
            row = []
            for i, d in lst:
                if not 0 <= i < m:
                    raise SubstitutionError(f"unknown prototile id {i} in children of {protos[j].label}")
                row.append((i, CycloNum.coerce(d)))
            kids.append(tuple(row))
        self.children: Tuple[Tuple[Tuple[int, CycloNum], ...], ...] = tuple(kids)
        self.name = name
        self._by_label = {p.label: p.id for p in protos}
        if len(self._by_label) != m:
            raise SubstitutionError("duplicate prototile labels")
        self._frame: Optional[IntFrame] = None

    def __len__(self) -> int:
        return len(self.prototiles)

    def __repr__(self) -> str:
        return f"RuleSet({self.name or 'unnamed'}, {len(self)} prototiles)"

    def label(self, i: int) -> str:
        return self.prototiles[i].label

    def id_of(self, label: str) -> int:
        try:
            return self._by_label[label]
        except KeyError:
            raise SubstitutionError(f"unknown prototile {label!r}") from None

    def support(self, tile: Tile) -> Polygon:
        return self.prototiles[tile.proto].support.translate(tile.t)

    def shape_of(self, i: int) -> int:
        return self.prototiles[i].shape

    def find_collision(self, patch: Patch) -> Optional[Tuple[Tile, Tile]]:
        """First pair of tiles with intersecting interiors, or None."""
        tiles = sorted(patch.tiles)
        r2 = float(max(p.support.max_radius2() for p in self.prototiles))
        reach = 2.0 * math.sqrt(r2) + 1e-6
        pos = [t.t.embed() for t in tiles]
        order = sorted(range(len(tiles)), key=lambda k: pos[k][0])
        for a_idx, ka in enumerate(order):
            xa, ya = pos[ka]
            for kb in order[a_idx + 1:]:
                xb, yb = pos[kb]
                if xb - xa > reach:
                    break
                if abs(yb - ya) > reach:
                    continue
                a, b = tiles[ka], tiles[kb]
                if a == b:
                    continue
                sa = self.prototiles[a.proto].support
                sb = self.prototiles[b.proto].support
                if interiors_intersect(sa, sb, shift=a.t - b.t):
                    return a, b
        return None

    @property
    def frame(self) -> "IntFrame":
        if self._frame is None:
            self._frame = IntFrame(self)
        return self._frame


class IntFrame:
    """Integer coordinates for fast bulk work.

    A point c0 + c1 z + c2 z^2 + c3 z^3 is stored as the int vector
    D*(c0, c1, c2, c3), with D the common denominator of every offset and
    support vertex.  The expansion must have integral coefficients so that it
    acts by an integer 4x4 matrix.
    """

    def __init__(self, rules: RuleSet):
        E = rules.expansion
        if not E.is_integral():
            raise SubstitutionError("integer fast path needs an expansion with integral coefficients")
        den = 1
        for lst in rules.children:
            for _, d in lst:
                den = math.lcm(den, d.denominator())
        for p in rules.prototiles:
            for v in p.support.vertices:
                den = math.lcm(den, v.denominator())
        self.den = den
        self.qmat = np.array([[int(x) for x in row] for row in E.coefficient_matrix()], dtype=np.int64)
        m = len(rules)
        self.nchild = np.array([len(c) for c in rules.children], dtype=np.int64)
        cmax = int(self.nchild.max())
        self.child_type = np.full((m, cmax), -1, dtype=np.int64)
        self.child_off = np.zeros((m, cmax, 4), dtype=np.int64)
        for j, lst in enumerate(rules.children):
            for k, (i, d) in enumerate(lst):
                self.child_type[j, k] = i
                self.child_off[j, k] = self.to_int(d)
        self.shape = np.array([p.shape for p in rules.prototiles], dtype=np.int64)
        rmax2 = max(p.support.max_radius2() for p in rules.prototiles)
        # intersecting interiors force |delta| < 2 r_max; bound 4|D delta|^2
        exact = rmax2 * 16 * den * den
        bound = int(math.ceil(float(exact))) + 1
        while RealQuad(bound) < exact:
            bound += 1
        self.reach_bound = bound
        self.reach = 2.0 * math.sqrt(float(rmax2))

    def to_int(self, z: CycloNum) -> np.ndarray:
        v = [x * self.den for x in z.c]
        if any(x.denominator != 1 for x in v):
            raise SubstitutionError(f"point {z} is off the integer frame (denominator {self.den})")
        return np.array([int(x) for x in v], dtype=np.int64)

    def to_cyclo(self, v) -> CycloNum:
        d = self.den
        return CycloNum(*(Fraction(int(x), d) for x in v))

    def embed(self, arr: np.ndarray) -> np.ndarray:
        """Float (x, y) for an (n, 4) int array; rendering and bucketing only."""
        s = math.sqrt(3.0)
        a = np.asarray(arr, dtype=np.float64) / self.den
        x = a[..., 0] + a[..., 1] * (s / 2) + a[..., 2] * 0.5
        y = a[..., 1] * 0.5 + a[..., 2] * (s / 2) + a[..., 3]
        return np.stack([x, y], axis=-1)

    def expand(self, pos: np.ndarray) -> np.ndarray:
        return pos @ self.qmat.T

    def inflate_arrays(self, types: np.ndarray, pos: np.ndarray):
        """One substitution step on (types, positions) arrays."""
        qpos = self.expand(pos)
        out_t, out_p = [], []
        for k in range(self.child_type.shape[1]):
            ct = self.child_type[types, k]
            keep = ct >= 0
            out_t.append(ct[keep])
            out_p.append(qpos[keep] + self.child_off[types[keep], k])
        return np.concatenate(out_t), np.concatenate(out_p)


def norm4_exact_le(vec: np.ndarray, bound: int) -> np.ndarray:
    """Exact test 4|x|^2 <= bound for int coefficient rows (numpy, vectorized)."""
    c0, c1, c2, c3 = (vec[..., k].astype(np.int64) for k in range(4))
    p = 2 * c0 + c2
    q = c1 + 2 * c3
    A = p * p + 3 * c1 * c1 + q * q + 3 * c2 * c2
    B = 2 * (p * c1 + q * c2)
    s = bound - A
    # A + B sqrt3 <= bound  <=>  B sqrt3 <= s
    return np.where(B <= 0, (s >= 0) | (3 * B * B >= s * s), (s >= 0) & (3 * B * B <= s * s))


# --- rule application ----------------------------------------------------


def apply_to_tile(R: RuleSet, T: Tile) -> Patch:
    if not 0 <= T.proto < len(R):
        raise SubstitutionError(f"unknown prototile id {T.proto}")
    qt = R.expansion(T.t)
    return Patch(Tile(i, qt + d) for i, d in R.children[T.proto])


def apply_to_patch(R: RuleSet, P: Patch, validating: bool = False) -> Patch:
    tiles = set()
    for T in P.tiles:
        tiles.update(apply_to_tile(R, T).tiles)
    if validating and len(tiles) != sum(len(R.children[t.proto]) for t in P.tiles):
        raise SubstitutionError("two tiles of the patch produced an identical child")
    return Patch(tiles, rules=R if validating else None)


def iterate(R: RuleSet, P: Patch, k: int, validating: bool = False) -> Patch:
    for _ in range(k):
        P = apply_to_patch(R, P, validating=validating)
    return P


def patch_to_arrays(R: RuleSet, P: Patch):
    fr = R.frame
    tiles = sorted(P.tiles)
    types = np.array([t.proto for t in tiles], dtype=np.int64)
    pos = np.array([fr.to_int(t.t) for t in tiles], dtype=np.int64).reshape(-1, 4)
    return types, pos


def arrays_to_patch(R: RuleSet, types: np.ndarray, pos: np.ndarray) -> Patch:
    fr = R.frame
    return Patch(Tile(int(i), fr.to_cyclo(p)) for i, p in zip(types, pos))


def iterate_arrays(R: RuleSet, types: np.ndarray, pos: np.ndarray, k: int):
    fr = R.frame
    for _ in range(k):
        types, pos = fr.inflate_arrays(types, pos)
    return types, pos


# --- validation ------------------------------------------------------------


def _expanded_support(R: RuleSet, j: int) -> Polygon:
    E = R.expansion
    sup = R.prototiles[j].support
    flips = E.determinant().sign() < 0
    return Polygon(sup.map(E, reverse=flips).vertices)


def validate_ruleset(R: RuleSet) -> ValidationReport:
    """Check Q A_j = union of children, exactly, for every prototile j."""
    report = ValidationReport(total=len(R))
    for j in range(len(R)):
        try:
            parent = _expanded_support(R, j)
            kids = [R.prototiles[i].support.translate(d) for i, d in R.children[j]]
            problems = cover_report(parent, kids)
        except Exception as exc:  # degenerate geometry counts as a failure
            problems = [f"geometry error: {exc}"]
        if problems:
            report.failures[j] = problems
    return report


# --- matrix ---------------------------------------------------------------


def substitution_matrix(R: RuleSet) -> np.ndarray:
    """S[i, j] = number of children of type i in the rule for j."""
    m = len(R)
    S = np.zeros((m, m), dtype=np.int64)
    for j, lst in enumerate(R.children):
        for i, _ in lst:
            S[i, j] += 1
    return S


def is_primitive(S: np.ndarray) -> Tuple[bool, int]:
    """(True, k) for the smallest k with S^k > 0 entrywise, k <= m^2; else (False, 0)."""
    m = S.shape[0]
    B = (S > 0).astype(np.int64)
    P = B.copy()
    for k in range(1, m * m + 1):
        if P.all():
            return True, k
        P = ((P @ B) > 0).astype(np.int64)
    return False, 0


def perron_eigenvalue(S: np.ndarray, tol: float = 1e-12, max_iter: int = 100000) -> float:
    """Dominant eigenvalue by power iteration (float; diagnostics)."""
    m = S.shape[0]
    A = S.astype(np.float64)
    # averaging with the identity kills periodic oscillation without moving the
    # Perron root's eigenvector
    M = 0.5 * (A + np.eye(m))
    v = np.ones(m) / m
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        new = float(w.sum() / v.sum())
        w /= w.sum()
        if abs(new - lam) < tol and np.abs(w - v).max() < tol:
            v = w
            lam = new
            break
        v, lam = w, new
    return float((A @ v).sum() / v.sum())


# --- generating patch ------------------------------------------------------


@dataclass(frozen=True)
class GeneratingPatch:
    patch: Patch
    power: int  # patch is contained in Omega^power(patch)


def is_generating(R: RuleSet, P: Patch, power: int = 1) -> bool:
    return P.tiles <= iterate(R, P, power).tiles


def _cone(R: RuleSet, tile: Tile, x: CycloNum):
    """Directions (start, end) of the sector of ``tile`` at the point x.

    Returns "full" if x is interior and None if x is not in the tile.
    """
    verts = [v + tile.t for v in R.prototiles[tile.proto].support.vertices]
    n = len(verts)
    for k, v in enumerate(verts):
        if v == x:
            return verts[(k + 1) % n] - v, verts[k - 1] - v
    coords = _int_coords(verts + [x])
    xc = coords[-1]
    on_edge = None
    for k in range(n):
        s = _cross_sign(coords[k], coords[(k + 1) % n], xc)
        if s < 0:
            return None
        if s == 0:
            on_edge = k
    if on_edge is None:
        return "full"
    a, b = verts[on_edge], verts[(on_edge + 1) % n]
    return b - a, a - b


def _same_direction(u: CycloNum, v: CycloNum) -> bool:
    from .geometry import cross

    if cross(u, v).sign() != 0:
        return False
    ur, ui = u.re_im()
    vr, vi = v.re_im()
    return (ur * vr + ui * vi).sign() > 0


def covers_neighborhood(R: RuleSet, tiles: Sequence[Tile], x: CycloNum = ZERO) -> bool:
    """Do the given tiles (all containing x, interiors disjoint) cover a disk around x?"""
    cones = []
    for t in tiles:
        c = _cone(R, t, x)
        if c is None:
            return False
        if c == "full":
            return True
        cones.append(c)
    if not cones:
        return False
    used = [False] * len(cones)
    cur = 0
    used[0] = True
    for _ in range(len(cones)):
        end = cones[cur][1]
        nxt = None
        for k, c in enumerate(cones):
            if _same_direction(c[0], end):
                nxt = k
                break
        if nxt is None:
            return False
        if nxt == 0:
            return all(used)
        if used[nxt]:
            return False
        used[nxt] = True
        cur = nxt
    return False


def _incident(R: RuleSet, tiles: Iterable[Tile], x: CycloNum = ZERO) -> List[Tile]:
    out = []
    for t in tiles:
        if R.prototiles[t.proto].support.translate(t.t).contains_point(x):
            out.append(t)
    return sorted(out)


def _seed_clusters(R: RuleSet, depth: int, max_seeds: int):
    """Legal clusters around the origin, cut from iterates of single tiles."""
    for seed in range(min(len(R), max_seeds)):
        P = iterate(R, Patch([Tile(seed, ZERO)]), depth)
        points = sorted({v + t.t for t in P.tiles for v in R.prototiles[t.proto].support.vertices})
        for x in points:
            inc = _incident(R, P.tiles, x)
            if inc and covers_neighborhood(R, inc, x):
                yield frozenset(t.shifted(-x) for t in inc)


def find_generating_patch(
    R: RuleSet, depth: int = 3, max_seeds: int = 16, max_power: int = 2
) -> GeneratingPatch:
    """Search for a patch P around 0 with P ⊆ Ω^p(P) covering a neighborhood of 0.

    Starting from legal clusters around vertices of small iterates, the map
    S -> (tiles of Ω(S) containing 0) is iterated until it cycles; a cycle of
    length p gives P = Ω^p-fixed cluster.  Shortest cycles win; ties go to the
    smaller patch, then to a canonical ordering.
    """
    best = None
    seen: Dict[FrozenSet[Tile], Tuple[int, FrozenSet[Tile]]] = {}
    for start in _seed_clusters(R, depth, max_seeds):
        trail: Dict[FrozenSet[Tile], int] = {}
        state = start
        step = 0
        while state not in trail and state not in seen:
            trail[state] = step
            step += 1
            state = frozenset(_incident(R, apply_to_patch(R, Patch(state)).tiles))
            if step > 10000:
                break
        if state in seen:
            result = seen[state]
        else:
            period = step - trail[state]
            cycle = [state]
            s = state
            for _ in range(period - 1):
                s = frozenset(_incident(R, apply_to_patch(R, Patch(s)).tiles))
                cycle.append(s)
            rep = min(cycle, key=lambda c: (len(c), sorted(c)))
            result = (period, rep)
        for s in trail:
            seen[s] = result
        key = (result[0], len(result[1]), sorted(result[1]))
        if best is None or key < best[0]:
            best = (key, result)
        if best[1][0] == 1:
            break
    if best is None or best[1][0] > max_power:
        raise SubstitutionError("no generating patch within search bounds")
    period, tiles = best[1]
    return GeneratingPatch(Patch(tiles), period)


# --- point sets and diagnostics --------------------------------------------


class MultiColorPointSet:
    """Control points grouped by prototile id."""

    def __init__(self, points: Dict[int, Sequence[CycloNum]]):
        self.points: Dict[int, Tuple[CycloNum, ...]] = {
            i: tuple(sorted(set(pts))) for i, pts in points.items() if pts
        }

    def __len__(self) -> int:
        return sum(len(v) for v in self.points.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiColorPointSet) and self.points == other.points

    def colors(self) -> List[int]:
        return sorted(self.points)

    def support(self) -> List[CycloNum]:
        return sorted({p for pts in self.points.values() for p in pts})


def tiling_to_pointset(P: Patch) -> MultiColorPointSet:
    groups: Dict[int, List[CycloNum]] = {}
    for t in P.tiles:
        groups.setdefault(t.proto, []).append(t.t)
    return MultiColorPointSet(groups)


def pointset_to_tiling(L: MultiColorPointSet) -> Patch:
    return Patch(Tile(i, p) for i, pts in L.points.items() for p in pts)


def inradius_estimate(R: RuleSet, gen: GeneratingPatch, k: int) -> float:
    """Lower bound for the radius of the disk about 0 covered by Ω^k(P)."""
    rho = math.inf
    for t in gen.patch.tiles:
        verts = [v + t.t for v in R.prototiles[t.proto].support.vertices]
        n = len(verts)
        for a_idx in range(n):
            a, b = verts[a_idx], verts[(a_idx + 1) % n]
            if a == ZERO or b == ZERO:
                continue
            ax, ay = a.embed()
            bx, by = b.embed()
            ex, ey = bx - ax, by - ay
            L = math.hypot(ex, ey)
            # distance from 0 to segment ab
            tpar = max(0.0, min(1.0, -(ax * ex + ay * ey) / (L * L)))
            rho = min(rho, math.hypot(ax + tpar * ex, ay + tpar * ey))
    svals = R.expansion.singular_values()
    return rho * min(svals) ** k * (1 - 1e-9)


def _sign_q3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized sign of a + b*sqrt3 for integer arrays."""
    pos = (a >= 0) & (b >= 0) & ((a > 0) | (b > 0))
    neg = (a <= 0) & (b <= 0) & ((a < 0) | (b < 0))
    mixed = ~(pos | neg) & ~((a == 0) & (b == 0))
    aa, bb = a * a, 3 * b * b
    mix_sign = np.where(a > 0, np.sign(aa - bb), np.sign(bb - aa))
    return np.where(pos, 1, np.where(neg, -1, np.where(mixed, mix_sign, 0)))


def _norm4_parts(vec: np.ndarray):
    c0, c1, c2, c3 = (vec[..., k].astype(np.int64) for k in range(4))
    p = 2 * c0 + c2
    q = c1 + 2 * c3
    return p * p + 3 * c1 * c1 + q * q + 3 * c2 * c2, 2 * (p * c1 + q * c2)


def _radius2(radius) -> RealQuad:
    if isinstance(radius, RealQuad):
        return radius * radius
    r = Fraction(radius).limit_denominator(10**6) if isinstance(radius, float) else Fraction(radius)
    return RealQuad(r * r)


def _strictly_within(fr: "IntFrame", d: np.ndarray, r2: RealQuad) -> np.ndarray:
    """|d| < r exactly, for int-frame rows d; r2 = r^2."""
    A, B = _norm4_parts(d)
    # compare A + B sqrt3 against 4 den^2 r2 = (ra + rb sqrt3), cleared of denominators
    ra = r2.a * 4 * fr.den * fr.den
    rb = r2.b * 4 * fr.den * fr.den
    q = math.lcm(ra.denominator, rb.denominator)
    return _sign_q3(int(ra * q) - q * A, int(rb * q) - q * B) > 0


def flc_census(R: RuleSet, types: np.ndarray, pos: np.ndarray, radius, region: float) -> int:
    """Number of translation classes of control-point neighbourhoods.

    The class of a tile is its own type plus every (type, offset) of tiles
    whose control point lies at distance strictly less than ``radius``.  Only
    tiles with control point within ``region`` of the origin are anchors; the
    caller guarantees the patch covers ``region + radius``.
    """
    from scipy.spatial import cKDTree

    fr = R.frame
    xy = fr.embed(pos)
    anchors = np.nonzero(np.einsum("ij,ij->i", xy, xy) <= region * region)[0]
    r2 = _radius2(radius)
    if r2.sign() <= 0:
        return len({int(types[a]) for a in anchors})
    tree = cKDTree(xy)
    near = tree.query_ball_point(xy[anchors], math.sqrt(float(r2)) + 1e-6)
    classes = set()
    for a, nb in zip(anchors, near):
        nb = np.array([b for b in nb if b != a], dtype=np.int64)
        if len(nb):
            d = pos[nb] - pos[a]
            keep = _strictly_within(fr, d, r2)
            rows = np.column_stack([types[nb[keep]], d[keep]])
            rows = rows[np.lexsort(rows.T[::-1])] if len(rows) else rows
            items = tuple(map(tuple, rows.tolist()))
        else:
            items = ()
        classes.add((int(types[a]), items))
    return len(classes)


def meyer_gap(R: RuleSet, pos: np.ndarray, window: float) -> RealQuad:
    """Smallest positive squared distance in (supp Λ - supp Λ) within a window.

    Differences are taken between control points inside the disk of radius
    ``window``.  Floats only nominate candidate pairs; the minimum is decided
    exactly.
    """
    from scipy.spatial import cKDTree

    fr = R.frame
    xy = fr.embed(pos)
    inside = np.einsum("ij,ij->i", xy, xy) <= window * window
    pts = np.unique(pos[inside], axis=0)
    if len(pts) < 2:
        raise SubstitutionError("window too small: fewer than two points")
    diffs = np.unique((pts[:, None, :] - pts[None, :, :]).reshape(-1, 4), axis=0)
    dxy = fr.embed(diffs)
    tree = cKDTree(dxy)
    dist, _ = tree.query(dxy, k=2)
    approx = float(dist[:, 1].min())
    pairs = tree.query_pairs(approx * (1 + 1e-6) + 1e-9, output_type="ndarray")
    best = None
    for a, b in pairs:
        g = fr.to_cyclo(diffs[b] - diffs[a]).norm2()
        if best is None or g < best:
            best = g
    return best
