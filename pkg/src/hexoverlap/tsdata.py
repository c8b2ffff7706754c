"""The Taylor-Socolar half-hexagon substitution.

168 prototiles (S_X)_n: a letter A..G, optionally barred, a chirality L/R and
a rotation n mod 6, with (S_X)_n = omega^n (S_X)_0.  The expansion is
Q z = -2 zeta^2 conj(z): scaling by 2 after a reflection.

The 28 rule families are kept below as text in tabular form
``child rotation offset``; the rotation column is the constant c of the index
c - n.  The support polygons are not given as data: :func:`derive_support_geometry`
searches a small space of half-hexagon placements and keeps the one under
which every rule tiles its inflated parent exactly.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .cyclotomic import OMEGA, ZERO, ZETA, CycloNum, Expansion, RealQuad, zeta_pow
from .geometry import Polygon
from .substitution import RuleSet, SubstitutionError, validate_ruleset

log = logging.getLogger(__name__)

__all__ = [
    "TSLabel",
    "LETTERS",
    "RULE_TABLE",
    "OFFSETS",
    "ts_constants",
    "all_labels",
    "parse_label",
    "rule_families",
    "instantiate_rules",
    "rotation_checksum",
    "half_hexagon",
    "derive_support_geometry",
    "build_ruleset",
]

LETTERS = "ABCDEFG"

# u = zeta, omega = zeta^2
OFFSETS: Dict[str, CycloNum] = {
    "0": ZERO,
    "2u": 2 * ZETA,
    "2w4u": 2 * zeta_pow(9),
    "w5u": zeta_pow(11),
    "4w5u": 4 * zeta_pow(11),
}

# parent : child index offset | ...   ('b' marks a barred letter; the index is
# the rotation subscript in terms of the parent's rotation n)
RULE_TABLE = """
A_L  : Gb_L 2-n  0    | Db_L 1-n  2u   | Cb_R 1-n  w5u  | G_R  3-n  4w5u
A_R  : A_R  -n   0    | D_R  1-n  2w4u | Cb_L 1-n  w5u  | Ab_L 5-n  4w5u
Ab_L : Ab_L 2-n  0    | Db_L 1-n  2u   | C_R  1-n  w5u  | A_R  3-n  4w5u
Ab_R : G_R  -n   0    | D_R  1-n  2w4u | C_L  1-n  w5u  | Gb_L 5-n  4w5u
B_L  : B_L  2-n  0    | Fb_L 1-n  2u   | Cb_R 1-n  w5u  | G_R  3-n  4w5u
B_R  : Gb_R -n   0    | F_R  1-n  2w4u | Cb_L 1-n  w5u  | Ab_L 5-n  4w5u
Bb_L : G_L  2-n  0    | Fb_L 1-n  2u   | C_R  1-n  w5u  | A_R  3-n  4w5u
Bb_R : Bb_R -n   0    | F_R  1-n  2w4u | C_L  1-n  w5u  | Gb_L 5-n  4w5u
C_L  : F_L  2-n  0    | E_L  1-n  2u   | Cb_R 1-n  w5u  | Fb_R 3-n  4w5u
C_R  : Db_R -n   0    | Eb_R 1-n  2w4u | Cb_L 1-n  w5u  | D_L  5-n  4w5u
Cb_L : D_L  2-n  0    | E_L  1-n  2u   | C_R  1-n  w5u  | Db_R 3-n  4w5u
Cb_R : Fb_R -n   0    | Eb_R 1-n  2w4u | C_L  1-n  w5u  | F_L  5-n  4w5u
D_L  : Bb_L 2-n  0    | Db_L 1-n  2u   | Cb_R 1-n  w5u  | B_R  3-n  4w5u
D_R  : Ab_R -n   0    | E_R  1-n  2w4u | Cb_L 1-n  w5u  | A_L  5-n  4w5u
Db_L : A_L  2-n  0    | Eb_L 1-n  2u   | C_R  1-n  w5u  | Ab_R 3-n  4w5u
Db_R : B_R  -n   0    | D_R  1-n  2w4u | C_L  1-n  w5u  | Bb_L 5-n  4w5u
E_L  : B_L  2-n  0    | Eb_L 1-n  2u   | Cb_R 1-n  w5u  | Bb_R 3-n  4w5u
E_R  : Gb_R -n   0    | E_R  1-n  2w4u | Cb_L 1-n  w5u  | G_L  5-n  4w5u
Eb_L : G_L  2-n  0    | Eb_L 1-n  2u   | C_R  1-n  w5u  | Gb_R 3-n  4w5u
Eb_R : Bb_R -n   0    | E_R  1-n  2w4u | C_L  1-n  w5u  | B_L  5-n  4w5u
F_L  : B_L  2-n  0    | Fb_L 1-n  2u   | Cb_R 1-n  w5u  | B_R  3-n  4w5u
F_R  : Gb_R -n   0    | E_R  1-n  2w4u | Cb_L 1-n  w5u  | A_L  5-n  4w5u
Fb_L : G_L  2-n  0    | Eb_L 1-n  2u   | C_R  1-n  w5u  | Ab_R 3-n  4w5u
Fb_R : Bb_R -n   0    | F_R  1-n  2w4u | C_L  1-n  w5u  | Bb_L 5-n  4w5u
G_L  : Bb_L 2-n  0    | Db_L 1-n  2u   | Cb_R 1-n  w5u  | G_R  3-n  4w5u
G_R  : Ab_R -n   0    | F_R  1-n  2w4u | Cb_L 1-n  w5u  | Ab_L 5-n  4w5u
Gb_L : A_L  2-n  0    | Fb_L 1-n  2u   | C_R  1-n  w5u  | A_R  3-n  4w5u
Gb_R : B_R  -n   0    | D_R  1-n  2w4u | C_L  1-n  w5u  | Gb_L 5-n  4w5u
"""


class TSLabel(NamedTuple):
    letter: str
    barred: bool
    chirality: str
    rotation: int

    @property
    def family(self) -> str:
        return f"{self.letter}{'b' if self.barred else ''}_{self.chirality}"

    def __str__(self) -> str:
        return f"{self.letter}{'bar' if self.barred else ''}_{self.chirality}_{self.rotation}"

    @property
    def id(self) -> int:
        return ((LETTERS.index(self.letter) * 2 + self.barred) * 2 + (self.chirality == "R")) * 6 + self.rotation


_LABEL_RE = re.compile(r"^([A-G])(bar)?_([LR])_([0-5])$")


def parse_label(text: str) -> TSLabel:
    m = _LABEL_RE.match(text)
    if not m:
        raise ValueError(f"not a Taylor-Socolar label: {text!r}")
    return TSLabel(m.group(1), bool(m.group(2)), m.group(3), int(m.group(4)))


def all_labels() -> List[TSLabel]:
    out = [
        TSLabel(letter, barred, chir, n)
        for letter in LETTERS
        for barred in (False, True)
        for chir in "LR"
        for n in range(6)
    ]
    assert [lab.id for lab in out] == list(range(168))
    return out


def _family_label(fam: str, n: int) -> TSLabel:
    name, chir = fam.split("_")
    return TSLabel(name[0], name.endswith("b"), chir, n % 6)


class Term(NamedTuple):
    child: str  # family, e.g. "Gb_L"
    rot: int  # constant c of the index c + k*n
    coef: int  # k, the coefficient of n
    offset: str  # key of OFFSETS


_INDEX_RE = re.compile(r"^(-?\d*)([+-]?)n$")


def _parse_index(text: str) -> Tuple[int, int]:
    m = _INDEX_RE.match(text)
    if not m:
        raise ValueError(f"bad rotation index {text!r}")
    const, sign = m.groups()
    if const in ("", "-") and not sign:
        # "-n" or "n"
        return 0, -1 if const == "-" else 1
    return int(const), -1 if sign == "-" else 1


@lru_cache(maxsize=None)
def rule_families() -> Dict[str, Tuple[Term, ...]]:
    """The 28 rule families, keyed by parent family ("A_L", "Ab_R", ...)."""
    fams: Dict[str, Tuple[Term, ...]] = {}
    for line in RULE_TABLE.strip().splitlines():
        parent, _, rhs = line.partition(":")
        terms = []
        for chunk in rhs.split("|"):
            child, index, off = chunk.split()
            terms.append(Term(child, *_parse_index(index), off))
        fams[parent.strip()] = tuple(terms)
    return fams


def ts_constants() -> Tuple[Expansion, CycloNum, CycloNum]:
    """(Q, omega, u) with Q z = -2 zeta^2 conj(z), omega = zeta^2, u = zeta."""
    return Expansion(ZERO, -2 * OMEGA), OMEGA, ZETA


def instantiate_rules(rotate_offsets: bool = True) -> List[List[Tuple[int, CycloNum]]]:
    """Children for all 168 prototiles, indexed by TSLabel.id.

    The table fixes the offsets at their n = 0 values.  Since
    Q(omega^n A) = omega^-n Q(A), the offsets for rotation n are omega^-n times
    the tabulated ones; ``rotate_offsets=False`` gives the literal reading, which
    only tiles correctly at n = 0.
    """
    fams = rule_families()
    children: List[List[Tuple[int, CycloNum]]] = [[] for _ in range(168)]
    for lab in all_labels():
        rot = zeta_pow(-2 * lab.rotation) if rotate_offsets else zeta_pow(0)
        for term in fams[lab.family]:
            child = _family_label(term.child, term.rot + term.coef * lab.rotation)
            children[lab.id].append((child.id, OFFSETS[term.offset] * rot))
    return children


def rotation_checksum(children: Sequence[Sequence[Tuple[int, CycloNum]]]) -> List[str]:
    """Compare every rule against the n = 0 rule conjugated by omega^n.

    Rule (S_X)_n must equal rule (S_X)_0 with child rotations shifted by -n and
    offsets multiplied by omega^-n.  Returns the labels that disagree.
    """
    labels = all_labels()
    bad = []
    for lab in labels:
        rot = zeta_pow(-2 * lab.rotation)
        expect = []
        for cid, d in children[lab._replace(rotation=0).id]:
            c = labels[cid]
            expect.append((c._replace(rotation=(c.rotation - lab.rotation) % 6).id, d * rot))
        if list(children[lab.id]) != expect:
            bad.append(str(lab))
    return bad


# --- support geometry -------------------------------------------------------


def half_hexagon(edge: RealQuad, direction: int, side: int) -> Polygon:
    """Half of a regular hexagon cut along a long diagonal.

    The long base runs from the origin along zeta^direction with length
    2*edge; ``side`` = +1 puts the tile to the left of the base, -1 to the right.
    """
    e = zeta_pow(direction) * edge.to_cyclo()
    if side > 0:
        verts = [ZERO, 2 * e, e * (2 + zeta_pow(4)), e * zeta_pow(2)]
    else:
        verts = [ZERO, e * zeta_pow(-2), e * (2 + zeta_pow(-4)), 2 * e]
    return Polygon(verts)


EDGE_CANDIDATES = (RealQuad(1), RealQuad(0, Fraction(2, 3)))  # 1 and 2/sqrt3


@dataclass(frozen=True)
class SupportGeometry:
    edge: RealQuad
    left: Tuple[int, int]  # (direction, side) of the base L tile
    right: Tuple[int, int]
    P_L: Polygon
    P_R: Polygon


def _supports(P_L: Polygon, P_R: Polygon, ids: Optional[Sequence[int]] = None) -> Dict[int, Polygon]:
    labels = all_labels()
    sup = {}
    for k in range(168) if ids is None else ids:
        lab = labels[k]
        base = P_L if lab.chirality == "L" else P_R
        sup[k] = base.rotate(2 * lab.rotation)
    return sup


def _inflated(poly: Polygon) -> Polygon:
    Q, _, _ = ts_constants()
    return Polygon(poly.map(Q, reverse=True).vertices)


def _geometric_ok(P_L: Polygon, P_R: Polygon, children, probe: Sequence[int]) -> bool:
    """Validate only the rules in ``probe``."""
    from .geometry import cover_report

    need = set(probe) | {i for j in probe for i, _ in children[j]}
    sup = _supports(P_L, P_R, sorted(need))
    for j in probe:
        kids = [sup[i].translate(d) for i, d in children[j]]
        try:
            if cover_report(_inflated(sup[j]), kids):
                return False
        except Exception:
            return False
    return True


def _self_child_fits(P: Polygon, rot: int) -> bool:
    """Is the offset-0 child (this chirality, rotation ``rot``) inside Q(P)?"""
    parent = _inflated(P)
    return all(parent.contains_point(v) for v in P.rotate(2 * rot).vertices)


@lru_cache(maxsize=None)
def derive_support_geometry(all_solutions: bool = False):
    """Find half-hexagon supports under which every rule tiles exactly.

    Candidates: edge length in {1, 2/sqrt3}, base direction k*pi/6, and the
    side of the base for each chirality (which fixes the control vertex as an
    end of the cut line).  Each chirality is first screened on its own via the
    offset-0 child of its n = 0 rule; geometry depends only on chirality and
    rotation, so the 12 rules of letter A then decide, and the winner is
    checked on all 168 by :func:`build_ruleset` callers.
    """
    children = instantiate_rules()
    labels = all_labels()
    probe = list(range(24))  # letter A, both chiralities, all rotations
    a_l0 = labels[0]
    a_r0 = labels[6]
    rot_l = labels[children[a_l0.id][0][0]].rotation
    rot_r = labels[children[a_r0.id][0][0]].rotation
    solutions = []
    for edge in EDGE_CANDIDATES:
        cands = [(k, s, half_hexagon(edge, k, s)) for k in range(12) for s in (1, -1)]
        lefts = [c for c in cands if _self_child_fits(c[2], rot_l)]
        rights = [c for c in cands if _self_child_fits(c[2], rot_r)]
        for kl, sl, PL in lefts:
            for kr, sr, PR in rights:
                if not _geometric_ok(PL, PR, children, [a_l0.id, a_r0.id]):
                    continue
                if not _geometric_ok(PL, PR, children, probe):
                    continue
                solutions.append(SupportGeometry(edge, (kl, sl), (kr, sr), PL, PR))
    if all_solutions:
        return tuple(solutions)
    if not solutions:
        raise SubstitutionError("geometry derivation failed")
    if len(solutions) > 1:
        log.info("%d support geometries validate; taking the first", len(solutions))
    return solutions[0]


def build_ruleset(validate: bool = False) -> RuleSet:
    geo = derive_support_geometry()
    Q, _, _ = ts_constants()
    sup = _supports(geo.P_L, geo.P_R)
    protos = [(str(lab), sup[lab.id]) for lab in all_labels()]
    R = RuleSet(protos, Q, instantiate_rules(), name="taylor-socolar")
    if validate:
        rep = validate_ruleset(R)
        if not rep.ok:
            raise SubstitutionError("\n".join(rep.lines(R)))
    return R
