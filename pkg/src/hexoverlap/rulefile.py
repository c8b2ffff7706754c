"""Plain-text rule files and JSON patch dumps.

A rule file is line oriented; ``#`` starts a comment::

    basis zeta12
    name thue-morse-2d
    expansion 2,0,0,0 0,0,0,0
    prototile a
      support 0,0,0,0 1,0,0,0 1,0,0,1 0,0,0,1
      child a 0,0,0,0
      child b 1,0,0,0

Numbers are elements of Q(zeta_12) written as four rationals ``p`` or
``p/q`` (coefficients of 1, z, z^2, z^3).  ``expansion a b`` is the real-linear
map z -> a z + b conj(z).  Child offsets may name prototiles declared later.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .cyclotomic import CycloNum, Expansion
from .geometry import GeometryError, Polygon
from .substitution import Patch, RuleSet, SubstitutionError, Tile

__all__ = [
    "RuleParseError",
    "parse_rules",
    "format_rules",
    "load_rules",
    "builtin_names",
    "patch_to_json",
    "patch_from_json",
    "arrays_to_json",
]

BUILTINS = {
    "taylor-socolar": None,
    "thue-morse-2d": "thue_morse_2d.rules",
}


class RuleParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int, source: str = "<rules>"):
        super().__init__(f"{source}:{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


def _tokens(line: str) -> List[Tuple[str, int]]:
    """(token, 1-based column) pairs, comments stripped."""
    body = line.split("#", 1)[0]
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]


def _cyclo(tok: str, lineno: int, col: int, source: str) -> CycloNum:
    parts = tok.split(",")
    if len(parts) != 4:
        raise RuleParseError(f"expected 4 comma-separated rationals, got {tok!r}", lineno, col, source)
    coeffs = []
    off = 0
    for p in parts:
        num, sep, den = p.partition("/")
        try:
            n = int(num)
            d = int(den) if sep else 1
        except ValueError:
            raise RuleParseError(f"malformed rational {p!r}", lineno, col + off, source) from None
        if d == 0:
            raise RuleParseError(f"zero denominator in {p!r}", lineno, col + off, source)
        coeffs.append(Fraction(n, d))
        off += len(p) + 1
    return CycloNum(*coeffs)


def parse_rules(text: str, source: str = "<rules>") -> RuleSet:
    basis = None
    name = ""
    expansion = None
    tiles: List[dict] = []
    cur: Optional[dict] = None

    def need(toks, n, lineno, what):
        if len(toks) != n:
            col = toks[min(len(toks), n) - 1][1] if toks else 1
            raise RuleParseError(f"{what}: expected {n - 1} argument(s), got {len(toks) - 1}", lineno, col, source)

    for lineno, line in enumerate(text.splitlines(), 1):
        toks = _tokens(line)
        if not toks:
            continue
        kw, kcol = toks[0]
        if kw == "basis":
            need(toks, 2, lineno, "basis")
            if toks[1][0] != "zeta12":
                raise RuleParseError(f"unsupported basis {toks[1][0]!r}", lineno, toks[1][1], source)
            basis = toks[1][0]
        elif kw == "name":
            need(toks, 2, lineno, "name")
            name = toks[1][0]
        elif kw == "expansion":
            need(toks, 3, lineno, "expansion")
            a = _cyclo(toks[1][0], lineno, toks[1][1], source)
            b = _cyclo(toks[2][0], lineno, toks[2][1], source)
            expansion = Expansion(a, b)
            if not expansion.is_expansive():
                raise RuleParseError("expansion map is not expansive", lineno, kcol, source)
        elif kw == "prototile":
            need(toks, 2, lineno, "prototile")
            label = toks[1][0]
            if any(t["label"] == label for t in tiles):
                raise RuleParseError(f"duplicate prototile {label!r}", lineno, toks[1][1], source)
            cur = {"label": label, "line": lineno, "support": None, "children": []}
            tiles.append(cur)
        elif kw in ("support", "child"):
            if cur is None:
                raise RuleParseError(f"{kw!r} before any prototile", lineno, kcol, source)
            if kw == "support":
                if len(toks) < 4:
                    raise RuleParseError("support needs at least 3 vertices", lineno, kcol, source)
                verts = [_cyclo(t, lineno, c, source) for t, c in toks[1:]]
                try:
                    cur["support"] = Polygon(verts)
                except GeometryError as e:
                    raise RuleParseError(str(e), lineno, toks[1][1], source) from None
            else:
                need(toks, 3, lineno, "child")
                cur["children"].append((toks[1][0], toks[1][1], _cyclo(toks[2][0], lineno, toks[2][1], source), lineno))
        else:
            raise RuleParseError(f"unknown keyword {kw!r}", lineno, kcol, source)

    if basis is None:
        raise RuleParseError("missing 'basis zeta12' header", 1, 1, source)
    if expansion is None:
        raise RuleParseError("missing 'expansion' line", 1, 1, source)
    if not tiles:
        raise RuleParseError("no prototiles", 1, 1, source)
    ids = {t["label"]: k for k, t in enumerate(tiles)}
    protos, children = [], []
    for t in tiles:
        if t["support"] is None:
            raise RuleParseError(f"prototile {t['label']!r} has no support", t["line"], 1, source)
        if not t["children"]:
            raise RuleParseError(f"prototile {t['label']!r} has no children", t["line"], 1, source)
        kids = []
        for lab, col, d, ln in t["children"]:
            if lab not in ids:
                raise RuleParseError(f"unknown child prototile {lab!r}", ln, col, source)
            kids.append((ids[lab], d))
        protos.append((t["label"], t["support"]))
        children.append(kids)
    return RuleSet(protos, expansion, children, name=name)


def format_rules(R: RuleSet) -> str:
    E = R.expansion
    out = ["basis zeta12"]
    if R.name:
        out.append(f"name {R.name}")
    out.append(f"expansion {E.a.serialize()} {E.b.serialize()}")
    for p, kids in zip(R.prototiles, R.children):
        out.append(f"prototile {p.label}")
        out.append("  support " + " ".join(v.serialize() for v in p.support.vertices))
        for i, d in kids:
            out.append(f"  child {R.label(i)} {d.serialize()}")
    return "\n".join(out) + "\n"


def builtin_names() -> List[str]:
    return sorted(BUILTINS)


def load_rules(spec: str) -> RuleSet:
    """``builtin:<name>`` or a path to a rule file."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTINS:
            raise FileNotFoundError(f"unknown builtin {name!r}; have {', '.join(builtin_names())}")
        if BUILTINS[name] is None:
            from .tsdata import build_ruleset

            return build_ruleset()
        text = resources.files("hexoverlap").joinpath("data", BUILTINS[name]).read_text()
        return parse_rules(text, source=spec)
    path = Path(spec)
    return parse_rules(path.read_text(), source=str(path))


# --- patch dumps ----------------------------------------------------------------

_ROT = re.compile(r"_(\d)$")


def _rotation(label: str) -> int:
    m = _ROT.search(label)
    return int(m.group(1)) if m else 0


def arrays_to_json(R: RuleSet, types: np.ndarray, pos: np.ndarray, meta: Optional[dict] = None) -> str:
    fr = R.frame
    recs = []
    rows = sorted(zip(types.tolist(), map(tuple, pos.tolist())))
    for t, p in rows:
        lab = R.label(t)
        recs.append({"label": lab, "n": _rotation(lab), "t": fr.to_cyclo(p).serialize()})
    doc = {"rules": R.name, "count": len(recs), "tiles": recs}
    if meta:
        doc.update(meta)
    return json.dumps(doc, indent=1) + "\n"


def patch_to_json(R: RuleSet, P: Patch, meta: Optional[dict] = None) -> str:
    fr = R.frame
    types = np.array([t.proto for t in P.tiles], dtype=np.int64)
    pos = np.array([fr.to_int(t.t) for t in P.tiles], dtype=np.int64).reshape(-1, 4)
    return arrays_to_json(R, types, pos, meta)


def patch_from_json(R: RuleSet, text: str) -> Patch:
    from .cyclotomic import parse_cyclo

    doc = json.loads(text)
    tiles = []
    for rec in doc["tiles"]:
        tiles.append(Tile(R.id_of(rec["label"]), parse_cyclo(rec["t"])))
    return Patch(tiles)
