"""Overlaps, their inflation graph, and the overlap-coincidence decision.

An overlap class is stored as ``(i, j, delta)``: tile i placed at ``delta``
relative to tile j placed at the origin, where ``delta = (u - y) - v`` for a
representative overlap (u, y, v).  The vector y never needs to be kept; its
image Q^k y is folded into how ``delta`` evolves under inflation:

    (i, j, delta)  ->  (i', j', Q delta + d_i' - d_j')

over all children i' of i and j' of j whose supports still meet.

Internally a class is the integer key ``(i, j, D*delta)`` on the integer
frame of the rule set, which keeps the hot loops in int64.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from . import kernels
from .cyclotomic import CycloNum
from .geometry import Polygon, clip, interiors_intersect
from .substitution import (
    GeneratingPatch,
    Patch,
    RuleSet,
    find_generating_patch,
    inradius_estimate,
    iterate_arrays,
    patch_to_arrays,
)

log = logging.getLogger(__name__)

__all__ = [
    "OverlapError",
    "OverlapClass",
    "ScanPatch",
    "Enumeration",
    "InflationGraph",
    "Verdict",
    "GraphCache",
    "xi_sample",
    "enumerate_classes",
    "inflate_class",
    "build_graph",
    "decide_coincidence",
    "coincidence",
    "rules_digest",
    "default_windows",
]

Key = Tuple[int, int, int, int, int, int]


class OverlapError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class OverlapClass:
    i: int
    j: int
    delta: CycloNum
    _key: Tuple[int, ...] = field(repr=False, compare=False, default=())

    @classmethod
    def from_key(cls, R: RuleSet, key: Sequence[int]) -> "OverlapClass":
        key = tuple(int(x) for x in key)
        return cls(key[0], key[1], R.frame.to_cyclo(key[2:]), key)

    def key(self, R: RuleSet) -> Key:
        if self._key:
            return self._key
        return (self.i, self.j) + tuple(int(x) for x in R.frame.to_int(self.delta))

    @property
    def is_coincidence(self) -> bool:
        return self.i == self.j and not self.delta

    def support(self, R: RuleSet) -> Optional[Polygon]:
        """The overlap region clip(delta + A_i, A_j) in the frame of tile j."""
        return clip(R.prototiles[self.i].support.translate(self.delta), R.prototiles[self.j].support)

    def describe(self, R: RuleSet) -> str:
        return f"({R.label(self.i)}, {R.label(self.j)}, {self.delta.serialize()})"


def _is_coincidence_key(k: Sequence[int]) -> bool:
    return k[0] == k[1] and k[2] == 0 and k[3] == 0 and k[4] == 0 and k[5] == 0


# --- exact geometry filter, memoized per (shape_i, shape_j, delta) ---------


class _Geometry:
    def __init__(self, shapes: Sequence[Polygon], shape_of: np.ndarray, den: int):
        self.shapes = list(shapes)
        self.shape_of = np.asarray(shape_of, dtype=np.int64)
        self.den = den
        self.memo: Dict[Tuple[int, ...], bool] = {}

    def test(self, si: int, sj: int, d: Sequence[int]) -> bool:
        key = (si, sj) + tuple(d)
        hit = self.memo.get(key)
        if hit is None:
            shift = CycloNum(*(_frac(x, self.den) for x in d))
            hit = interiors_intersect(self.shapes[si], self.shapes[sj], shift=shift)
            self.memo[key] = hit
        return hit

    def mask(self, rows: np.ndarray) -> np.ndarray:
        """rows: (n, 6) keys; True where the interiors meet."""
        if len(rows) == 0:
            return np.zeros(0, dtype=bool)
        g = np.column_stack([self.shape_of[rows[:, 0]], self.shape_of[rows[:, 1]], rows[:, 2:6]])
        uniq, inv = np.unique(g, axis=0, return_inverse=True)
        res = np.fromiter((self.test(int(u[0]), int(u[1]), u[2:].tolist()) for u in uniq), dtype=bool, count=len(uniq))
        return res[inv.reshape(-1)]


def _frac(x: int, den: int):
    from fractions import Fraction

    return Fraction(int(x), den)


def _geometry(R: RuleSet) -> _Geometry:
    g = getattr(R, "_overlap_geometry", None)
    if g is None:
        g = _Geometry(R.shapes, R.frame.shape, R.frame.den)
        R._overlap_geometry = g
    return g


# --- scanning ------------------------------------------------------------------


@dataclass
class ScanPatch:
    """Ω^k(P) as integer arrays, with a certified covered radius about 0."""

    k: int
    types: np.ndarray
    pos: np.ndarray
    xy: np.ndarray
    radius: float

    @classmethod
    def build(cls, R: RuleSet, gen: GeneratingPatch, k: int) -> "ScanPatch":
        t0, p0 = patch_to_arrays(R, gen.patch)
        types, pos = iterate_arrays(R, t0, p0, k)
        pos = np.ascontiguousarray(pos)
        return cls(k, types, pos, np.ascontiguousarray(R.frame.embed(pos)), inradius_estimate(R, gen, k))

    def inside(self, window: float) -> np.ndarray:
        r2 = np.einsum("ij,ij->i", self.xy, self.xy)
        return np.nonzero(r2 <= window * window)[0]


def _xi_array(R: RuleSet, sp: ScanPatch, window: float) -> np.ndarray:
    if window > sp.radius:
        raise OverlapError(f"window {window} exceeds the covered radius {sp.radius:.3f} of the patch")
    win = sp.inside(window)
    parts = [np.zeros((1, 4), dtype=np.int64)]
    types = sp.types[win]
    for t in np.unique(types):
        P = sp.pos[win[types == t]]
        parts.append((P[:, None, :] - P[None, :, :]).reshape(-1, 4))
    return np.unique(np.concatenate(parts), axis=0)


def xi_sample(R: RuleSet, sp: ScanPatch, window: float) -> Set[CycloNum]:
    """Differences of same-type control points within ``window`` of the origin."""
    fr = R.frame
    return {fr.to_cyclo(v) for v in _xi_array(R, sp, window)}


def _decode(keys: np.ndarray, ntypes: int, cb: int) -> np.ndarray:
    B = 2 * cb + 1
    out = np.empty((len(keys), 6), dtype=np.int64)
    k = keys.astype(np.int64)
    for col in (5, 4, 3, 2):
        k, r = np.divmod(k, B)
        out[:, col] = r - cb
    out[:, 0], out[:, 1] = np.divmod(k, ntypes)
    return out


def _sort_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows.reshape(0, 6)
    rows = np.unique(rows, axis=0)
    return rows


def scan_classes(R: RuleSet, sp: ScanPatch, window: float, xi: Optional[np.ndarray] = None) -> Tuple[np.ndarray, dict]:
    """Overlap classes seen with anchors and Ξ both drawn from the window."""
    fr = R.frame
    if xi is None:
        xi = _xi_array(R, sp, window)
    anchors = sp.inside(window)
    m = len(R)
    cb = 64 * fr.den
    while True:
        if m * m * float(2 * cb + 1) ** 4 >= 2.0**62:
            raise OverlapError("overlap displacements too large to pack scan keys")
        keys, overflow = kernels.scan_overlaps(
            sp.pos,
            sp.types,
            sp.xy,
            np.ascontiguousarray(anchors, dtype=np.int64),
            np.ascontiguousarray(xi, dtype=np.int64),
            np.ascontiguousarray(fr.embed(xi)),
            int(fr.reach_bound),
            float(fr.reach + 0.5),
            m,
            cb,
        )
        if not overflow:
            break
        cb *= 2
    rows = _decode(np.sort(keys), m, cb)
    rows = rows[_geometry(R).mask(rows)]
    info = {"k": sp.k, "window": window, "anchors": len(anchors), "xi": len(xi), "candidates": len(keys)}
    return _sort_rows(rows), info


# --- inflation -------------------------------------------------------------------


def _inflate_rows(R: RuleSet, rows: np.ndarray, geom: Optional[_Geometry] = None) -> np.ndarray:
    """(parent_row, child key...) for all interior-meeting child pairs."""
    fr = R.frame
    raw = kernels.inflate_classes(
        np.ascontiguousarray(rows, dtype=np.int64), fr.qmat, fr.child_type, fr.child_off, int(fr.reach_bound)
    )
    geom = geom or _geometry(R)
    return raw[geom.mask(raw[:, 1:])]


def inflate_class(R: RuleSet, C: OverlapClass) -> Set[OverlapClass]:
    rows = np.array([C.key(R)], dtype=np.int64)
    return {OverlapClass.from_key(R, r[1:]) for r in _inflate_rows(R, rows)}


# worker-side state for process pools
_W: dict = {}


def _worker_init(qmat, child_type, child_off, reach_bound, shapes, shape_of, den):
    _W.update(
        qmat=qmat,
        child_type=child_type,
        child_off=child_off,
        reach_bound=reach_bound,
        geom=_Geometry(shapes, shape_of, den),
    )


def _worker_inflate(rows: np.ndarray) -> np.ndarray:
    raw = kernels.inflate_classes(rows, _W["qmat"], _W["child_type"], _W["child_off"], _W["reach_bound"])
    return raw[_W["geom"].mask(raw[:, 1:])]


def _chunks(a: np.ndarray, n: int) -> List[np.ndarray]:
    size = max(1, math.ceil(len(a) / n))
    return [np.ascontiguousarray(a[s:s + size]) for s in range(0, len(a), size)]


class _Closer:
    """Closure under inflation; serial or over a process pool, same result."""

    def __init__(self, R: RuleSet, workers: int = 1):
        self.R = R
        self.workers = max(1, int(workers))
        self.pool = None
        if self.workers > 1:
            fr = R.frame
            self.pool = ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=_worker_init,
                initargs=(fr.qmat, fr.child_type, fr.child_off, int(fr.reach_bound), list(R.shapes), fr.shape, fr.den),
            )

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    def inflate(self, rows: np.ndarray) -> np.ndarray:
        if len(rows) == 0:
            return np.zeros((0, 7), dtype=np.int64)
        if self.pool is None:
            return _inflate_rows(self.R, rows)
        parts = _chunks(rows, self.workers * 4)
        offs = np.cumsum([0] + [len(p) for p in parts[:-1]])
        outs = list(self.pool.map(_worker_inflate, parts))
        for o, off in zip(outs, offs):
            o[:, 0] += off
        return np.concatenate(outs)

    def run(self, seed: np.ndarray):
        """Returns (sorted node rows, edge index pairs, number of nodes added)."""
        index: Dict[Tuple[int, ...], int] = {}
        nodes: List[Tuple[int, ...]] = []
        for r in _sort_rows(np.asarray(seed, dtype=np.int64).reshape(-1, 6)).tolist():
            index[tuple(r)] = len(nodes)
            nodes.append(tuple(r))
        start = len(nodes)
        edges: Set[Tuple[int, int]] = set()
        frontier = list(range(len(nodes)))
        while frontier:
            rows = np.array([nodes[f] for f in frontier], dtype=np.int64)
            out = self.inflate(rows)
            has = np.zeros(len(rows), dtype=bool)
            has[out[:, 0]] = True
            if not has.all():
                bad = nodes[frontier[int(np.argmin(has))]]
                raise OverlapError(f"class {bad} has no successor; supports cannot lose their overlap")
            new = []
            for r in out.tolist():
                key = tuple(r[1:])
                t = index.get(key)
                if t is None:
                    t = index[key] = len(nodes)
                    nodes.append(key)
                    new.append(t)
                edges.add((frontier[r[0]], t))
            frontier = new
        added = len(nodes) - start
        # canonical numbering: lexicographic by key
        order = sorted(range(len(nodes)), key=nodes.__getitem__)
        renum = {old: new for new, old in enumerate(order)}
        rows = np.array([nodes[o] for o in order], dtype=np.int64).reshape(-1, 6)
        ed = sorted((renum[a], renum[b]) for a, b in edges)
        return rows, ed, added


# --- enumeration with stabilization ---------------------------------------------


def default_windows(R: RuleSet, max_window: float = 64.0) -> List[float]:
    """Geometric window schedule starting at twice the overlap reach."""
    fr = R.frame
    w = 2.0 * fr.reach
    out = []
    while w <= max_window * (1 + 1e-9):
        out.append(round(w, 6))
        w *= math.sqrt(2.0)
    return out


def _depth_for(R: RuleSet, gen: GeneratingPatch, need: float, max_depth: int = 12) -> int:
    for k in range(max_depth + 1):
        if inradius_estimate(R, gen, k) >= need:
            return k
    raise OverlapError(f"no depth <= {max_depth} covers radius {need}")


@dataclass
class Enumeration:
    rows: np.ndarray
    history: List[dict]
    stable: bool
    closure_added: int = 0

    def classes(self, R: RuleSet) -> List[OverlapClass]:
        return [OverlapClass.from_key(R, r) for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


def _edge_rows(R: RuleSet, rows: np.ndarray) -> Set[Tuple[int, ...]]:
    out = _inflate_rows(R, rows)
    return {tuple(rows[r[0]].tolist()) + tuple(r[1:].tolist()) for r in out}


def enumerate_classes(
    R: RuleSet,
    gen: Optional[GeneratingPatch] = None,
    windows: Optional[Sequence[float]] = None,
    stable_after: int = 2,
) -> Enumeration:
    """Scan growing windows until the classes and their edges stop changing.

    Each increment scans anchors and Ξ inside the window on an iterate whose
    covered radius reaches three windows (so every target p - y is inside).
    Classes accumulate across increments; the run is stable once
    ``stable_after`` consecutive increments add neither classes nor edges.
    The result is *not* yet closed under inflation (see :func:`build_graph`).
    """
    gen = gen or find_generating_patch(R)
    windows = list(windows) if windows is not None else default_windows(R)
    reach = R.frame.reach
    seen: Set[Tuple[int, ...]] = set()
    edges: Set[Tuple[int, ...]] = set()
    history: List[dict] = []
    quiet = 0
    sp = None
    for w in windows:
        k = _depth_for(R, gen, 3 * w + 2 * reach)
        if sp is None or sp.k != k:
            sp = ScanPatch.build(R, gen, k)
        t0 = time.perf_counter()
        rows, info = scan_classes(R, sp, w)
        fresh = {tuple(r) for r in rows.tolist()} - seen
        seen |= fresh
        allrows = np.array(sorted(seen), dtype=np.int64).reshape(-1, 6)
        new_edges = _edge_rows(R, allrows) - edges
        edges |= new_edges
        info.update(found=len(rows), total=len(seen), new=len(fresh), edges=len(edges), new_edges=len(new_edges))
        info["seconds"] = round(time.perf_counter() - t0, 3)
        history.append(info)
        log.info("scan %s", info)
        quiet = quiet + 1 if not fresh and not new_edges and len(history) > 1 else 0
        if quiet >= stable_after:
            return Enumeration(allrows, history, True)
    rows = np.array(sorted(seen), dtype=np.int64).reshape(-1, 6)
    return Enumeration(rows, history, False)


# --- the graph ------------------------------------------------------------------


class InflationGraph:
    """Closed inflation graph; nodes are integer class keys in sorted order."""

    def __init__(self, rows: np.ndarray, edges: Iterable[Tuple[int, int]]):
        self.rows = np.asarray(rows, dtype=np.int64).reshape(-1, 6)
        n = len(self.rows)
        succ: List[List[int]] = [[] for _ in range(n)]
        for a, b in sorted(set(edges)):
            succ[a].append(b)
        self.succ = [tuple(s) for s in succ]
        self.coincident = np.array([_is_coincidence_key(r) for r in self.rows.tolist()], dtype=bool)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return [(a, b) for a, s in enumerate(self.succ) for b in s]

    def index(self, key: Sequence[int]) -> int:
        k = np.asarray(key, dtype=np.int64)
        hit = np.nonzero((self.rows == k).all(axis=1))[0]
        if not len(hit):
            raise KeyError(tuple(key))
        return int(hit[0])

    def check(self) -> None:
        n = len(self)
        for a, s in enumerate(self.succ):
            if not s:
                raise OverlapError(f"node {a} has no successor")
            if any(b < 0 or b >= n for b in s):
                raise OverlapError(f"edge target out of range at node {a}")
            if self.coincident[a] and not any(self.coincident[b] for b in s):
                raise OverlapError(f"coincidence node {a} has no coincidence successor")

    def to_networkx(self) -> nx.DiGraph:
        G = nx.DiGraph()
        G.add_nodes_from(range(len(self)))
        G.add_edges_from(self.edges)
        return G

    def serialize(self) -> str:
        lines = ["hexoverlap-graph 1", f"nodes {len(self)}"]
        for r, c in zip(self.rows.tolist(), self.coincident.tolist()):
            lines.append(" ".join(str(x) for x in r) + (" C" if c else " -"))
        ed = self.edges
        lines.append(f"edges {len(ed)}")
        lines.extend(f"{a} {b}" for a, b in ed)
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "InflationGraph":
        it = iter(text.splitlines())
        if next(it, "") != "hexoverlap-graph 1":
            raise ValueError("not a graph file")
        n = int(next(it).split()[1])
        rows = [[int(x) for x in next(it).split()[:6]] for _ in range(n)]
        m = int(next(it).split()[1])
        ed = [tuple(int(x) for x in next(it).split()) for _ in range(m)]
        return cls(np.array(rows, dtype=np.int64).reshape(-1, 6), ed)

    def digest(self) -> str:
        return hashlib.sha256(self.serialize().encode()).hexdigest()


def build_graph(R: RuleSet, classes, workers: int = 1) -> Tuple[InflationGraph, int]:
    """Close ``classes`` under inflation and wire the edges.

    ``classes`` is an :class:`Enumeration`, an (n, 6) key array, or an
    iterable of :class:`OverlapClass`.  Returns the graph and the number of
    nodes the closure had to add.
    """
    if isinstance(classes, Enumeration):
        seed = classes.rows
    elif isinstance(classes, np.ndarray):
        seed = classes
    else:
        seed = np.array([c.key(R) for c in classes], dtype=np.int64).reshape(-1, 6)
    closer = _Closer(R, workers)
    try:
        rows, edges, added = closer.run(seed)
    finally:
        closer.close()
    G = InflationGraph(rows, edges)
    G.check()
    return G, added


# --- the decision -----------------------------------------------------------------


@dataclass
class Verdict:
    result: str  # "YES", "NO" or "INCONCLUSIVE"
    ell: Optional[int] = None
    witness: List[Tuple[int, ...]] = field(default_factory=list)
    nodes: int = 0
    edges: int = 0
    details: dict = field(default_factory=dict)

    @property
    def coincidence(self) -> Optional[bool]:
        return {"YES": True, "NO": False}.get(self.result)


def distances_to_coincidence(G: InflationGraph) -> np.ndarray:
    """Shortest number of inflations from each node to a coincidence (-1: never)."""
    n = len(G)
    pred: List[List[int]] = [[] for _ in range(n)]
    for a, s in enumerate(G.succ):
        for b in s:
            pred[b].append(a)
    dist = np.full(n, -1, dtype=np.int64)
    frontier = [int(x) for x in np.nonzero(G.coincident)[0]]
    dist[frontier] = 0
    d = 0
    while frontier:
        d += 1
        nxt = []
        for b in frontier:
            for a in pred[b]:
                if dist[a] < 0:
                    dist[a] = d
                    nxt.append(a)
        frontier = nxt
    return dist


def decide_coincidence(G: InflationGraph) -> Verdict:
    dist = distances_to_coincidence(G)
    n_edges = sum(len(s) for s in G.succ)
    if (dist >= 0).all():
        ell = int(dist.max()) if len(dist) else 0
        return Verdict("YES", ell=ell, nodes=len(G), edges=n_edges)
    bad = [int(x) for x in np.nonzero(dist < 0)[0]]
    H = G.to_networkx().subgraph(bad)
    cond = nx.condensation(H)
    witness: List[int] = []
    for c in cond.nodes:
        if cond.out_degree(c) == 0:
            witness.extend(cond.nodes[c]["members"])
    keys = [tuple(G.rows[w].tolist()) for w in sorted(witness)]
    return Verdict("NO", witness=keys, nodes=len(G), edges=n_edges, details={"unreached": len(bad)})


# --- cache and the whole pipeline --------------------------------------------------


def rules_digest(R: RuleSet) -> str:
    h = hashlib.sha256()
    E = R.expansion
    h.update(f"E {E.a.serialize()} {E.b.serialize()}\n".encode())
    for p, kids in zip(R.prototiles, R.children):
        h.update(f"{p.label} ".encode())
        h.update(";".join(v.serialize() for v in p.support.vertices).encode())
        for i, d in kids:
            h.update(f" {R.label(i)}@{d.serialize()}".encode())
        h.update(b"\n")
    return h.hexdigest()


CACHE_ENV = "HEXOVERLAP_CACHE_DIR"


class GraphCache:
    def __init__(self, directory: Optional[os.PathLike] = None):
        d = directory or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "hexoverlap"
        self.dir = Path(d)

    def path(self, R: RuleSet, tag: str = "") -> Path:
        key = rules_digest(R)
        if tag:
            key = hashlib.sha256((key + tag).encode()).hexdigest()
        return self.dir / f"{key[:32]}.graph"

    def load(self, R: RuleSet, tag: str = "") -> Optional[InflationGraph]:
        p = self.path(R, tag)
        if not p.exists():
            return None
        try:
            return InflationGraph.parse(p.read_text())
        except (ValueError, StopIteration, IndexError):
            log.warning("ignoring unreadable cache file %s", p)
            return None

    def store(self, R: RuleSet, G: InflationGraph, tag: str = "") -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.path(R, tag)
        tmp = p.with_suffix(".tmp")
        tmp.write_text(G.serialize())
        tmp.replace(p)
        return p

    def clear(self) -> int:
        if not self.dir.exists():
            return 0
        n = 0
        for p in self.dir.glob("*.graph"):
            p.unlink()
            n += 1
        return n


def coincidence(
    R: RuleSet,
    gen: Optional[GeneratingPatch] = None,
    windows: Optional[Sequence[float]] = None,
    workers: int = 1,
    cache: Optional[GraphCache] = None,
) -> Verdict:
    """Enumerate, close, decide.  Uses and fills ``cache`` when given."""
    t0 = time.perf_counter()
    tag = "" if windows is None else ",".join(str(w) for w in windows)
    if cache is not None:
        G = cache.load(R, tag)
        if G is not None:
            G.check()
            v = decide_coincidence(G)
            v.details.update(cache_hit=True, seconds=round(time.perf_counter() - t0, 3))
            return v
    en = enumerate_classes(R, gen, windows)
    if not en.stable:
        return Verdict(
            "INCONCLUSIVE",
            nodes=len(en),
            details={"history": en.history, "advice": "raise the window bound", "seconds": round(time.perf_counter() - t0, 3)},
        )
    G, added = build_graph(R, en, workers=workers)
    v = decide_coincidence(G)
    v.details.update(history=en.history, closure_added=added, cache_hit=False, scanned=len(en), digest=G.digest())
    if cache is not None:
        v.details["cache_file"] = str(cache.store(R, G, tag))
    v.details["seconds"] = round(time.perf_counter() - t0, 3)
    return v
