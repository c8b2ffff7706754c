from fractions import Fraction

import numpy as np
import pytest

from hexoverlap.cyclotomic import ZERO, CycloNum, zeta_pow
from hexoverlap.geometry import area, clip, interiors_intersect
from hexoverlap.overlap import (
    CACHE_ENV,
    GraphCache,
    InflationGraph,
    OverlapClass,
    OverlapError,
    ScanPatch,
    build_graph,
    coincidence,
    decide_coincidence,
    distances_to_coincidence,
    enumerate_classes,
    inflate_class,
    scan_classes,
    xi_sample,
)
from hexoverlap.substitution import find_generating_patch, inradius_estimate

TS_CLASSES = 3936
TS_EDGES = 15168
TS_ELL = 3


@pytest.fixture(scope="module")
def sp3(ts, ts_gen):
    return ScanPatch.build(ts, ts_gen, 3)


@pytest.fixture(scope="module")
def sp4(ts, ts_gen):
    return ScanPatch.build(ts, ts_gen, 4)


@pytest.fixture(scope="module")
def sp5(ts, ts_gen):
    return ScanPatch.build(ts, ts_gen, 5)


def test_xi_basic(ts, sp4):
    xi = xi_sample(ts, sp4, 12.0)
    assert ZERO in xi
    assert all(-y in xi for y in xi)
    assert len(xi) > 1


def test_xi_inflates(ts, sp4, sp5):
    Q = ts.expansion
    small = xi_sample(ts, sp4, 12.0)
    assert len(small) > 50
    # first children of a same-type pair lie within 2*12 + 4 of the origin
    big = xi_sample(ts, sp5, 28.0)
    assert {Q(y) for y in small} <= big


def test_xi_window_too_large(ts, sp3):
    with pytest.raises(OverlapError):
        xi_sample(ts, sp3, sp3.radius + 1)


def test_enumeration_stable(ts_enum):
    assert ts_enum.stable
    assert len(ts_enum) == TS_CLASSES
    last = ts_enum.history[-2:]
    assert [h["new"] for h in last] == [0, 0]
    assert [h["new_edges"] for h in last] == [0, 0]
    assert last[0]["total"] == last[1]["total"] == TS_CLASSES
    assert last[0]["edges"] == last[1]["edges"] == TS_EDGES


def test_graph_constants(ts_graph):
    G, added = ts_graph
    assert added == 0
    assert len(G) == TS_CLASSES
    assert len(G.edges) == TS_EDGES
    G.check()


def test_coincidences_present(ts, ts_graph, sp4):
    G, _ = ts_graph
    keys = {tuple(r) for r in G.rows.tolist()}
    for t in np.unique(sp4.types):
        assert (int(t), int(t), 0, 0, 0, 0) in keys
    assert int(G.coincident.sum()) == 168


def test_boundary_contacts_excluded(ts, ts_gen, ts_graph):
    G, _ = ts_graph
    keys = {tuple(r) for r in G.rows.tolist()}
    tiles = list(ts_gen.patch)
    for a in tiles:
        for b in tiles:
            if a.proto != b.proto:
                # the six tiles around the origin only touch along edges
                assert not interiors_intersect(ts.support(a), ts.support(b))
                assert (a.proto, b.proto, 0, 0, 0, 0) not in keys


def test_support_positivity(ts, ts_graph):
    G, _ = ts_graph
    rows = G.rows[:: max(1, len(G) // 400)]
    for r in rows:
        S = OverlapClass.from_key(ts, r).support(ts)
        assert S is not None and area(S).sign() > 0


def test_inflate_coincidence(ts):
    for label in ["A_R_0", "Fbar_L_4"]:
        i = ts.id_of(label)
        got = inflate_class(ts, OverlapClass(i, i, ZERO))
        want = {OverlapClass(c, c, ZERO) for c, _ in ts.children[i]}
        assert got == want
        assert all(c.is_coincidence for c in got)


def test_inflation_worked_example(ts):
    """Two A_R_0 tiles, the first displaced by -i relative to the second.

    Q(-i) = -2 zeta^2 conj(-i) = -2 zeta^5 = 2z - 2z^3.  Children of A_R_0 are
    A_R_0 at 0, D_R_1 at -2i, Cbar_L_1 at z - z^3 and Abar_L_5 at 4z - 4z^3,
    so a child pair (a, b) lands at 2z - 2z^3 + d_a - d_b.  Of the 16 pairs
    exactly three overlap:
      A_R_0 vs Abar_L_5:     2z - 2z^3 - (4z - 4z^3) = -2z + 2z^3
      A_R_0 vs Cbar_L_1:     2z - 2z^3 - (z - z^3)   =   z - z^3
      Cbar_L_1 vs Abar_L_5:  2z - 2z^3 + (z - z^3) - (4z - 4z^3) = -z + z^3
    """
    i = ts.id_of("A_R_0")
    delta = CycloNum(0, 0, 0, -1)
    qd = ts.expansion(delta)
    assert qd == -2 * zeta_pow(5) == CycloNum(0, 2, 0, -2)
    L = ts.id_of
    want = {
        OverlapClass(L("A_R_0"), L("Abar_L_5"), CycloNum(0, -2, 0, 2)),
        OverlapClass(L("A_R_0"), L("Cbar_L_1"), CycloNum(0, 1, 0, -1)),
        OverlapClass(L("Cbar_L_1"), L("Abar_L_5"), CycloNum(0, -1, 0, 1)),
    }
    assert inflate_class(ts, OverlapClass(i, i, delta)) == want
    # brute force over all child pairs with the geometry predicate alone
    brute = set()
    for a, da in ts.children[i]:
        for b, db in ts.children[i]:
            d = qd + da - db
            if interiors_intersect(ts.prototiles[a].support, ts.prototiles[b].support, shift=d):
                brute.add(OverlapClass(a, b, d))
    assert brute == want


def test_every_class_has_successor(ts_graph):
    G, _ = ts_graph
    assert all(G.succ)
    assert all(any(G.coincident[b] for b in G.succ[a]) for a in np.nonzero(G.coincident)[0])


def test_canonical_classes_have_equal_supports(ts, sp3):
    """Concrete overlaps with the same (i, j, delta) share one support shape."""
    fr = ts.frame
    rows, _ = scan_classes(ts, sp3, 6.0)
    keyset = {tuple(r) for r in rows.tolist()}
    win = sp3.inside(6.0)
    pos, types = sp3.pos, sp3.types
    xi = xi_sample(ts, sp3, 6.0)
    seen = {}
    checked = 0
    for a in win[:40]:
        for b in win[:120]:
            for y in list(xi)[:30]:
                pa, pb = fr.to_cyclo(pos[a]), fr.to_cyclo(pos[b])
                Sa = ts.prototiles[types[a]].support.translate(pa - y)
                Sb = ts.prototiles[types[b]].support.translate(pb)
                region = clip(Sa, Sb)
                if region is None:
                    continue
                key = (int(types[a]), int(types[b])) + tuple(int(x) for x in fr.to_int(pa - y - pb))
                assert key in keyset
                local = region.translate(-pb)
                if key in seen:
                    assert seen[key] == local
                else:
                    seen[key] = local
                    assert local == OverlapClass.from_key(ts, key).support(ts)
                checked += 1
    assert checked > 20


def test_monotone_reachability(ts_graph):
    G, _ = ts_graph
    n = len(G)
    hit = G.coincident.copy()
    levels = [hit]
    for _ in range(TS_ELL + 2):
        nxt = np.array([any(hit[b] for b in G.succ[a]) for a in range(n)])
        assert (hit <= nxt).all()
        hit = nxt
        levels.append(hit)
    assert levels[TS_ELL].all() and not levels[TS_ELL - 1].all()
    dist = distances_to_coincidence(G)
    within = [int((dist <= d).sum()) for d in range(TS_ELL + 1)]
    assert within == sorted(within) and within[-1] == n


def test_verdict(ts_graph):
    G, _ = ts_graph
    v = decide_coincidence(G)
    assert v.result == "YES" and v.coincidence
    assert v.ell == TS_ELL <= len(G)
    assert v.nodes == TS_CLASSES and v.edges == TS_EDGES


def test_worker_count_independent(ts, ts_enum, ts_graph):
    G1, _ = ts_graph
    G2, _ = build_graph(ts, ts_enum, workers=2)
    assert G2.serialize() == G1.serialize()


def test_toy_graphs():
    rows = np.array([[0, 0, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0]])
    v = decide_coincidence(InflationGraph(rows, [(0, 0), (1, 1)]))
    assert (v.result, v.ell) == ("YES", 0)
    rows = np.array([[0, 1, 0, 0, 0, 0]])
    v = decide_coincidence(InflationGraph(rows, [(0, 0)]))
    assert v.result == "NO"
    assert v.witness == [(0, 1, 0, 0, 0, 0)]
    rows = np.array([[0, 0, 0, 0, 0, 0], [0, 1, 1, 0, 0, 0], [0, 1, 2, 0, 0, 0]])
    v = decide_coincidence(InflationGraph(rows, [(0, 0), (1, 2), (2, 0)]))
    assert (v.result, v.ell) == ("YES", 2)


def test_check_rejects_open_graph():
    rows = np.array([[0, 1, 0, 0, 0, 0]])
    with pytest.raises(OverlapError):
        InflationGraph(rows, []).check()


def tm_closure_by_hand(tm):
    """Unit squares a, b with children at 0, 1, i, 1+i in the orders
    a -> (a, b, b, a), b -> (b, a, a, b).  Integer displacements overlap only
    at delta = 0, and 2*0 + d_a - d_b = 0 forces equal slots, so
    (x, y, 0) goes to {(x_s, y_s, 0)} over the four slots s."""
    order = {"a": "abba", "b": "baab"}
    nodes = {(x, y) for x in "ab" for y in "ab"}
    edges = {(x, y): {(order[x][s], order[y][s]) for s in range(4)} for x, y in nodes}
    return nodes, edges


def test_thue_morse_by_hand(tm):
    nodes, edges = tm_closure_by_hand(tm)
    assert edges[("a", "b")] == {("a", "b"), ("b", "a")}
    # no path from a mixed pair ever reaches a coincidence
    assert all(x != y for x, y in edges[("a", "b")] | edges[("b", "a")])
    en = enumerate_classes(tm)
    assert en.stable
    G, added = build_graph(tm, en)
    got = {(tm.label(r[0]), tm.label(r[1])) for r in G.rows.tolist()}
    assert got == nodes
    assert not G.rows[:, 2:].any()
    for a, s in enumerate(G.succ):
        src = (tm.label(int(G.rows[a, 0])), tm.label(int(G.rows[a, 1])))
        assert {(tm.label(int(G.rows[b, 0])), tm.label(int(G.rows[b, 1]))) for b in s} == edges[src]
    v = decide_coincidence(G)
    assert v.result == "NO"
    assert sorted((tm.label(w[0]), tm.label(w[1])) for w in v.witness) == [("a", "b"), ("b", "a")]


def test_serialize_round_trip(ts_graph):
    G, _ = ts_graph
    text = G.serialize()
    H = InflationGraph.parse(text)
    assert H.serialize() == text
    assert H.digest() == G.digest()
    with pytest.raises(ValueError):
        InflationGraph.parse("nonsense\n")


def test_cache(tm, tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "c"))
    cache = GraphCache()
    assert cache.dir == tmp_path / "c"
    v1 = coincidence(tm, cache=cache)
    assert not v1.details["cache_hit"]
    assert cache.path(tm).exists()
    v2 = coincidence(tm, cache=cache)
    assert v2.details["cache_hit"]
    assert (v2.result, v2.witness, v2.nodes) == (v1.result, v1.witness, v1.nodes)
    cache.path(tm).write_text("garbage")
    assert cache.load(tm) is None
    assert cache.clear() == 1


def test_inconclusive_when_windows_too_few(tm):
    gen = find_generating_patch(tm)
    v = coincidence(tm, gen, windows=[4.0])
    assert v.result == "INCONCLUSIVE"
    assert v.coincidence is None
