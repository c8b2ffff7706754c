"""Compiled vs numpy/scipy kernels on Taylor-Socolar workloads.

    python benchmarks/bench_kernels.py [--window 16] [--repeat 3]

Both backends get identical inputs; outputs are compared before timings are
reported.
"""

import argparse
import time

import numpy as np

from hexoverlap import _pykernels
from hexoverlap.overlap import ScanPatch, _xi_array, _depth_for
from hexoverlap.spectra import hex_grid
from hexoverlap.substitution import find_generating_patch
from hexoverlap.tsdata import build_ruleset

try:
    from hexoverlap import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--window", type=float, default=16.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")

    R = build_ruleset()
    fr = R.frame
    gen = find_generating_patch(R)
    w = args.window
    sp = ScanPatch.build(R, gen, _depth_for(R, gen, 3 * w + 2 * fr.reach))
    xi = _xi_array(R, sp, w)
    anchors = sp.inside(w)
    scan_args = (sp.pos, sp.types, sp.xy, anchors, xi, np.ascontiguousarray(fr.embed(xi)),
                 int(fr.reach_bound), fr.reach + 0.5, len(R), 64)

    rng = np.random.default_rng(0)
    cls = np.column_stack([rng.integers(0, len(R), (20000, 2)), rng.integers(-3, 4, (20000, 4))]).astype(np.int64)
    inf_args = (cls, fr.qmat, fr.child_type, fr.child_off, int(fr.reach_bound))

    pts = sp.xy[sp.inside(64.0)]
    ones = np.ones(len(pts))
    zeros = np.zeros(len(pts))
    kg = np.ascontiguousarray(hex_grid(3, 16).points())
    int_args = (np.ascontiguousarray(pts), ones, zeros, kg)

    rows = []
    for name, args_, check in (
        ("scan_overlaps", scan_args, lambda a, b: np.array_equal(np.sort(a[0]), np.sort(b[0]))),
        ("inflate_classes", inf_args, lambda a, b: np.array_equal(a, b)),
        ("intensity", int_args, lambda a, b: np.allclose(a, b, rtol=1e-9, atol=1e-6)),
    ):
        tc, oc = best_of(lambda: getattr(_ckernels, name)(*args_), args.repeat)
        tp, op = best_of(lambda: getattr(_pykernels, name)(*args_), max(1, args.repeat // 3))
        rows.append((name, tc, tp, check(oc, op)))

    print(f"workload: window {w}, depth {sp.k}, {len(sp.types)} tiles, {len(anchors)} anchors, |xi| {len(xi)}")
    print(f"{'kernel':<18}{'cython s':>12}{'python s':>12}{'speedup':>10}  same")
    for name, tc, tp, same in rows:
        print(f"{name:<18}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {same}")


if __name__ == "__main__":
    main()
