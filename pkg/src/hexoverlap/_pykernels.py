"""Pure numpy/scipy versions of the hot loops in ``_ckernels``.

Outputs are identical as sets (scan) or as arrays up to row order (inflate);
the callers sort before use.
"""

import numpy as np
from scipy.spatial import cKDTree

from .substitution import norm4_exact_le


def pack_keys(ti, tj, d, ntypes, coef_bound):
    B = 2 * coef_bound + 1
    key = ti.astype(np.int64) * ntypes + tj
    for k in range(4):
        key = key * B + (d[:, k] + coef_bound)
    return key


def scan_overlaps(pos, types, xy, anchors, xi, xi_xy, reach_bound, cell, ntypes, coef_bound):
    tree = cKDTree(xy)
    # cell >= reach + margin, so a ball of radius cell*sqrt(2) covers the 3x3 cells
    radius = cell * 1.5
    seen = []
    overflow = False
    for a in anchors:
        targets = xy[a] - xi_xy
        hits = tree.query_ball_point(targets, radius)
        lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
        if lens.sum() == 0:
            continue
        yi = np.repeat(np.arange(len(hits)), lens)
        b = np.fromiter((v for h in hits for v in h), dtype=np.int64, count=int(lens.sum()))
        d = pos[a] - xi[yi] - pos[b]
        ok = norm4_exact_le(d, reach_bound)
        wide = ok & (np.abs(d) > coef_bound).any(axis=1)
        if wide.any():
            overflow = True
            ok &= ~wide
        if ok.any():
            seen.append(np.unique(pack_keys(np.full(ok.sum(), types[a]), types[b[ok]], d[ok], ntypes, coef_bound)))
    if not seen:
        return np.zeros(0, dtype=np.int64), overflow
    return np.unique(np.concatenate(seen)), overflow


def inflate_classes(cls, qmat, child_type, child_off, reach_bound):
    n = len(cls)
    cmax = child_type.shape[1]
    if n == 0:
        return np.zeros((0, 7), dtype=np.int64)
    q = cls[:, 2:6] @ qmat.T
    rows = []
    for a in range(cmax):
        ci = child_type[cls[:, 0], a]
        oa = child_off[cls[:, 0], a]
        for b in range(cmax):
            cj = child_type[cls[:, 1], b]
            d = q + oa - child_off[cls[:, 1], b]
            ok = (ci >= 0) & (cj >= 0) & norm4_exact_le(d, reach_bound)
            r = np.nonzero(ok)[0]
            rows.append(np.column_stack([r, ci[r], cj[r], d[r]]))
    out = np.concatenate(rows).astype(np.int64)
    # match the compiled loop order: by parent row, then child slots
    order = np.argsort(out[:, 0], kind="stable")
    return out[order]


def intensity(xy, wre, wim, kgrid, chunk=256):
    w = wre + 1j * wim
    res = np.empty(len(kgrid))
    for s in range(0, len(kgrid), chunk):
        k = kgrid[s:s + chunk]
        ph = -2.0 * np.pi * (k @ xy.T)
        amp = np.exp(1j * ph) @ w
        res[s:s + chunk] = amp.real ** 2 + amp.imag ** 2
    return res
