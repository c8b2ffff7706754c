"""Finite-window diffraction intensities of control-point sets.

Floating point throughout: this is evidence, not a decision procedure.
Intensities are direct exponential sums on a k-grid aligned with the dual of
the point lattice, refined by 2^-m so that candidate Bragg positions land on
grid nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .substitution import MultiColorPointSet

__all__ = [
    "KGrid",
    "IntensityGrid",
    "hex_grid",
    "square_grid",
    "intensity",
    "top_peaks",
    "sixfold_score",
    "peak_share",
    "shares_non_decreasing",
    "pointset_arrays",
    "window_points",
    "write_csv",
    "write_pgm",
]

_S3 = math.sqrt(3.0)
# control points of the hexagonal tilings live on Z e^{i pi/6} + Z e^{-i pi/6}
HEX_BASIS = np.array([[_S3 / 2, 0.5], [_S3 / 2, -0.5]])
SQUARE_BASIS = np.eye(2)


@dataclass(frozen=True)
class KGrid:
    """Nodes k = (n1 b1 + n2 b2) / 2^m, |n1|, |n2| <= extent, b the dual basis."""

    dual: np.ndarray
    m: int
    extent: int
    kind: str = "custom"

    @classmethod
    def for_lattice(cls, basis: np.ndarray, m: int, extent: int, kind: str = "custom") -> "KGrid":
        basis = np.asarray(basis, dtype=np.float64)
        # rows a_i, rows b_j with a_i . b_j = delta_ij
        dual = np.linalg.inv(basis).T
        return cls(dual, int(m), int(extent), kind)

    @property
    def shape(self) -> Tuple[int, int]:
        n = 2 * self.extent + 1
        return (n, n)

    @property
    def step(self) -> float:
        return float(np.linalg.norm(self.dual, axis=1).min()) / 2**self.m

    @property
    def inradius(self) -> float:
        """Radius of the largest disk about 0 inside the grid's parallelogram."""
        b = self.dual
        area = abs(float(np.linalg.det(b)))
        return self.extent / 2**self.m * area / float(np.linalg.norm(b, axis=1).max())

    def indices(self) -> np.ndarray:
        r = np.arange(-self.extent, self.extent + 1)
        n1, n2 = np.meshgrid(r, r, indexing="ij")
        return np.stack([n1.ravel(), n2.ravel()], axis=1)

    def points(self) -> np.ndarray:
        return (self.indices() @ self.dual) / 2**self.m


def hex_grid(m: int = 2, extent: int = 8) -> KGrid:
    return KGrid.for_lattice(HEX_BASIS, m, extent, "hex")


def square_grid(m: int = 2, extent: int = 8) -> KGrid:
    return KGrid.for_lattice(SQUARE_BASIS, m, extent, "square")


@dataclass
class IntensityGrid:
    grid: KGrid
    values: np.ndarray  # shape grid.shape, I(k) = |sum w e^{-2 pi i k.x}|^2 / N
    radius: float
    count: int

    def k(self) -> np.ndarray:
        return self.grid.points().reshape(self.grid.shape + (2,))

    def at(self, n1: int, n2: int) -> float:
        e = self.grid.extent
        return float(self.values[n1 + e, n2 + e])


def pointset_arrays(L: MultiColorPointSet, weights: Optional[Dict[int, complex]] = None):
    """(xy, w) float arrays; colors without a weight get 1."""
    xy, w = [], []
    for color in L.colors():
        a = complex(weights.get(color, 1.0)) if weights else 1.0 + 0j
        for p in L.points[color]:
            xy.append(p.embed())
            w.append(a)
    return np.array(xy, dtype=np.float64).reshape(-1, 2), np.array(w, dtype=np.complex128)


def window_points(xy: np.ndarray, radius: float, w: Optional[np.ndarray] = None):
    keep = np.einsum("ij,ij->i", xy, xy) <= radius * radius
    return xy[keep], (None if w is None else w[keep])


def intensity(xy, grid: KGrid, weights=None, radius: Optional[float] = None) -> IntensityGrid:
    """Direct-sum intensity on the grid.

    ``xy`` is an (N, 2) float array or a :class:`MultiColorPointSet`;
    ``weights`` is then an (N,) array or a color -> weight mapping.
    """
    if isinstance(xy, MultiColorPointSet):
        xy, w = pointset_arrays(xy, weights)
    else:
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        w = np.ones(len(xy), dtype=np.complex128) if weights is None else np.asarray(weights, dtype=np.complex128)
    if radius is not None:
        xy, w = window_points(xy, radius, w)
    n = len(xy)
    if n == 0:
        raise ValueError("empty point set")
    vals = kernels.intensity(
        np.ascontiguousarray(xy),
        np.ascontiguousarray(w.real),
        np.ascontiguousarray(w.imag),
        np.ascontiguousarray(grid.points()),
    )
    r = float(np.sqrt(np.einsum("ij,ij->i", xy, xy).max())) if radius is None else float(radius)
    return IntensityGrid(grid, (vals / n).reshape(grid.shape), r, n)


def top_peaks(
    G: IntensityGrid,
    count: Optional[int] = 12,
    rel_prominence: float = 1e-6,
    kmax: Optional[float] = None,
    min_rel: float = 0.0,
) -> List[Tuple[float, float, float]]:
    """Strict local maxima over the 8-neighbourhood, strongest first.

    A cell is a peak only if it exceeds every neighbour by at least
    ``rel_prominence`` times its own value, so plateaus yield nothing.  Only
    peaks with |k| <= kmax count (default: the grid's inscribed disk, so any
    rotated partner is on the grid too).  Peaks weaker than ``min_rel`` times
    the strongest off-origin peak are dropped; ``count`` then truncates, but
    never inside a group of equal intensities.
    """
    if kmax is None:
        kmax = G.grid.inradius * (1 + 1e-9)
    v = G.values
    pad = np.pad(v, 1, mode="constant", constant_values=-np.inf)
    nb = np.full(v.shape, -np.inf)
    h, w = v.shape
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                nb = np.maximum(nb, pad[1 + dx:1 + dx + h, 1 + dy:1 + dy + w])
    k = G.k()
    peak = (v - nb > rel_prominence * np.abs(v)) & (np.hypot(k[..., 0], k[..., 1]) <= kmax)
    idx = np.argwhere(peak)
    out = [(float(k[a, b, 0]), float(k[a, b, 1]), float(v[a, b])) for a, b in idx]
    # ties broken by position for determinism
    out.sort(key=lambda p: (-p[2], round(p[0], 9), round(p[1], 9)))
    off = [p[2] for p in out if math.hypot(p[0], p[1]) > 1e-9]
    if off and min_rel > 0:
        floor = min_rel * off[0]
        out = [p for p in out if p[2] >= floor or math.hypot(p[0], p[1]) <= 1e-9]
    if count is not None and len(out) > count:
        last = out[count - 1][2]
        n = count
        while n < len(out) and abs(out[n][2] - last) <= 1e-9 * max(abs(last), 1.0):
            n += 1
        out = out[:n]
    return out


def sixfold_score(peaks: Sequence[Tuple[float, float, float]], tol: Optional[float] = None, exclude_origin: bool = True) -> float:
    """Mean of min(I, I')/max(I, I') between each peak and its 60-degree image.

    The partner is the nearest listed peak to the rotated position; if none is
    within ``tol`` the agreement is 0.  The origin is skipped by default since
    it is its own image.
    """
    pts = [p for p in peaks if not (exclude_origin and math.hypot(p[0], p[1]) < 1e-9)]
    if len(pts) < 6:
        raise ValueError("need at least 6 peaks")
    arr = np.array(pts)
    if tol is None:
        d = np.hypot(arr[:, None, 0] - arr[None, :, 0], arr[:, None, 1] - arr[None, :, 1])
        d[d == 0] = np.inf
        tol = 0.5 * float(d.min())
    c, s = 0.5, _S3 / 2
    scores = []
    for x, y, I in pts:
        rx, ry = c * x - s * y, s * x + c * y
        dist = np.hypot(arr[:, 0] - rx, arr[:, 1] - ry)
        j = int(np.argmin(dist))
        if dist[j] > tol:
            scores.append(0.0)
            continue
        J = arr[j, 2]
        hi = max(I, J)
        scores.append(1.0 if hi == 0 else min(I, J) / hi)
    return float(np.mean(scores))


def peak_share(G: IntensityGrid, exclude_lattice: bool = True) -> float:
    """Strongest off-origin I(k)/N, i.e. |sum|^2 / N^2 at that node.

    By default nodes of the reciprocal lattice itself (indices divisible by
    2^m) are skipped: with lattice-valued points they always carry share 1 and
    say nothing about the finer structure.
    """
    v = G.values.copy()
    e = G.grid.extent
    v[e, e] = -np.inf
    if exclude_lattice:
        q = 2**G.grid.m
        r = np.arange(-e, e + 1)
        on = (r[:, None] % q == 0) & (r[None, :] % q == 0)
        v[on] = -np.inf
    return float(v.max()) / G.count


def shares_non_decreasing(shares: Sequence[float], rel_tol: float = 0.01) -> bool:
    """Each share at least (1 - rel_tol) times its predecessor."""
    return all(b >= a * (1 - rel_tol) for a, b in zip(shares, shares[1:]))


def write_csv(G: IntensityGrid, path) -> None:
    k = G.k().reshape(-1, 2)
    with open(path, "w") as fh:
        fh.write("kx,ky,I\n")
        for (x, y), I in zip(k, G.values.ravel()):
            fh.write(f"{x:.10f},{y:.10f},{I:.10e}\n")


def write_pgm(G: IntensityGrid, path) -> None:
    """16-bit binary PGM, log-scaled so that weak peaks stay visible."""
    v = np.log1p(np.maximum(G.values, 0.0))
    top = float(v.max())
    img = np.zeros_like(v) if top == 0 else np.rint(65535.0 * v / top)
    img = img.astype(">u2")
    # row = n2 descending so +ky is up
    img = img.T[::-1]
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(img.tobytes())
