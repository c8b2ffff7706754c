"""Command line front end.

Exit codes: 0 success or YES, 1 validation failure, 2 NO, 3 inconclusive,
4 I/O, parse or refused-request error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import kernels
from .overlap import CACHE_ENV, GraphCache, OverlapClass, coincidence, default_windows
from .rulefile import RuleParseError, arrays_to_json, format_rules, load_rules
from .spectra import KGrid, hex_grid, intensity, sixfold_score, square_grid, top_peaks, write_csv, write_pgm
from .substitution import (
    RuleSet,
    SubstitutionError,
    find_generating_patch,
    iterate,
    iterate_arrays,
    patch_to_arrays,
    validate_ruleset,
)

EXIT_OK, EXIT_INVALID, EXIT_NO, EXIT_INCONCLUSIVE, EXIT_IO = 0, 1, 2, 3, 4

# bytes per tile held in the array path (type + 4 coordinates + float xy)
_BYTES_PER_TILE = 8 * 7
_LETTER_COLORS = {
    "A": "#e6194b",
    "B": "#3cb44b",
    "C": "#4363d8",
    "D": "#f58231",
    "E": "#911eb4",
    "F": "#42d4f4",
    "G": "#bfef45",
}


class UsageError(Exception):
    pass


def _load(spec: str) -> RuleSet:
    try:
        return load_rules(spec)
    except RuleParseError:
        raise
    except OSError as e:
        raise UsageError(f"cannot read rules {spec!r}: {e}") from None


def _out_dir(path: Optional[str]) -> Path:
    p = Path(path or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- validate -------------------------------------------------------------------


def cmd_validate(args) -> int:
    R = _load(args.rules)
    rep = validate_ruleset(R)
    for line in rep.lines(R):
        print(line)
    print(f"{rep.passed}/{rep.total} prototiles pass")
    return EXIT_OK if rep.ok else EXIT_INVALID


# --- tile -----------------------------------------------------------------------


def _tile_fill(label: str) -> str:
    head = label[0].upper()
    if head in _LETTER_COLORS:
        col = _LETTER_COLORS[head]
        if "bar" in label.split("_")[0]:
            # barred letters: darker shade of the same hue
            r, g, b = (int(col[k:k + 2], 16) * 6 // 10 for k in (1, 3, 5))
            col = f"#{r:02x}{g:02x}{b:02x}"
        return col
    h = sum(map(ord, label)) * 47 % 360
    return f"hsl({h},60%,60%)"


def render_svg(R: RuleSet, types: np.ndarray, pos: np.ndarray) -> str:
    fr = R.frame
    xy = fr.embed(pos)
    polys = []
    allpts = []
    for t, (x, y) in zip(types.tolist(), xy):
        verts = np.array([v.embed() for v in R.prototiles[t].support.vertices]) + (x, y)
        allpts.append(verts)
        polys.append((t, verts))
    pts = np.concatenate(allpts) if allpts else np.zeros((1, 2))
    lo, hi = pts.min(axis=0) - 0.5, pts.max(axis=0) + 0.5
    scale = 800.0 / max(hi[0] - lo[0], hi[1] - lo[1])
    W, H = (hi - lo) * scale

    def sx(p):
        return f"{(p[0] - lo[0]) * scale:.3f},{(hi[1] - p[1]) * scale:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H:.1f}" viewBox="0 0 {W:.1f} {H:.1f}">',
        '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#000" stroke-width="1" stroke-opacity="0.35"/></pattern></defs>',
    ]
    for t, verts in polys:
        label = R.label(t)
        d = " ".join(sx(v) for v in verts)
        out.append(f'<polygon points="{d}" fill="{_tile_fill(label)}" stroke="#222" stroke-width="0.4"><title>{label}</title></polygon>')
        if "_R" in label:
            out.append(f'<polygon points="{d}" fill="url(#hatch)" stroke="none"/>')
    rdot = max(0.8, 0.08 * scale)
    for x, y in xy:
        c = sx((x, y)).split(",")
        out.append(f'<circle cx="{c[0]}" cy="{c[1]}" r="{rdot:.2f}" fill="#000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_tile(args) -> int:
    R = _load(args.rules)
    if args.validate:
        rep = validate_ruleset(R)
        if not rep.ok:
            for line in rep.lines(R):
                print(line)
            return EXIT_INVALID
    gen = find_generating_patch(R)
    k = args.depth
    per_step = max(len(c) for c in R.children)
    estimate = len(gen.patch) * per_step**k
    if estimate > args.max_tiles:
        mib = estimate * _BYTES_PER_TILE / 2**20
        print(
            f"refused: depth {k} would produce about {estimate} tiles (~{mib:.0f} MiB); limit is {args.max_tiles} (--max-tiles)",
            file=sys.stderr,
        )
        return EXIT_IO
    if args.validate:
        P = iterate(R, gen.patch, k, validating=True)
        types, pos = patch_to_arrays(R, P)
    else:
        t0, p0 = patch_to_arrays(R, gen.patch)
        types, pos = iterate_arrays(R, t0, p0, k)
    out = _out_dir(args.out)
    stem = args.name or f"{R.name or 'rules'}_k{k}"
    meta = {"depth": k, "generating_power": gen.power}
    (out / f"{stem}.json").write_text(arrays_to_json(R, types, pos, meta))
    if len(types) <= args.max_svg:
        (out / f"{stem}.svg").write_text(render_svg(R, types, pos))
        svg_note = f"{stem}.svg"
    else:
        svg_note = f"svg skipped ({len(types)} tiles > --max-svg {args.max_svg})"
    print(f"{len(types)} tiles at depth {k}; wrote {out / (stem + '.json')}; {svg_note}")
    return EXIT_OK


# --- coincidence ------------------------------------------------------------------


def cmd_coincidence(args) -> int:
    R = _load(args.rules)
    if args.validate:
        rep = validate_ruleset(R)
        if not rep.ok:
            for line in rep.lines(R):
                print(line)
            return EXIT_INVALID
    windows = default_windows(R, args.window) if args.window else None
    cache = None if args.no_cache else GraphCache(args.cache_dir)
    t0 = time.perf_counter()
    v = coincidence(R, windows=windows, workers=args.workers, cache=cache)
    wall = time.perf_counter() - t0
    print(f"verdict: {v.result}")
    print(f"classes: {v.nodes}")
    print(f"edges: {v.edges}")
    if v.ell is not None:
        print(f"ell: {v.ell}")
    if v.details.get("cache_hit"):
        print("cache: hit")
    elif v.details.get("cache_file"):
        print(f"cache: written {v.details['cache_file']}")
    for h in v.details.get("history", []):
        print(
            "scan: window {window:.3f} depth {k} anchors {anchors} xi {xi} classes {total} new {new} edges {edges}".format(**h)
        )
    if "closure_added" in v.details:
        print(f"closure added: {v.details['closure_added']}")
    print(f"backend: {kernels.BACKEND}")
    print(f"wall time: {wall:.2f}s")
    if v.result == "NO":
        print("witness:")
        for key in v.witness:
            print("  " + OverlapClass.from_key(R, key).describe(R))
        return EXIT_NO
    if v.result == "INCONCLUSIVE":
        print(f"inconclusive: {v.details.get('advice', 'raise bounds')}")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# --- diffract --------------------------------------------------------------------


def _parse_grid(text: str) -> KGrid:
    parts = text.split(":")
    try:
        kind = parts[0]
        m = int(parts[1]) if len(parts) > 1 else 2
        ext = int(parts[2]) if len(parts) > 2 else 8
    except ValueError:
        raise UsageError(f"bad --grid {text!r}; expected kind[:m[:extent]]") from None
    if kind == "hex":
        return hex_grid(m, ext)
    if kind == "square":
        return square_grid(m, ext)
    raise UsageError(f"unknown grid kind {kind!r}; use hex or square")


def cmd_diffract(args) -> int:
    R = _load(args.rules)
    if args.from_json:
        from .cyclotomic import parse_cyclo

        doc = json.loads(Path(args.from_json).read_text())
        xy = np.array([parse_cyclo(r["t"]).embed() for r in doc["tiles"]], dtype=np.float64).reshape(-1, 2)
    else:
        gen = find_generating_patch(R)
        t0, p0 = patch_to_arrays(R, gen.patch)
        types, pos = iterate_arrays(R, t0, p0, args.depth)
        xy = R.frame.embed(pos)
    grid = _parse_grid(args.grid)
    radius = args.window
    n_in = int((np.einsum("ij,ij->i", xy, xy) <= radius * radius).sum()) if radius else len(xy)
    if n_in == 0:
        print("empty patch: no control points in the window", file=sys.stderr)
        return EXIT_IO
    G = intensity(xy, grid, radius=radius)
    peaks = top_peaks(G, None, min_rel=args.min_rel)
    out = _out_dir(args.out)
    stem = args.name or f"{R.name or 'rules'}_diffraction"
    write_csv(G, out / f"{stem}.csv")
    write_pgm(G, out / f"{stem}.pgm")
    try:
        score = sixfold_score(peaks)
        score_txt = f"{score:.6f}"
    except ValueError:
        score_txt = "n/a (fewer than 6 peaks)"
    print(f"points: {G.count}")
    print(f"peaks: {len(peaks)}")
    print(f"sixfold score: {score_txt}")
    print(f"wrote {out / (stem + '.csv')} and {out / (stem + '.pgm')}")
    return EXIT_OK


# --- rules / cache ------------------------------------------------------------------


def cmd_rules_export(args) -> int:
    R = _load(args.rules)
    text = format_rules(R)
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({len(R)} prototiles)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_cache(args) -> int:
    cache = GraphCache(args.cache_dir)
    if args.action == "clear":
        print(f"removed {cache.clear()} cached graph(s) from {cache.dir}")
    else:
        files = sorted(cache.dir.glob("*.graph")) if cache.dir.exists() else []
        print(f"cache dir: {cache.dir}")
        for f in files:
            print(f"  {f.name} {f.stat().st_size} bytes")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hexoverlap", description="Substitution tilings on Z[zeta_12]: validation, overlap coincidence, diffraction.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def rules_arg(sp):
        sp.add_argument("--rules", default="builtin:taylor-socolar", help="rule file path or builtin:<name>")

    sp = sub.add_parser("validate", help="check every prototile's subdivision exactly")
    rules_arg(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("tile", help="render Ω^k of the generating patch (SVG + JSON)")
    rules_arg(sp)
    sp.add_argument("--depth", type=_nonneg_int, default=3)
    sp.add_argument("--out", default=".")
    sp.add_argument("--name")
    sp.add_argument("--validate", action="store_true", help="validate rules and check every iterate for collisions")
    sp.add_argument("--max-tiles", type=_positive_int, default=5_000_000)
    sp.add_argument("--max-svg", type=_positive_int, default=50_000)
    sp.set_defaults(func=cmd_tile)

    sp = sub.add_parser("coincidence", help="decide overlap coincidence")
    rules_arg(sp)
    sp.add_argument("--window", type=_positive_float, help="largest scan window (default 64)")
    sp.add_argument("--workers", type=_positive_int, default=1)
    sp.add_argument("--cache-dir", help=f"graph cache directory (env {CACHE_ENV})")
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--validate", action="store_true")
    sp.set_defaults(func=cmd_coincidence)

    sp = sub.add_parser("diffract", help="diffraction intensity of the control points")
    rules_arg(sp)
    sp.add_argument("--depth", type=_nonneg_int, default=6)
    sp.add_argument("--window", type=_positive_float, default=32.0, help="radius of the point window")
    sp.add_argument("--grid", default="hex:3:16", help="kind[:m[:extent]], kind hex or square")
    sp.add_argument("--min-rel", type=float, default=0.1, help="peak floor relative to the strongest off-origin peak")
    sp.add_argument("--from-json", help="use control points from a `tile` JSON dump")
    sp.add_argument("--out", default=".")
    sp.add_argument("--name")
    sp.set_defaults(func=cmd_diffract)

    sp = sub.add_parser("rules", help="rule-file utilities")
    rsub = sp.add_subparsers(dest="rules_cmd", required=True)
    ex = rsub.add_parser("export", help="write a rule set in the text format")
    rules_arg(ex)
    ex.add_argument("--out", default="-")
    ex.set_defaults(func=cmd_rules_export)

    sp = sub.add_parser("cache", help="inspect or clear the graph cache")
    sp.add_argument("action", choices=["info", "clear"])
    sp.add_argument("--cache-dir")
    sp.set_defaults(func=cmd_cache)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except RuleParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except SubstitutionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
