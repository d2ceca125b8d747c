"""Command-line front end: build, verify, render, audit, search, schedule-check.

Exit codes: 0 success, 1 usage error (argparse), 2 bad configuration or
missing artifacts, 3 an invariant failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .crossing import (
    Arc,
    CrossingError,
    LevelGeometry,
    SlabCells,
    adversarial_search,
    count_rook_hits,
    dichotomy_audit,
    faithful_bounds,
    intersection_trace,
    piercing_components,
    random_crossing_segment,
    segment_budget_audit,
    slab_crossing_lower_bound,
)
from .geom import clearance, difference, scalar_to_json
from .parameterize import entry_times, initial_curve, lift, lift_report, regions_of
from .plumbing import Plumbing, foliation_curve, initial_plumbing, validate_plumbing
from .refine import (
    Layout,
    RefinementError,
    RefinementTooLarge,
    assemble_plan,
    build_slabs,
    refine,
    subdivide,
)
from .rook import RookPlacement, generate_good_placement, verify_good_placement
from .schedule import (
    LevelParams,
    Schedule,
    ScheduleError,
    check_global,
    derive_level,
    params_only_schedule,
    parse_config,
)

SCHEMA_VERSION = 1
WORKERS_ENV = "UNPIERCEABLE_WORKERS"
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
DEFAULT_MAX_PIECES = 20_000_000


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- serialization


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _encode_chunk(pieces: Sequence) -> str:
    return ",".join(canonical_json(p.to_json()) for p in pieces)


def dump_plumbing(P: Plumbing, workers: int = 1) -> str:
    """Canonical JSON for a plumbing plus a schema tag; pieces are encoded in order."""
    pieces = list(P.pieces)
    if workers <= 1 or len(pieces) < 20_000:
        body = _encode_chunk(pieces)
    else:
        size = -(-len(pieces) // (workers * 4))
        chunks = [pieces[i:i + size] for i in range(0, len(pieces), size)]
        with ProcessPoolExecutor(workers) as pool:
            body = ",".join(pool.map(_encode_chunk, chunks))
    head = {"level": P.level, "schema": SCHEMA_VERSION, "unit": scalar_to_json(P.unit)}
    return ('{"level":%s,"pieces":[%s],"schema":%s,"unit":%s}'
            % (head["level"], body, SCHEMA_VERSION, canonical_json(head["unit"])))


def _write(path: Path, text: str) -> str:
    data = text.encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(f"missing artifact: {path}", EXIT_CONFIG) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"unreadable JSON in {path}: {exc}", EXIT_CONFIG) from None


def resolve_workers(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"{WORKERS_ENV} must be an integer, got {env!r}", EXIT_CONFIG) from None
    return 1


# ---------------------------------------------------------------- build


def load_config(path: Path) -> tuple:
    data = _read_json(path)
    try:
        return data, parse_config(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from None


def build(config: dict, out: Path, levels: Optional[int] = None, workers: int = 1,
          topology: bool = True, params_only: bool = False, log=print,
          max_pieces: Optional[int] = DEFAULT_MAX_PIECES) -> dict:
    """Run the refinement pipeline and write every artifact; returns the manifest."""
    try:
        eps0, mode, specs = parse_config(config)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from None
    n_levels = len(specs) if levels is None else levels
    if n_levels > len(specs):
        raise CliError(f"config lists {len(specs)} levels, {n_levels} requested", EXIT_CONFIG)
    specs = specs[:n_levels]
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": SCHEMA_VERSION,
        "tool": f"unpierceable {__version__}",
        "config": config,
        "config_sha256": hashlib.sha256(canonical_json(config).encode()).hexdigest(),
        "levels": n_levels,
        "params_only": params_only,
        "files": {},
    }

    if params_only:
        try:
            S = params_only_schedule(eps0, mode, specs)
        except ScheduleError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None
        checks = check_global(S)
        manifest["schedule"] = S.to_json()
        manifest["checks"] = [c.line() for c in checks]
        if mode.faithful:
            fb = faithful_bounds(S)
            manifest["faithful"] = {"segment_fraction": scalar_to_json(fb.segment_fraction),
                                    "arc_fraction": scalar_to_json(fb.arc_fraction),
                                    "segment_ok": fb.segment_ok, "arc_ok": fb.arc_ok}
        _finish(out, manifest)
        if any(c.ok is False for c in checks):
            raise CliError("schedule checks failed", EXIT_INVARIANT)
        return manifest

    if mode.faithful and n_levels:
        raise CliError("faithful schedules are too large to build; use --params-only", EXIT_CONFIG)

    P = initial_plumbing(eps0)
    manifest["files"]["level_0.json"] = _write(out / "level_0.json", dump_plumbing(P, workers))
    S = Schedule(eps0, mode)
    widths = [P.width]
    for n, spec in enumerate(specs):
        try:
            params = derive_level(P, spec.delta, spec.v, mode, S.levels, spec.seed, spec.t_override)
        except ScheduleError as exc:
            raise CliError(f"level {n}: {exc}", EXIT_CONFIG) from None
        placement = generate_good_placement(spec.v, spec.seed)
        log(f"level {n}: t={params.t} v={params.v} refining {len(P)} pieces")
        try:
            Q, rep = refine(P, params, placement, validate=True, topology=topology, max_pieces=max_pieces)
        except RefinementTooLarge as exc:
            raise CliError(f"level {n}: {exc}", EXIT_CONFIG) from None
        except RefinementError as exc:
            raise CliError(f"level {n}: {exc}", EXIT_INVARIANT) from None
        S = S.extended(params)
        widths.append(Q.width)
        files = manifest["files"]
        files[f"params_{n}.json"] = _write(out / f"params_{n}.json", canonical_json(params.to_json()))
        files[f"placement_{n}.json"] = _write(out / f"placement_{n}.json", canonical_json(placement.to_json()))
        files[f"report_{n + 1}.json"] = _write(out / f"report_{n + 1}.json", canonical_json(rep.to_json()))
        files[f"level_{n + 1}.json"] = _write(out / f"level_{n + 1}.json", dump_plumbing(Q, workers))
        log(f"level {n + 1}: {len(Q)} pieces, width {Q.width}")
        P = Q
    checks = check_global(S, widths) if S.levels else []
    manifest["schedule"] = S.to_json()
    manifest["checks"] = [c.line() for c in checks]
    _finish(out, manifest)
    if any(c.ok is False for c in checks):
        raise CliError("schedule checks failed", EXIT_INVARIANT)
    return manifest


def _finish(out: Path, manifest: dict):
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


class Build:
    """Artifacts of a finished build, loaded lazily."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.manifest = _read_json(self.root / "manifest.json")
        if self.manifest.get("schema") != SCHEMA_VERSION:
            raise CliError("manifest schema version mismatch", EXIT_CONFIG)
        self.n_levels = 0 if self.manifest.get("params_only") else int(self.manifest["levels"])
        self._levels = {}

    def level(self, n: int) -> Plumbing:
        if not 0 <= n <= self.n_levels:
            raise CliError(f"level {n} was not built", EXIT_CONFIG)
        if n not in self._levels:
            self._levels[n] = Plumbing.from_json(_read_json(self.root / f"level_{n}.json"))
        return self._levels[n]

    def params(self, n: int) -> LevelParams:
        return LevelParams.from_json(_read_json(self.root / f"params_{n}.json"))

    def placement(self, n: int) -> RookPlacement:
        return RookPlacement.from_json(_read_json(self.root / f"placement_{n}.json"))

    def report(self, n: int) -> dict:
        return _read_json(self.root / f"report_{n}.json")

    def schedule(self) -> Schedule:
        eps0, mode, _ = parse_config(self.manifest["config"])
        return Schedule(eps0, mode, tuple(self.params(n) for n in range(self.n_levels)))

    def layout(self, n: int) -> Layout:
        try:
            return Layout(self.level(n), self.params(n), self.placement(n))
        except RefinementError as exc:
            raise CliError(f"level {n}: {exc}", EXIT_INVARIANT) from None


# ---------------------------------------------------------------- verification suites


def complement_clearance(P: Plumbing, Q: Plumbing) -> Fraction:
    """L-infinity distance from the finer plumbing ``Q`` to the complement of ``P``."""
    scale = P.unit / Q.unit
    if scale.denominator != 1:
        raise CliError("levels do not share a lattice", EXIT_INVARIANT)
    k = scale.numerator
    coarse = [tuple(c * k for c in p.rect) for p in P.pieces]
    x0 = min(r[0] for r in coarse) - k
    y0 = min(r[1] for r in coarse) - k
    x1 = max(r[2] for r in coarse) + k
    y1 = max(r[3] for r in coarse) + k
    outside = difference([(x0, y0, x1, y1)], coarse)
    return clearance([p.rect for p in Q.pieces], outside) * Q.unit


def _suite_plumbing(b: Build, opts) -> list:
    out = []
    for n in range(b.n_levels + 1):
        rep = validate_plumbing(b.level(n), topology=opts.topology)
        out.append({"name": f"level {n} valid plumbing", "ok": rep.ok,
                    "detail": "; ".join(str(e) for e in rep.errors[:3])})
    return out


def _suite_rook(b: Build, opts) -> list:
    out = []
    for n in range(b.n_levels):
        ok, violation = verify_good_placement(b.placement(n))
        out.append({"name": f"level {n} placement is good", "ok": ok, "detail": str(violation or "")})
    return out


def _suite_refine(b: Build, opts) -> list:
    out = []
    for n in range(b.n_levels):
        P, Q, params = b.level(n), b.level(n + 1), b.params(n)
        out.append({"name": f"level {n + 1} width <= w/t", "ok": Q.width <= params.w / params.t,
                    "detail": f"{Q.width} vs {params.w / params.t}"})
        gap = complement_clearance(P, Q)
        out.append({"name": f"level {n + 1} clears the complement of level {n}", "ok": gap > 0,
                    "detail": str(gap)})
        parity = b.report(n + 1)["parity"]
        bad = sum(v["bad"] for v in parity.values())
        out.append({"name": f"level {n} subdivision parity", "ok": bad == 0, "detail": canonical_json(parity)})
    return out


def _suite_param(b: Build, opts) -> list:
    out = []
    if b.n_levels < 1:
        return out
    L = b.layout(0)
    regions = regions_of(L)
    gamma0 = initial_curve(b.level(0), L)
    entries = entry_times(gamma0, L, regions)
    gamma1, entries1 = lift(gamma0, b.level(1), L, regions, entries)
    rep = lift_report(gamma1, gamma0, entries1, b.params(0).w, opts.samples)
    out.append({"name": "lifted core stays within 5w", "ok": rep.sup_ok, "detail": f"{float(rep.sup_gap.upper):.6g}"})
    out.append({"name": "lift lengths monotone per entry interval", "ok": rep.monotone_ok,
                "detail": f"{len(rep.monotone_failures)} failures"})
    return out


def _suite_crossing(b: Build, opts) -> list:
    out = []
    if b.n_levels < 1:
        return out
    params = b.params(0)
    placement = b.placement(0)
    P = b.level(0)
    rects = subdivide(P, params)
    rng = random.Random(opts.seed)
    slabs = [build_slabs(r, params, placement) for r in rng.sample(rects, min(4, len(rects)))]
    sample = [s for group in slabs for s in group][:opts.slabs]
    worst = None
    for s in sample:
        sc = slab_crossing_lower_bound(s, params)
        margin = sc.lower.lower - sc.rect_length
        worst = margin if worst is None or margin < worst else worst
    out.append({"name": f"{len(sample)} slab crossings exceed delta d", "ok": worst is not None and worst > 0,
                "detail": f"min margin {float(worst):.6g}" if worst is not None else ""})
    geos = [LevelGeometry(b.level(0)), LevelGeometry(b.level(1))]
    schedule = b.schedule()
    straights = P.straight_indices()
    audits_ok = True
    for _ in range(opts.segments):
        i = rng.choice(straights)
        audit = segment_budget_audit(random_crossing_segment(P, i, rng), geos, schedule, i)
        audits_ok = audits_ok and audit.ok
    out.append({"name": f"{opts.segments} crossing segments stay within the loss budgets", "ok": audits_ok,
                "detail": ""})
    L = b.layout(0)
    fine = geos[1]
    cells = SlabCells(L, params, rects)
    holds = True
    for res in adversarial_search(L, max_cuts=opts.max_cuts):
        holds = holds and dichotomy_audit(res.arc, fine, cells).holds
    out.append({"name": "search arcs satisfy the dichotomy", "ok": holds, "detail": ""})
    return out


SUITES = {"plumbing": _suite_plumbing, "rook": _suite_rook, "refine": _suite_refine,
          "param": _suite_param, "crossing": _suite_crossing}


def verify(b: Build, suite: str, opts) -> list:
    names = list(SUITES) if suite == "all" else [suite]
    results = []
    for name in names:
        for item in SUITES[name](b, opts):
            results.append(dict(item, suite=name))
    return results


# ---------------------------------------------------------------- rendering


def _svg_rects(rects, unit, fill, opacity=1.0) -> list:
    out = []
    for r in rects:
        x0, y0, x1, y1 = (float(c * unit) for c in r)
        out.append(f'<rect x="{x0:.9g}" y="{-y1:.9g}" width="{x1 - x0:.9g}" height="{y1 - y0:.9g}" '
                   f'fill="{fill}" fill-opacity="{opacity}"/>')
    return out


def _polyline(points, colour, width, closed=False) -> str:
    tag = "polygon" if closed else "polyline"
    pts = " ".join(f"{float(p[0]):.9g},{-float(p[1]):.9g}" for p in points)
    return f'<{tag} points="{pts}" fill="none" stroke="{colour}" stroke-width="{width:.6g}"/>'


def render_svg(b: Build, level: int, window: Optional[tuple] = None, foliation: int = 0,
               arcs: Sequence[Arc] = (), rooks: bool = True) -> str:
    P = b.level(level)
    rects = [p.rect for p in P.pieces]
    if window is not None:
        wx0, wy0, wx1, wy1 = (c / P.unit for c in window)
        rects = [r for r in rects if r[2] >= wx0 and r[0] <= wx1 and r[3] >= wy0 and r[1] <= wy1]
        vx0, vy0, vx1, vy1 = (float(c) for c in window)
    else:
        vx0 = float(min(r[0] for r in rects) * P.unit)
        vy0 = float(min(r[1] for r in rects) * P.unit)
        vx1 = float(max(r[2] for r in rects) * P.unit)
        vy1 = float(max(r[3] for r in rects) * P.unit)
    stroke = max(vx1 - vx0, vy1 - vy0) / 800
    body = _svg_rects(rects, P.unit, "#4a6fa5")
    if rooks and level >= 1:
        L = b.layout(level - 1)
        cells = SlabCells(L, b.params(level - 1))
        shade = cells.cells
        if window is not None:
            shade = [c for c in shade if c[2] * L.unit >= window[0] and c[0] * L.unit <= window[2]
                     and c[3] * L.unit >= window[1] and c[1] * L.unit <= window[3]]
        body += _svg_rects(shade, L.unit, "#e0a030", 0.35)
    for j in range(1, foliation + 1):
        leaf = foliation_curve(P, Fraction(j, foliation + 1))
        body.append(_polyline(leaf.vertices, "#222222", stroke, closed=True))
    for arc in arcs:
        body.append(_polyline(arc.points, "#c0392b", stroke * 2))
        pa = piercing_components(arc, LevelGeometry(P))
        for lo, hi in pa.changes:
            x, y = _arc_point(arc, (lo + hi) / 2)
            body.append(f'<circle cx="{float(x):.9g}" cy="{-float(y):.9g}" r="{stroke * 4:.6g}" fill="#c0392b"/>')
    w, h = vx1 - vx0, vy1 - vy0
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{vx0:.9g} {-vy1:.9g} {w:.9g} {h:.9g}" '
            f'width="800" height="{800 * h / w:.6g}">\n' + "\n".join(body) + "\n</svg>\n")


def _arc_point(arc: Arc, s: Fraction):
    pts = arc.points
    k = min(int(s), len(pts) - 2)
    r = s - k
    a, c = pts[k], pts[k + 1]
    return a.x + (c.x - a.x) * r, a.y + (c.y - a.y) * r


# ---------------------------------------------------------------- audits


def audit_arc(b: Build, arc: Arc) -> dict:
    geos = [LevelGeometry(b.level(n)) for n in range(b.n_levels + 1)]
    try:
        trace = intersection_trace(arc, geos)
        changes = [piercing_components(arc, g).count for g in geos]
    except CrossingError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    rows = []
    for n, length in enumerate(trace.lengths):
        row = {"level": n, "length_lo": str(length.lower), "length_hi": str(length.upper),
               "changes": changes[n]}
        if n < len(trace.losses):
            row["loss_hi"] = str(trace.losses[n].upper)
        if n < b.n_levels:
            L = b.layout(n)
            hits = count_rook_hits(arc, assemble_plan(L), b.params(n))
            row.update(rook_hits=hits.hits, rook_bound=hits.statement_bound,
                       rook_proof_bound=hits.proof_bound, in_contract=hits.in_contract)
        rows.append(row)
    return {"schema": SCHEMA_VERSION, "arc": arc.to_json(), "levels": rows}


def search(b: Build, budget: Optional[Fraction], max_cuts: int) -> dict:
    if b.n_levels < 1:
        raise CliError("search needs at least one refined level", EXIT_CONFIG)
    L = b.layout(0)
    fine = LevelGeometry(b.level(1))
    cells = SlabCells(L, b.params(0))
    found = []
    for res in adversarial_search(L, max_cuts=max_cuts, budget=budget):
        audit = dichotomy_audit(res.arc, fine, cells)
        found.append({"cuts": res.cuts, "changes": audit.changes, "predicted_changes": res.predicted_changes,
                      "full_slabs": audit.full_slabs, "dichotomy": audit.holds,
                      "length_hi": str(res.length.upper), "arc": res.arc.to_json()})
    single = [f for f in found if f["changes"] == 1]
    return {"schema": SCHEMA_VERSION, "budget": None if budget is None else str(budget),
            "arcs": found, "crosses_without_piercing": bool(single)}


# ---------------------------------------------------------------- entry point


def _window(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected four comma-separated numbers")
    try:
        return tuple(Fraction(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unpierceable", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct the nested plumbings of a config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--levels", type=int)
    p.add_argument("--params-only", action="store_true")
    p.add_argument("--no-topology", dest="topology", action="store_false")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-pieces", type=int, default=DEFAULT_MAX_PIECES,
                   help="refuse levels estimated to exceed this many pieces")

    p = sub.add_parser("verify", help="rerun invariant suites on a build")
    p.add_argument("build", type=Path)
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    p.add_argument("--no-topology", dest="topology", action="store_false")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--slabs", type=int, default=20)
    p.add_argument("--max-cuts", type=int, default=3)
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", type=Path, help="also write the results here")

    p = sub.add_parser("render", help="draw a level as SVG")
    p.add_argument("build", type=Path)
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--window", type=_window, metavar="X0,Y0,X1,Y1", help="real-coordinate crop")
    p.add_argument("--foliation", type=int, default=0)
    p.add_argument("--overlay", type=Path, help="JSON list of arcs")
    p.add_argument("--no-rooks", dest="rooks", action="store_false")

    p = sub.add_parser("audit", help="intersection lengths and rook hits of an arc")
    p.add_argument("build", type=Path)
    p.add_argument("arc", type=Path)
    p.add_argument("--csv", type=Path)

    p = sub.add_parser("search", help="shortest wall-following crossings with few cuts")
    p.add_argument("build", type=Path)
    p.add_argument("--budget", type=Fraction)
    p.add_argument("--max-cuts", type=int, default=4)

    p = sub.add_parser("schedule-check", help="parameter-only schedule checks")
    p.add_argument("config", type=Path)
    p.add_argument("--levels", type=int)
    return ap


def _emit(data) -> None:
    sys.stdout.write(json.dumps(data, sort_keys=True, indent=1) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    log = lambda msg: print(msg, file=sys.stderr)  # noqa: E731

    if args.command == "build":
        config, _ = load_config(args.config)
        workers = resolve_workers(args.workers)
        manifest = build(config, args.out, args.levels, workers, args.topology, args.params_only, log,
                         args.max_pieces)
        for line in manifest["checks"]:
            print(line)
        return 0

    if args.command == "schedule-check":
        _, (eps0, mode, specs) = load_config(args.config)
        specs = specs if args.levels is None else specs[:args.levels]
        try:
            S = params_only_schedule(eps0, mode, specs)
        except ScheduleError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None
        checks = check_global(S)
        for c in checks:
            print(c.line())
        ok = all(c.ok is not False for c in checks)
        if mode.faithful:
            fb = faithful_bounds(S)
            print(f"{'pass' if fb.segment_ok else 'FAIL'} segment keeps {fb.segment_fraction} of w_n")
            print(f"{'pass' if fb.arc_ok else 'FAIL'} arc keeps {fb.arc_fraction} of w_n")
            ok = ok and fb.segment_ok and fb.arc_ok
        return 0 if ok else EXIT_INVARIANT

    b = Build(args.build)
    if args.command == "verify":
        results = verify(b, args.suite, args)
        for r in results:
            print(f"{'pass' if r['ok'] else 'FAIL'} [{r['suite']}] {r['name']} {r['detail']}".rstrip())
        if args.json:
            args.json.write_text(json.dumps(results, sort_keys=True, indent=1) + "\n")
        return 0 if all(r["ok"] for r in results) else EXIT_INVARIANT

    if args.command == "render":
        arcs = []
        if args.overlay:
            data = _read_json(args.overlay)
            arcs = [Arc.from_json(a) for a in (data if isinstance(data, list) else [data])]
        window = args.window
        args.out.write_text(render_svg(b, args.level, window, args.foliation, arcs, args.rooks))
        return 0

    if args.command == "audit":
        report = audit_arc(b, Arc.from_json(_read_json(args.arc)))
        _emit(report)
        if args.csv:
            rows = report["levels"]
            keys = sorted({k for r in rows for k in r})
            with args.csv.open("w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=keys)
                writer.writeheader()
                writer.writerows(rows)
        return 0

    if args.command == "search":
        report = search(b, args.budget, args.max_cuts)
        _emit(report)
        return 0 if all(a["dichotomy"] for a in report["arcs"]) else EXIT_INVARIANT
    return EXIT_CONFIG  # pragma: no cover - argparse rejects unknown commands


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        code = run(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = exc.code
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
