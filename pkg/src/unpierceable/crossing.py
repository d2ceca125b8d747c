"""Arcs crossing plumbings: intersection lengths, component changes and rook visits.

An arc is a polyline with exact rational vertices in real coordinates.
Plumbings keep integer coordinates over a unit, so every measurement first
maps the arc into the plumbing's lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geom import (
    GeometryError,
    LengthBound,
    Point,
    RectIndex,
    as_scalar,
    clip_params,
    length_in_region,
    merge_intervals,
    polygon_area2,
    polyline_length,
    region_boundary,
    sqrt_enclosure,
    PointLocator,
)
from .plumbing import Plumbing
from .refine import TOP, Layout, RefinementPlan, Slab, build_slabs, subdivide
from .rook import verify_good_placement
from .schedule import LevelParams, Schedule


class CrossingError(ValueError):
    pass


@dataclass(frozen=True)
class Arc:
    points: tuple

    def __post_init__(self):
        pts = tuple(Point(as_scalar(p[0]), as_scalar(p[1])) for p in self.points)
        if len(pts) < 2:
            raise CrossingError("an arc needs at least two points")
        object.__setattr__(self, "points", pts)

    def length(self, prec: int = 128) -> LengthBound:
        return polyline_length(self.points, prec)

    def scaled(self, factor) -> "Arc":
        f = as_scalar(factor)
        return Arc(tuple(Point(p.x * f, p.y * f) for p in self.points))

    def to_json(self) -> dict:
        return {"points": [[str(p.x), str(p.y)] for p in self.points]}

    @classmethod
    def from_json(cls, data) -> "Arc":
        pts = data["points"] if isinstance(data, dict) else data
        return cls(tuple((Fraction(x), Fraction(y)) for x, y in pts))


class LevelGeometry:
    """Lazily built indexes over one plumbing's rectangles."""

    def __init__(self, P: Plumbing):
        self.P = P
        self.rects = [p.rect for p in P.pieces]
        self._index = None
        self._outer = None

    @property
    def index(self) -> RectIndex:
        if self._index is None:
            self._index = RectIndex(self.rects, cells=max(64, int(math.sqrt(len(self.rects))) * 2))
        return self._index

    @property
    def outer(self) -> PointLocator:
        """Locator for the outer boundary polygon (lattice coordinates)."""
        if self._outer is None:
            polys = region_boundary(self.rects, disjoint=True)
            outer = max(polys, key=polygon_area2)
            self._outer = PointLocator(outer)
        return self._outer

    def to_lattice(self, points: Sequence) -> list:
        u = self.P.unit
        return [(p[0] / u, p[1] / u) for p in points]

    def length_inside(self, arc: Arc) -> LengthBound:
        return length_in_region(self.to_lattice(arc.points), self.rects, self.index).scale(self.P.unit)

    def in_region(self, p) -> bool:
        x, y = p
        for i in self.index.query(x, y, x, y):
            r = self.rects[i]
            if r[0] <= x <= r[2] and r[1] <= y <= r[3]:
                return True
        return False


@dataclass
class IntersectionTrace:
    lengths: list
    losses: list = field(default_factory=list)
    budgets: list = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return all(b.lower <= a.upper for a, b in zip(self.lengths, self.lengths[1:]))


def _check_nested(levels: Sequence[LevelGeometry]):
    for a, b in zip(levels, levels[1:]):
        if b.P.level != a.P.level + 1:
            raise CrossingError("levels must be consecutive")
        ratio = a.P.unit / b.P.unit
        if ratio.denominator != 1:
            raise CrossingError("finer level does not refine the coarser lattice")
        ra, rb = a.index, b.index
        if (rb.x0 * b.P.unit < ra.x0 * a.P.unit) or (rb.y0 * b.P.unit < ra.y0 * a.P.unit):
            raise CrossingError("finer level sticks out of the coarser one")


def intersection_trace(arc: Arc, levels: Sequence[LevelGeometry]) -> IntersectionTrace:
    """``l_m = length(arc ∩ Γ_m)`` for every level, with per-level losses."""
    _check_nested(levels)
    lengths = [g.length_inside(arc) for g in levels]
    tr = IntersectionTrace(lengths)
    for a, b in zip(lengths, lengths[1:]):
        tr.losses.append(LengthBound(max(Fraction(0), a.lower - b.upper), a.upper - b.lower))
    if not tr.monotone:
        raise CrossingError("intersection lengths increased from one level to the next")
    return tr


@dataclass
class PiercingApprox:
    """Parameter intervals (segment index + local parameter) of an arc."""

    inside: list
    outside: list
    changes: list

    @property
    def count(self) -> int:
        return len(self.changes)


def _inside_intervals(points: Sequence, geo: LevelGeometry) -> list:
    out = []
    for k, (a, b) in enumerate(zip(points, points[1:])):
        spans = []
        for i in geo.index.query_segment(a, b):
            sp = clip_params(a, b, geo.rects[i])
            if sp is not None:
                spans.append(sp)
        for lo, hi in merge_intervals(spans):
            out.append((k + lo, k + hi))
    return merge_intervals(out)


def _point_at(points: Sequence, s: Fraction):
    k = min(int(s), len(points) - 2)
    r = s - k
    a, b = points[k], points[k + 1]
    return (a[0] + (b[0] - a[0]) * r, a[1] + (b[1] - a[1]) * r)


def piercing_components(arc: Arc, geo: LevelGeometry) -> PiercingApprox:
    """Where the arc passes between the bounded and unbounded sides of the plumbing."""
    pts = geo.to_lattice(arc.points)
    end = Fraction(len(pts) - 1)
    inside = _inside_intervals(pts, geo)
    if inside and (inside[0][0] == 0 or inside[-1][1] == end):
        raise CrossingError("arc endpoints must lie off the plumbing")
    gaps = []
    prev = Fraction(0)
    for lo, hi in inside:
        gaps.append((prev, lo))
        prev = hi
    gaps.append((prev, end))
    tags = []
    for lo, hi in gaps:
        mid = _point_at(pts, (lo + hi) / 2)
        tags.append("inner" if geo.outer.inside(mid) else "outer")
    changes = [inside[k] for k in range(len(inside)) if tags[k] != tags[k + 1]]
    return PiercingApprox(inside, list(zip(gaps, tags)), changes)


def rook_walls(plan: RefinementPlan) -> list:
    e = plan.eta_units // 2
    return [(x0 - e, y0 - e, x1 + e, y1 + e) for x0, y0, x1, y1 in plan.rook_segments]


@dataclass
class RookHits:
    hits: int
    statement_bound: int
    proof_bound: int
    in_contract: bool

    @property
    def within_statement(self) -> bool:
        return self.hits <= self.statement_bound


def count_rook_hits(arc: Arc, plan: RefinementPlan, params: LevelParams,
                    walls: Optional[list] = None, index: Optional[RectIndex] = None) -> RookHits:
    """Thickened rook walls met by the arc, against ``k v + k lambda`` and ``k lambda + 2 k v``."""
    walls = walls if walls is not None else rook_walls(plan)
    index = index if index is not None else RectIndex(walls)
    pts = [(p.x / plan.unit, p.y / plan.unit) for p in arc.points]
    met = set()
    for a, b in zip(pts, pts[1:]):
        for i in index.query_segment(a, b):
            if i not in met and clip_params(a, b, walls[i]) is not None:
                met.add(i)
    k = params.k_ceil
    lam = math.ceil(params.lam)
    return RookHits(len(met), k * params.v + k * lam, k * lam + 2 * k * params.v,
                    arc.length().upper <= 1)


# ---------------------------------------------------------------- slab crossings


def slab_cells(slab: Slab, h: Fraction) -> list:
    """Rook cells ``(u0, s0, u1, s1)`` in the order a downward crossing meets them."""
    colw = slab.parent.base / slab.placement.v
    cells = []
    for rook in slab.rooks:
        u0 = slab.parent.start + rook.column * colw
        cells.append((u0, rook.s_lo, u0 + colw, rook.s_hi))
    cells.sort(key=lambda c: -c[3])
    return cells


def _gap(a0, a1, b0, b1):
    return max(b0 - a1, a0 - b1, 0)


def certified_lower_bound(cells: Sequence, top, bottom, prec: int = 128) -> LengthBound:
    """Every path from ``s = top`` to ``s = bottom`` meeting the cells in order is at least this long.

    By Minkowski's inequality a polyline is at least as long as the vector
    of its total horizontal and total vertical travel.
    """
    horiz = sum((_gap(a[0], a[2], b[0], b[2]) for a, b in zip(cells, cells[1:])), Fraction(0))
    vert = as_scalar(top) - as_scalar(bottom)
    return sqrt_enclosure(horiz * horiz + vert * vert, prec)


def _best_on_segment(p, q, a, b):
    """Point of segment ``ab`` minimising ``|p-x| + |x-q|`` (ternary search on a convex function)."""
    lo, hi = 0.0, 1.0

    def f(t):
        x = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
        return math.dist(p, x) + math.dist(x, q), x

    for _ in range(100):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(m1)[0] <= f(m2)[0]:
            hi = m2
        else:
            lo = m1
    return f((lo + hi) / 2)


def _clip_float(p, q, box):
    lo, hi = 0.0, 1.0
    for a, d, b0, b1 in ((p[0], q[0] - p[0], box[0], box[2]), (p[1], q[1] - p[1], box[1], box[3])):
        if d == 0:
            if not b0 <= a <= b1:
                return None
            continue
        ta, tb = (b0 - a) / d, (b1 - a) / d
        lo, hi = max(lo, min(ta, tb)), min(hi, max(ta, tb))
    return (lo, hi) if lo <= hi else None


def _best_in_box(p, q, box):
    x0, y0, x1, y1 = box
    # if the straight segment already meets the box, the clipped midpoint is optimal
    sp = _clip_float(p, q, box)
    if sp is not None:
        t = (sp[0] + sp[1]) / 2
        return (p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t)
    best = None
    for a, b in (((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x0, y1), (x1, y1)), ((x0, y0), (x0, y1))):
        cost, x = _best_on_segment(p, q, a, b)
        if best is None or cost < best[0]:
            best = (cost, x)
    return best[1]


def rubber_band(cells: Sequence, top, bottom, u_range: tuple, tol: float = 2.0 ** -64,
                max_iter: int = 10_000) -> tuple:
    """Near-shortest path from the top edge through the cells to the bottom edge.

    Works in floating point (it is only an upper bound on the optimum);
    returns ``(length, waypoints, iterations)``.
    """
    boxes = [tuple(float(v) for v in c) for c in cells]
    top, bottom = float(top), float(bottom)
    lo, hi = float(u_range[0]), float(u_range[1])
    boxes = [(lo, top, hi, top)] + boxes + [(lo, bottom, hi, bottom)]
    pts = [((b[0] + b[2]) / 2, (b[1] + b[3]) / 2) for b in boxes]

    def total(ps):
        return sum(math.dist(a, b) for a, b in zip(ps, ps[1:]))

    prev = total(pts)
    for it in range(1, max_iter + 1):
        for k in range(len(pts)):
            p = pts[k - 1] if k > 0 else pts[k + 1]
            q = pts[k + 1] if k + 1 < len(pts) else pts[k - 1]
            pts[k] = _best_in_box(p, q, boxes[k])
        cur = total(pts)
        if prev - cur <= tol * max(1.0, cur):
            return cur, pts, it
        prev = cur
    raise CrossingError(f"rubber band did not converge (last improvement {prev - cur:g})")


@dataclass
class SlabCrossing:
    lower: LengthBound
    optimum: float
    rect_length: Fraction
    additive_bound: Fraction
    iterations: int

    @property
    def additive_holds(self) -> bool:
        """Whether the optimum reaches the sum of vertical and horizontal travel (it need not)."""
        return self.optimum >= float(self.additive_bound)

    @property
    def exceeds_rect_length(self) -> bool:
        return self.lower.lower > self.rect_length


def slab_crossing_lower_bound(slab: Slab, params: LevelParams, scale=1) -> SlabCrossing:
    """Certified lower bound and near-optimal length of a top-to-bottom slab crossing.

    ``scale`` dilates the slab geometry (used to check homogeneity).
    """
    ok, violation = verify_good_placement(slab.placement)
    if not ok:
        raise CrossingError(f"slab crossing needs a good placement: {violation}")
    f = as_scalar(scale)
    h = params.w / params.t
    cells = [tuple(c * f for c in cell) for cell in slab_cells(slab, h)]
    top, bottom = slab.s_hi * f, slab.s_lo * f
    lower = certified_lower_bound(cells, top, bottom)
    u_range = (slab.parent.start * f, (slab.parent.start + slab.parent.base) * f)
    opt, _, iters = rubber_band(cells, top, bottom, u_range)
    colw = slab.parent.base / slab.placement.v * f
    additive = (top - bottom) + colw * column_separation(slab.placement.cols)
    return SlabCrossing(lower, opt, params.rect_length * f, additive, iters)


def column_separation(cols: Sequence[int]) -> int:
    """Total number of whole columns strictly between consecutive rooks, row by row."""
    return sum(max(abs(a - b) - 1, 0) for a, b in zip(cols, cols[1:]))


def square_crossing_lower_bound(slabs: Sequence[Slab], params: LevelParams) -> LengthBound:
    """Sum of the certified slab bounds over a stack of slabs."""
    total = LengthBound(Fraction(0), Fraction(0))
    for s in slabs:
        total = total + slab_crossing_lower_bound(s, params).lower
    return total


# ---------------------------------------------------------------- length budgets


def measured_loss_budget(params: LevelParams) -> Fraction:
    """``t eta + ceil(k) lambda (2w/t)``: foliation walls plus rook walls a segment can lose."""
    return params.t * params.eta + params.k_ceil * params.lam * 2 * params.w / params.t


def symbolic_budget(m: int, w_n: Fraction, v_m: int) -> Fraction:
    """``w_n (1/100^(m+1) + 1/v_m)``: per-level loss allowance for a segment of level ``n``."""
    return w_n * (Fraction(1, 100 ** (m + 1)) + Fraction(1, v_m))


@dataclass
class SegmentAudit:
    trace: IntersectionTrace
    measured_budgets: list
    symbolic_budgets: list
    ok: bool
    lower_bound: Fraction


def segment_budget_audit(arc: Arc, levels: Sequence[LevelGeometry], schedule: Schedule,
                         piece_index: int) -> SegmentAudit:
    """Per-level losses of an axis-aligned segment crossing one straight piece of the first level."""
    if len(arc.points) != 2:
        raise CrossingError("the budget audit takes a single segment")
    a, b = arc.points
    if a.x != b.x and a.y != b.y:
        raise CrossingError("the budget audit takes an axis-aligned segment")
    P0 = levels[0].P
    p = P0.pieces[piece_index]
    r = [c * P0.unit for c in p.rect]
    vertical = a.x == b.x
    if vertical:
        covers = min(a.y, b.y) < r[1] and max(a.y, b.y) > r[3] and r[0] < a.x < r[2]
    else:
        covers = min(a.x, b.x) < r[0] and max(a.x, b.x) > r[2] and r[1] < a.y < r[3]
    if not covers or p.kind != "S" or (p.din in (0, 2)) != vertical:
        raise CrossingError("segment does not cross the straight piece from one boundary side to the other")
    tr = intersection_trace(arc, levels)
    w_n = schedule.levels[0].w
    measured, symbolic = [], []
    ok = True
    for m, loss in enumerate(tr.losses):
        params = schedule.levels[m]
        mb = measured_loss_budget(params)
        sb = symbolic_budget(m, w_n, params.v)
        measured.append(mb)
        symbolic.append(sb)
        ok = ok and loss.upper <= mb and loss.upper <= sb
    total = sum(symbolic, Fraction(0))
    ok = ok and tr.lengths[-1].lower >= tr.lengths[0].upper - total
    return SegmentAudit(tr, measured, symbolic, ok, tr.lengths[0].lower - total)


def random_crossing_segment(P: Plumbing, piece_index: int, rng, denominator: int = 10_007) -> Arc:
    """Segment perpendicular to a straight piece, crossing it with a quarter-width overhang each side."""
    p = P.pieces[piece_index]
    if p.kind != "S":
        raise CrossingError("crossing segments are drawn across straight pieces")
    x0, y0, x1, y1 = (c * P.unit for c in p.rect)
    m = P.width / 4
    f = Fraction(rng.randrange(1, denominator), denominator)
    if p.din in (0, 2):
        x = x0 + (x1 - x0) * f
        return Arc(((x, y0 - m), (x, y1 + m)))
    y = y0 + (y1 - y0) * f
    return Arc(((x0 - m, y), (x1 + m, y)))


@dataclass(frozen=True)
class FaithfulBound:
    loss_sum: Fraction
    excess_sum: Fraction
    segment_fraction: Fraction
    arc_fraction: Fraction
    segment_ok: bool
    arc_ok: bool


def faithful_bounds(schedule: Schedule) -> FaithfulBound:
    """Exact partial sums behind the ``9/10`` and ``9/10 - 1/100`` fractions of ``w_n``."""
    loss = sum((Fraction(1, 100 ** (j + 1)) + Fraction(1, p.v) for j, p in enumerate(schedule.levels)),
               Fraction(0))
    excess = schedule.sum_delta
    seg = 1 - loss
    thm = seg - excess
    return FaithfulBound(loss, excess, seg, thm,
                         loss <= Fraction(1, 10) and seg >= Fraction(9, 10),
                         excess < Fraction(1, 100) and thm > Fraction(9, 10) - Fraction(1, 100)
                         and thm > 0)


# ---------------------------------------------------------------- adversarial search


@dataclass
class SearchResult:
    arc: Arc
    cuts: int
    predicted_changes: int
    length: LengthBound
    rect: int


def _rect_rows(L: Layout, g: int) -> list:
    """``(top s, bottom s, rook u)`` for each rook row of rectangle ``g``, top to bottom."""
    H, t = L.H, L.t
    rows = []
    for q in range((t - 1) // 2):
        e = t - 1 - 2 * q
        rows.append(((e + 1) * H, (e - 1) * H, L.cut_u(g, e)))
    return rows


def _search_dp(rows: list, u0: int, max_cuts: int) -> dict:
    """Least horizontal travel for each number of cut rows; returns cut count -> row choices."""
    # state: (u, cuts) -> (cost, choices)
    states = {(u0, 0): (0, ())}
    for top, bottom, c in rows:
        nxt = {}
        for (u, k), (cost, ch) in states.items():
            cand = [((c, k), cost + abs(u - c), ch + (1,))]
            if u != c and k < max_cuts:
                cand.append(((u, k + 1), cost, ch + (0,)))
            for key, val_cost, val_ch in cand:
                if key not in nxt or val_cost < nxt[key][0]:
                    nxt[key] = (val_cost, val_ch)
        states = nxt
    best = {}
    for (u, k), (cost, ch) in states.items():
        if k not in best or cost < best[k][0]:
            best[k] = (cost, ch)
    return best


def _arc_from_choices(L: Layout, g: int, rows: list, u0: int, choices: tuple) -> Arc:
    i = L.piece_of(g)
    H, t = L.H, L.t
    margin = H
    pts = [(u0, t * H + margin)]
    u = u0
    for (top, bottom, c), follow in zip(rows, choices):
        if follow and u != c:
            pts.append((u, top))
            pts.append((c, top))
            u = c
        pts.append((u, bottom))
    pts.append((u, -margin))
    # drop collinear interior points
    clean = [pts[0]]
    for k in range(1, len(pts) - 1):
        a, b, c = clean[-1], pts[k], pts[k + 1]
        if (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1]):
            continue
        clean.append(b)
    clean.append(pts[-1])
    out = []
    for uu, ss in clean:
        x0, y0, x1, y1 = L.local_rect(i, uu, ss, uu, ss)
        out.append(Point(x0 * L.unit, y0 * L.unit))
    return Arc(tuple(out))


def adversarial_search(L: Layout, rect: Optional[int] = None, max_cuts: int = 6,
                       budget: Optional[Fraction] = None) -> list:
    """Shortest arcs through one T rectangle using at most ``c`` cut rows, for each ``c``.

    An arc follows the walls that belong to the bounded side of the next
    plumbing: down each rook wall, then sideways along the next row
    boundary. Cutting a row instead drops straight through its two
    channels, which switches sides twice. Arcs longer than ``budget`` are
    dropped, so the list may come back empty.
    """
    if rect is None:
        rect = next(g for g in range(L.R) if L.r_label[g] == TOP)
    if L.r_label[rect] != TOP:
        raise CrossingError("the search runs inside a T rectangle")
    rows = _rect_rows(L, rect)
    u0 = rows[0][2]
    best = _search_dp(rows, u0, max_cuts)
    out = []
    for k in sorted(best):
        _, choices = best[k]
        arc = _arc_from_choices(L, rect, rows, u0, choices)
        length = arc.length()
        if budget is not None and length.lower > budget:
            continue
        out.append(SearchResult(arc, k, 1 + 2 * k, length, rect))
    return out


@dataclass
class DichotomyAudit:
    changes: int
    full_slabs: int
    slabs_checked: int

    @property
    def holds(self) -> bool:
        return self.full_slabs > 0 or self.changes >= 3


class SlabCells:
    """Rook cells of every slab of a level, indexed for arc queries (lattice of the layout)."""

    def __init__(self, L: Layout, params: LevelParams, rects: Optional[list] = None):
        from .refine import _local_to_global

        self.L = L
        self.cells = []
        self.owner = []
        rects = rects if rects is not None else subdivide(L.P, params)
        self.n_slabs = 0
        for r in rects:
            p = L.P.pieces[r.piece]
            for slab in build_slabs(r, params, L.placement):
                sid = self.n_slabs
                self.n_slabs += 1
                for u0, s0, u1, s1 in slab_cells(slab, params.w / params.t):
                    box = _local_to_global(p, L.P.unit, u0, s0, u1, s1)
                    self.cells.append(tuple(c / L.unit for c in box))
                    self.owner.append(sid)
        self.index = RectIndex(self.cells)

    def full_slabs(self, arc: Arc) -> int:
        pts = [(p.x / self.L.unit, p.y / self.L.unit) for p in arc.points]
        seen = {}
        for a, b in zip(pts, pts[1:]):
            for i in self.index.query_segment(a, b):
                if clip_params(a, b, self.cells[i]) is not None:
                    seen.setdefault(self.owner[i], set()).add(i)
        v = self.L.v
        return sum(1 for s in seen.values() if len(s) == v)


def dichotomy_audit(arc: Arc, fine: LevelGeometry, cells: SlabCells) -> DichotomyAudit:
    """Either every rook cell of some slab is visited, or the arc switches sides at least 3 times."""
    pa = piercing_components(arc, fine)
    return DichotomyAudit(pa.count, cells.full_slabs(arc), cells.n_slabs)


__all__ = [
    "Arc", "CrossingError", "LevelGeometry", "IntersectionTrace", "intersection_trace",
    "PiercingApprox", "piercing_components", "rook_walls", "RookHits", "count_rook_hits",
    "slab_cells", "column_separation", "certified_lower_bound", "rubber_band", "SlabCrossing",
    "slab_crossing_lower_bound", "square_crossing_lower_bound", "measured_loss_budget",
    "symbolic_budget", "random_crossing_segment", "SegmentAudit", "segment_budget_audit", "FaithfulBound", "faithful_bounds",
    "SearchResult", "adversarial_search", "DichotomyAudit", "SlabCells", "dichotomy_audit",
    "GeometryError",
]
