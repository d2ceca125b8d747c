"""Build the next plumbing inside a plumbing.

Every straight piece is cut across into subdivided rectangles, labelled T
or B. The plumbing foliation at spacing ``h = w/t`` cuts the piece into
``t`` channels. Each T rectangle carries stacked rook slabs counted from
the inner boundary, each B rectangle the mirror image counted from the
outer boundary. Every rook places a short wall across two neighbouring
channels and opens a gap of half-width ``h`` in the foliation element
between them.

All foliation elements and rook segments are thickened into walls of
thickness ``eta``; what is left of the channels is the next plumbing.
Channel ``j`` (between elements ``j`` and ``j+1``) is cut by one rook wall
in every rectangle that pairs it with a neighbour; at each cut the two
paired channels join through the gap on either side of the wall, so the
new core weaves from the outermost channel to the innermost and back.

Coordinates are integers on a refined lattice: the new unit divides the
old one so that ``h``, ``eta/2`` and every rook column centre are lattice
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geom import GeometryError, Rect
from .plumbing import (
    CORNER,
    DIRS,
    EAST,
    NORTH,
    STRAIGHT,
    SOUTH,
    WEST,
    Piece,
    Plumbing,
    classify_junction,
    turn,
    validate_plumbing,
)
from .rook import RookPlacement, verify_good_placement
from .schedule import LevelParams

TOP, BOTTOM = "T", "B"


class RefinementError(GeometryError):
    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True)
class SubdividedRectangle:
    piece: int
    index: int
    start: Fraction
    base: Fraction
    label: str
    rect: Rect


@dataclass(frozen=True)
class RookSegment:
    u: Fraction
    s_lo: Fraction
    s_hi: Fraction
    skipped: int
    column: int


@dataclass(frozen=True)
class Slab:
    parent: SubdividedRectangle
    index: int
    s_lo: Fraction
    s_hi: Fraction
    placement: RookPlacement
    rooks: tuple

    @property
    def cell(self) -> tuple:
        """``(base, height)`` of one grid cell."""
        v = self.placement.v
        return self.parent.base / v, (self.s_hi - self.s_lo) / v


def _frame_origin(p: Piece) -> tuple:
    if p.din == EAST:
        return p.x0, p.y0
    if p.din == NORTH:
        return p.x1, p.y0
    if p.din == WEST:
        return p.x1, p.y1
    return p.x0, p.y1


def _local_to_global(p: Piece, unit: Fraction, u0, s0, u1, s1) -> Rect:
    ox, oy = _frame_origin(p)
    dx, dy = DIRS[p.din]
    nx, ny = -dy, dx
    xa, ya = ox * unit + u0 * dx + s0 * nx, oy * unit + u0 * dy + s0 * ny
    xb, yb = ox * unit + u1 * dx + s1 * nx, oy * unit + u1 * dy + s1 * ny
    return Rect(min(xa, xb), min(ya, yb), max(xa, xb), max(ya, yb))


def first_label(P: Plumbing, i: int) -> str:
    """T when the corner before piece ``i`` turns left, B when it turns right.

    A left turn puts the corner's boundary sides on the outer side, so they
    extend the bottom (outer) boundary side of piece ``i``.
    """
    before = P.pieces[i - 1]
    return TOP if turn(before.din, before.dout) > 0 else BOTTOM


def split_length(length: Fraction, spacing: Fraction, parity: int) -> list:
    """Cut ``length`` into cells of about ``spacing`` with a cell count of given parity.

    Cells are uniform except the last, which absorbs the remainder; the
    parity is then fixed by merging the last two cells when the merged cell
    is at most ``2*spacing``, otherwise by halving the last cell.
    """
    n0 = int(length // spacing)
    if n0 == 0:
        raise RefinementError(f"length {length} is shorter than one cell of {spacing}")
    rem = length - n0 * spacing
    bases = [spacing] * (n0 - 1) + [spacing + rem]
    if len(bases) % 2 != parity:
        if len(bases) >= 2 and bases[-1] + bases[-2] <= 2 * spacing:
            bases[-2:] = [bases[-1] + bases[-2]]
        elif bases[-1] >= spacing:
            half = bases[-1] / 2
            bases[-1:] = [half, half]
        else:  # pragma: no cover - the last cell is never shorter than the spacing
            raise RefinementError("cannot fix the cell count parity")
    return bases


def subdivide(P: Plumbing, params: LevelParams) -> list:
    """Subdivided rectangles of every straight piece, in core-curve order."""
    spacing = params.rect_length
    out = []
    for i in P.straight_indices():
        p = P.pieces[i]
        kind = classify_junction(P, i)
        parity = 0 if kind.shape == "U" else 1
        length = p.length * P.unit
        try:
            bases = split_length(length, spacing, parity)
        except RefinementError as exc:
            raise RefinementError(f"piece {i}: {exc}") from None
        label = first_label(P, i)
        width = p.width * P.unit
        start = Fraction(0)
        for k, base in enumerate(bases):
            rect = _local_to_global(p, P.unit, start, Fraction(0), start + base, width)
            out.append(SubdividedRectangle(i, k, start, base, label, rect))
            label = BOTTOM if label == TOP else TOP
            start += base
    return out


def slab_count(params: LevelParams) -> int:
    if (params.t - 1) % (2 * params.v):
        raise RefinementError(f"t = {params.t} is not 1 mod 2v = {2 * params.v}")
    return (params.t - 1) // (2 * params.v)


def skipped_element(label: str, q: int, t: int) -> int:
    """Foliation element skipped by rook row ``q`` (counted from the slab side)."""
    return t - 1 - 2 * q if label == TOP else 1 + 2 * q


def row_of_channel(label: str, j: int, t: int) -> Optional[int]:
    """Rook row whose wall cuts channel ``j`` in a rectangle, or None if ``j`` runs free."""
    if label == TOP:
        if j < 1:
            return None
        e = j if j % 2 == 0 else j + 1
        return (t - 1 - e) // 2
    if j > t - 2:
        return None
    e = j if j % 2 == 1 else j + 1
    return (e - 1) // 2


def build_slabs(r: SubdividedRectangle, params: LevelParams, placement: RookPlacement) -> list:
    """Stacked rook slabs of one rectangle, from the inner boundary (T) or outer (B)."""
    v, t = params.v, params.t
    if placement.v != v:
        raise RefinementError(f"placement is for v={placement.v}, level uses v={v}")
    count = slab_count(params)
    h = params.w / t
    colw = r.base / v
    out = []
    for m in range(count):
        rooks = []
        for row in range(v):
            q = m * v + row
            e = skipped_element(r.label, q, t)
            col = placement.cols[row]
            rooks.append(RookSegment(r.start + (2 * col + 1) * colw / 2, (e - 1) * h, (e + 1) * h, e, col))
        if r.label == TOP:
            s_hi = params.w - 2 * m * v * h
            s_lo = s_hi - 2 * v * h
        else:
            s_lo = 2 * m * v * h
            s_hi = s_lo + 2 * v * h
        out.append(Slab(r, m, s_lo, s_hi, placement, tuple(rooks)))
    return out


def vsquares(slabs: Sequence[Slab], params: LevelParams) -> list:
    """Group consecutive slabs into stacks of ``ceil(k)`` (the last may be short)."""
    size = params.k_ceil
    return [tuple(slabs[i:i + size]) for i in range(0, len(slabs), size)]


class Layout:
    """Integer geometry shared by plan assembly and plumbing construction."""

    def __init__(self, P: Plumbing, params: LevelParams, placement: RookPlacement,
                 rects: Optional[Sequence[SubdividedRectangle]] = None):
        ok, violation = verify_good_placement(placement)
        if not ok:
            raise RefinementError(f"rook placement is not good: {violation}")
        if placement.v != params.v:
            raise RefinementError(f"placement is for v={placement.v}, level uses v={params.v}")
        slab_count(params)
        self.P = P
        self.params = params
        self.placement = placement
        self.rects = list(rects) if rects is not None else subdivide(P, params)
        self.t = params.t
        self.v = params.v
        U = P.unit
        if params.w != P.width:
            raise RefinementError("level parameters were derived for a different plumbing width")
        h = Fraction(P.width_units, self.t)
        half_eta = params.eta / (2 * U)
        fracs = [h, half_eta] + [r.base / (U * 2 * self.v) for r in self.rects]
        M = 1
        for f in fracs:
            M = math.lcm(M, f.denominator)
        self.scale = M
        self.unit = U / M
        self.H = int(h * M)
        self.E2 = int(half_eta * M)
        if self.E2 <= 0 or 2 * self.E2 >= self.H:
            raise RefinementError("wall thickness must be positive and below the slab height")
        self.straights = P.straight_indices()
        self.pos_of = {i: k for k, i in enumerate(self.straights)}
        # per rectangle: straight position, start, base, label and column width (lattice ints)
        self.r_pos, self.r_start, self.r_base, self.r_label, self.r_half = [], [], [], [], []
        for r in self.rects:
            self.r_pos.append(self.pos_of[r.piece])
            self.r_start.append(int(r.start / U * M))
            self.r_base.append(int(r.base / U * M))
            self.r_label.append(r.label)
            self.r_half.append(int(r.base / (U * 2 * self.v) * M))
        self.R = len(self.rects)
        self.frames = {}
        for i in self.straights:
            p = P.pieces[i]
            ox, oy = _frame_origin(p)
            dx, dy = DIRS[p.din]
            self.frames[i] = (ox * M, oy * M, dx, dy, -dy, dx, p.din)
        self.warnings = []
        for g in range(self.R):
            if 2 * self.r_half[g] < 2 * self.H:
                self.warnings.append(f"rectangle {g}: rook column narrower than a gap")

    def piece_of(self, g: int) -> int:
        return self.straights[self.r_pos[g]]

    def cut_u(self, g: int, j: int) -> Optional[int]:
        """Local position of the rook wall cutting channel ``j`` in rectangle ``g``."""
        q = row_of_channel(self.r_label[g], j, self.t)
        if q is None:
            return None
        col = self.placement.cols[q % self.v]
        return self.r_start[g] + (2 * col + 1) * self.r_half[g]

    def partner(self, g: int, j: int) -> int:
        q = row_of_channel(self.r_label[g], j, self.t)
        e = skipped_element(self.r_label[g], q, self.t)
        return e - 1 if j == e else e

    def channel_band(self, j: int) -> tuple:
        return j * self.H + self.E2, (j + 1) * self.H - self.E2

    def wall_band(self, e: int) -> tuple:
        return e * self.H - self.E2, e * self.H + self.E2

    def local_rect(self, i: int, u0, s0, u1, s1) -> tuple:
        ox, oy, dx, dy, nx, ny, _ = self.frames[i]
        xa, ya = ox + u0 * dx + s0 * nx, oy + u0 * dy + s0 * ny
        xb, yb = ox + u1 * dx + s1 * nx, oy + u1 * dy + s1 * ny
        return (min(xa, xb), min(ya, yb), max(xa, xb), max(ya, yb))

    def along(self, i: int, u: int) -> int:
        """Global coordinate, on the piece's travel axis, of local position ``u``."""
        ox, oy, dx, dy, *_ = self.frames[i]
        return ox + u * dx if dx else oy + u * dy

    def band(self, i: int, s0: int, s1: int) -> tuple:
        """Global interval on the axis across piece ``i`` covered by ``s0 <= s <= s1``."""
        ox, oy, dx, dy, nx, ny, _ = self.frames[i]
        if nx == 0:
            a, b = oy + s0 * ny, oy + s1 * ny
        else:
            a, b = ox + s0 * nx, ox + s1 * nx
        return min(a, b), max(a, b)

    def next_straight(self, i: int) -> int:
        return self.straights[(self.pos_of[i] + 1) % len(self.straights)]


def _axis_rect(horizontal: bool, along: tuple, across: tuple) -> tuple:
    if horizontal:
        return (along[0], across[0], along[1], across[1])
    return (across[0], along[0], across[1], along[1])


def _span(a: int, b: int) -> tuple:
    return (a, b) if a <= b else (b, a)


def _channel_run(L: Layout, j: int, ia: int, ua: int, ib: int, ub: int) -> list:
    """Pieces of channel ``j`` travelled forward from port ``ua`` in ``ia`` to port ``ub`` in ``ib``."""
    s0, s1 = L.channel_band(j)
    da = L.frames[ia][6]
    if ia == ib:
        if ub <= ua:
            raise RefinementError(f"channel {j} run of non-positive length in piece {ia}")
        return [(STRAIGHT, L.local_rect(ia, ua, s0, ub, s1), da)]
    if L.next_straight(ia) != ib:
        raise RefinementError(f"channel {j} skips a straight piece after piece {ia}")
    db = L.frames[ib][6]
    horiz_a = da in (EAST, WEST)
    across_a = L.band(ia, s0, s1)
    across_b = L.band(ib, s0, s1)
    # the join square is across_b on a's travel axis and across_a on b's
    pa = L.along(ia, ua)
    pb = L.along(ib, ub)
    first = (pa, across_b[0]) if DIRS[da][0] + DIRS[da][1] > 0 else (across_b[1], pa)
    last = (across_a[1], pb) if DIRS[db][0] + DIRS[db][1] > 0 else (pb, across_a[0])
    if first[0] >= first[1] or last[0] >= last[1]:
        raise RefinementError(f"channel {j} run around the corner after piece {ia} is degenerate")
    square = _axis_rect(horiz_a, across_b, across_a)
    return [
        (STRAIGHT, _axis_rect(horiz_a, first, across_a), da),
        (CORNER, square, None),
        (STRAIGHT, _axis_rect(not horiz_a, last, across_b), db),
    ]


def _reverse_run(run: list) -> list:
    return [(k, r, None if d is None else (d + 2) % 4) for k, r, d in reversed(run)]


def _hairpin(L: Layout, g: int, j: int, side: int) -> list:
    """Turn through the gap beside the wall cutting channel ``j`` in rectangle ``g``."""
    i = L.piece_of(g)
    c = L.cut_u(g, j)
    jp = L.partner(g, j)
    e = max(j, jp)
    ua, ub = _span(c + side * L.E2, c + side * (L.H - L.E2))
    d = L.frames[i][6]
    down = j == e  # leaving the upper channel moves toward the outer boundary
    move = (d + 3) % 4 if down else (d + 1) % 4
    b0, b1 = L.channel_band(j)
    q0, q1 = L.channel_band(jp)
    w0, w1 = L.wall_band(e)
    return [
        (CORNER, L.local_rect(i, ua, b0, ub, b1), None),
        (STRAIGHT, L.local_rect(i, ua, w0, ub, w1), move),
        (CORNER, L.local_rect(i, ua, q0, ub, q1), None),
    ]


def _next_cut(L: Layout, g: int, j: int, direction: int) -> int:
    for step in range(1, 3):
        g2 = (g + direction * step) % L.R
        if L.cut_u(g2, j) is not None:
            return g2
    raise RefinementError(f"channel {j} has two consecutive rectangles without a rook wall")


def _run_between(L: Layout, j: int, g: int, g2: int, direction: int) -> list:
    """Channel ``j`` from the wall in rectangle ``g`` to the wall in ``g2``."""
    off = L.H - L.E2
    if direction > 0:
        ia, ua = L.piece_of(g), L.cut_u(g, j) + off
        ib, ub = L.piece_of(g2), L.cut_u(g2, j) - off
        return _channel_run(L, j, ia, ua, ib, ub)
    ia, ua = L.piece_of(g2), L.cut_u(g2, j) + off
    ib, ub = L.piece_of(g), L.cut_u(g, j) - off
    return _reverse_run(_channel_run(L, j, ia, ua, ib, ub))


def weave(L: Layout) -> list:
    """The pieces of the next plumbing as ``(kind, rect, travel direction)`` in core order."""
    g0 = next(g for g in range(L.R) if L.cut_u(g, 0) is not None)
    start = (0, g0, 1)
    j, g, direction = start
    out = []
    visited = 0
    expected = sum(1 for g1 in range(L.R) for j1 in range(L.t) if L.cut_u(g1, j1) is not None)
    while True:
        g2 = _next_cut(L, g, j, direction)
        out.extend(_run_between(L, j, g, g2, direction))
        visited += 1
        out.extend(_hairpin(L, g2, j, -direction))
        j, g, direction = L.partner(g2, j), g2, -direction
        if (j, g, direction) == start:
            break
        if visited > expected:  # pragma: no cover - guarded by the count check below
            break
    if visited != expected:
        raise RefinementError(f"the channels form more than one loop ({visited} of {expected} runs visited)")
    return out


def _assemble_pieces(seq: list) -> list:
    n = len(seq)
    pieces = []
    for k, (kind, rect, d) in enumerate(seq):
        if kind == STRAIGHT:
            pieces.append(Piece(STRAIGHT, *rect, d, d))
        else:
            din = seq[k - 1][2]
            dout = seq[(k + 1) % n][2]
            pieces.append(Piece(CORNER, *rect, din, dout))
    return pieces


def _reverse_pieces(pieces: list) -> list:
    rev = [Piece(p.kind, p.x0, p.y0, p.x1, p.y1, (p.dout + 2) % 4, (p.din + 2) % 4) for p in reversed(pieces)]
    return rev[-1:] + rev[:-1]


@dataclass
class RefinementPlan:
    """Unthickened plan segments on the refined lattice, as degenerate rects."""

    unit: Fraction
    eta_units: int
    rook_segments: list = field(default_factory=list)
    foliation_segments: list = field(default_factory=list)
    corner_segments: list = field(default_factory=list)

    def walls(self) -> list:
        """Every plan segment thickened by ``eta`` in both directions."""
        e = self.eta_units // 2
        return [(x0 - e, y0 - e, x1 + e, y1 + e)
                for x0, y0, x1, y1 in self.rook_segments + self.foliation_segments + self.corner_segments]

    def real(self, segs: Sequence) -> list:
        u = self.unit
        return [Rect(*(c * u for c in s)) for s in segs]


def assemble_plan(L: Layout) -> RefinementPlan:
    """Rook segments, gapped foliation segments in straights, full foliation in corners."""
    plan = RefinementPlan(L.unit, 2 * L.E2)
    H, t = L.H, L.t
    by_piece = {}
    for g in range(L.R):
        by_piece.setdefault(L.piece_of(g), []).append(g)
    for i in L.straights:
        nxt = L.next_straight(i)
        horiz = L.frames[i][6] in (EAST, WEST)
        gaps = {e: [] for e in range(t + 1)}
        for g in by_piece[i]:
            for q in range((t - 1) // 2):
                e = skipped_element(L.r_label[g], q, t)
                c = L.cut_u(g, e if L.r_label[g] == TOP else e - 1)
                gaps[e].append(c)
                plan.rook_segments.append(L.local_rect(i, c, (e - 1) * H, c, (e + 1) * H))
        for e in range(t + 1):
            s = e * H
            cuts = sorted(gaps[e])
            edges = [0] + [x for c in cuts for x in (c - H, c + H)] + [L.P.pieces[i].length * L.scale]
            for a, b in zip(edges[::2], edges[1::2]):
                if a >= b:
                    raise RefinementError(f"gaps close up foliation element {e} in piece {i}")
                plan.foliation_segments.append(L.local_rect(i, a, s, b, s))
            # continuation of the element through the corner that follows this piece
            x_next = L.band(nxt, s, s)[0]
            along_end = L.along(i, L.P.pieces[i].length * L.scale)
            seg_a = _axis_rect(horiz, _span(along_end, x_next), (L.band(i, s, s)[0],) * 2)
            if seg_a[0] != seg_a[2] or seg_a[1] != seg_a[3]:
                plan.corner_segments.append(seg_a)
            start_next = L.along(nxt, 0)
            seg_b = _axis_rect(not horiz, _span(start_next, L.band(i, s, s)[0]), (x_next,) * 2)
            if seg_b[0] != seg_b[2] or seg_b[1] != seg_b[3]:
                plan.corner_segments.append(seg_b)
    return plan


@dataclass
class RefinementReport:
    level: int
    pieces: int = 0
    straights: int = 0
    corners: int = 0
    rectangles: int = 0
    slabs: int = 0
    squares: int = 0
    rooks: int = 0
    width: Fraction = Fraction(0)
    min_length: Fraction = Fraction(0)
    clearance: Fraction = Fraction(0)
    unit: Fraction = Fraction(1)
    parity: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = str(v) if isinstance(v, Fraction) else v
        return out


class RefinementTooLarge(RefinementError):
    pass


def estimated_piece_count(P: Plumbing, params: LevelParams) -> int:
    """Rough size of the refinement: about four pieces per channel per rectangle."""
    spacing = params.rect_length
    rects = sum(max(1, math.floor(P.pieces[i].length * P.unit / spacing)) for i in P.straight_indices())
    return 4 * params.t * rects


def refine(P: Plumbing, params: LevelParams, placement: RookPlacement,
           validate: bool = True, topology: bool = True, max_pieces: Optional[int] = None) -> tuple:
    """``(next plumbing, report)``.

    With ``max_pieces`` set, refuses up front when the estimate exceeds it.
    """
    if max_pieces is not None:
        estimate = estimated_piece_count(P, params)
        if estimate > max_pieces:
            raise RefinementTooLarge(f"refinement would produce about {estimate:.3g} pieces "
                                  f"(limit {max_pieces}); t = {params.t}")
    rects = subdivide(P, params)
    L = Layout(P, params, placement, rects)
    seq = weave(L)
    pieces = _assemble_pieces(seq)
    winding = sum(turn(p.din, p.dout) for p in pieces if p.kind == CORNER)
    if winding == -4:
        pieces = _reverse_pieces(pieces)
    elif winding != 4:
        raise RefinementError(f"woven core turns {winding} quarter turns")
    Q = Plumbing(tuple(pieces), L.unit, P.level + 1)

    per_rect = slab_count(params)
    parity = {"U": [0, 0], "Z": [0, 0]}
    for i in P.straight_indices():
        count = sum(1 for r in rects if r.piece == i)
        shape = classify_junction(P, i).shape
        ok = (count % 2 == 0) == (shape == "U")
        parity[shape][0 if ok else 1] += 1
    rep = RefinementReport(
        level=P.level + 1,
        pieces=len(Q),
        straights=len(Q.straight_indices()),
        corners=len(Q.corner_indices()),
        rectangles=len(rects),
        slabs=len(rects) * per_rect,
        squares=len(rects) * -(-per_rect // params.k_ceil),
        rooks=len(rects) * per_rect * params.v,
        width=Q.width,
        min_length=Q.min_length,
        clearance=params.eta / 2,
        unit=L.unit,
        parity={k: {"ok": v[0], "bad": v[1]} for k, v in parity.items()},
        warnings=list(params.warnings) + L.warnings,
        manifest={"delta": str(params.delta), "v": params.v, "t": params.t, "eta": str(params.eta),
                  "placement": list(placement.cols), "seed": params.seed},
    )
    if validate:
        vr = validate_plumbing(Q, topology=topology)
        if not vr.ok:
            raise RefinementError(f"refined plumbing is invalid: {vr.errors[0]}", rep)
    if Q.width > P.width / params.t:
        raise RefinementError("refined width exceeds w/t", rep)
    return Q, rep
