"""Exact axis-aligned geometry kernel.

Coordinates are exact rationals (:class:`fractions.Fraction`) or plain ints.
Every routine here only adds, subtracts, multiplies, divides and compares,
so it runs unchanged on either number type; large plumbings store integer
coordinates over a common unit and call straight into these functions.

Lengths of oblique segments are irrational in general and are returned as
:class:`LengthBound` enclosures with rational endpoints.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

from sortedcontainers import SortedList

Scalar = Fraction
DEFAULT_PRECISION = 128


class GeometryError(ValueError):
    pass


class NonManifoldError(GeometryError):
    """Raised when a region boundary pinches at a single point."""

    def __init__(self, point):
        self.point = point
        super().__init__(f"region is not a 2-manifold: pinch point at {tuple(point)}")


def as_scalar(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floating-point coordinates are not accepted")
    return Fraction(value)


class Point(NamedTuple):
    x: Fraction
    y: Fraction


class Rect(NamedTuple):
    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    @classmethod
    def make(cls, x0, y0, x1, y1) -> "Rect":
        r = cls(as_scalar(x0), as_scalar(y0), as_scalar(x1), as_scalar(y1))
        if not (r.x0 < r.x1 and r.y0 < r.y1):
            raise GeometryError(f"degenerate rectangle {tuple(r)}")
        return r

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if tuple(self.a) == tuple(self.b):
            raise GeometryError("segment endpoints coincide")

    @classmethod
    def make(cls, a, b) -> "Segment":
        return cls(Point(as_scalar(a[0]), as_scalar(a[1])), Point(as_scalar(b[0]), as_scalar(b[1])))

    @property
    def axis_aligned(self) -> bool:
        return self.a.x == self.b.x or self.a.y == self.b.y

    def point_at(self, t) -> Point:
        return Point(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))

    def length(self, prec: int = DEFAULT_PRECISION) -> "LengthBound":
        return segment_length(self.a, self.b, prec)


@dataclass(frozen=True)
class LengthBound:
    """Closed enclosure ``[lower, upper]`` of a (possibly irrational) length."""

    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        if self.lower > self.upper:
            raise GeometryError("empty enclosure")

    @classmethod
    def exact(cls, value) -> "LengthBound":
        v = as_scalar(value)
        return cls(v, v)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def __add__(self, other: "LengthBound") -> "LengthBound":
        return LengthBound(self.lower + other.lower, self.upper + other.upper)

    def scale(self, k) -> "LengthBound":
        k = as_scalar(k)
        if k < 0:
            raise GeometryError("negative scale")
        return LengthBound(self.lower * k, self.upper * k)

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


ZERO_LENGTH = LengthBound(Fraction(0), Fraction(0))


def sqrt_enclosure(q, prec: int = DEFAULT_PRECISION) -> LengthBound:
    """Rational enclosure of ``sqrt(q)`` with denominators ``2**prec``.

    Exact whenever ``q`` is the square of a rational.
    """
    q = as_scalar(q)
    if q < 0:
        raise GeometryError("sqrt of negative number")
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return LengthBound.exact(Fraction(rn, rd))
    scale = 1 << (2 * prec)
    lo_sq = q.numerator * scale // q.denominator
    hi_sq = -((-q.numerator * scale) // q.denominator)
    lo = math.isqrt(lo_sq)
    hi = math.isqrt(hi_sq)
    if hi * hi < hi_sq:
        hi += 1
    return LengthBound(Fraction(lo, 1 << prec), Fraction(hi, 1 << prec))


def segment_length(a, b, prec: int = DEFAULT_PRECISION) -> LengthBound:
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if dx == 0:
        return LengthBound.exact(abs(dy))
    if dy == 0:
        return LengthBound.exact(abs(dx))
    return sqrt_enclosure(as_scalar(dx * dx + dy * dy), prec)


def polyline_length(points: Sequence, prec: int = DEFAULT_PRECISION) -> LengthBound:
    total = ZERO_LENGTH
    for a, b in zip(points, points[1:]):
        total = total + segment_length(a, b, prec)
    return total


# -- clipping -----------------------------------------------------------------


def _ratio(num, den):
    if isinstance(num, int) and isinstance(den, int):
        return Fraction(num, den)
    return as_scalar(num) / as_scalar(den)


def clip_params(a, b, rect) -> Optional[tuple]:
    """Parameter interval ``(t0, t1)`` of segment ``a->b`` inside closed ``rect``.

    Returns ``None`` when the intersection is empty. A single touching point
    gives ``t0 == t1``.
    """
    t0, t1 = Fraction(0), Fraction(1)
    x0, y0, x1, y1 = rect[0], rect[1], rect[2], rect[3]
    for p, d, lo, hi in ((a[0], b[0] - a[0], x0, x1), (a[1], b[1] - a[1], y0, y1)):
        if d == 0:
            if p < lo or p > hi:
                return None
            continue
        ta = _ratio(lo - p, d)
        tb = _ratio(hi - p, d)
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return None
    return t0, t1


def clip_segment_to_rect(s: Segment, r) -> Optional[Segment]:
    """Portion of ``s`` inside the closed rectangle ``r`` (``None`` if empty or a point)."""
    span = clip_params(s.a, s.b, r)
    if span is None or span[0] == span[1]:
        return None
    return Segment(s.point_at(span[0]), s.point_at(span[1]))


def merge_intervals(intervals: Iterable[tuple]) -> list:
    """Union of closed intervals, touching ones merged."""
    out: list = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _subtract_intervals(a: list, b: list) -> list:
    """``a \\ b`` for sorted disjoint interval lists; degenerate leftovers dropped."""
    out = []
    j = 0
    for lo, hi in a:
        cur = lo
        while j < len(b) and b[j][1] <= cur:
            j += 1
        k = j
        while k < len(b) and b[k][0] < hi:
            if b[k][0] > cur:
                out.append((cur, b[k][0]))
            cur = max(cur, b[k][1])
            k += 1
        if cur < hi:
            out.append((cur, hi))
    return out


# -- spatial index ------------------------------------------------------------


class RectIndex:
    """Uniform-grid bucket index over a list of rectangles."""

    def __init__(self, rects: Sequence, cells: int = 256):
        self.rects = rects
        if not rects:
            self.x0 = self.y0 = 0
            self.cx = self.cy = 1
            self.grid = {}
            return
        xs0 = min(r[0] for r in rects)
        ys0 = min(r[1] for r in rects)
        xs1 = max(r[2] for r in rects)
        ys1 = max(r[3] for r in rects)
        self.x0, self.y0 = xs0, ys0
        self.cx = _cell_size(xs1 - xs0, cells)
        self.cy = _cell_size(ys1 - ys0, cells)
        grid = defaultdict(list)
        for i, r in enumerate(rects):
            ia0, ia1 = self._ix(r[0]), self._ix(r[2])
            ib0, ib1 = self._iy(r[1]), self._iy(r[3])
            for ia in range(ia0, ia1 + 1):
                for ib in range(ib0, ib1 + 1):
                    grid[ia, ib].append(i)
        self.grid = dict(grid)

    def _ix(self, x) -> int:
        return math.floor((x - self.x0) / self.cx)

    def _iy(self, y) -> int:
        return math.floor((y - self.y0) / self.cy)

    def query(self, x0, y0, x1, y1) -> list:
        """Indices of rects that may meet the closed box (superset, sorted)."""
        found = set()
        for ia in range(self._ix(x0), self._ix(x1) + 1):
            for ib in range(self._iy(y0), self._iy(y1) + 1):
                found.update(self.grid.get((ia, ib), ()))
        return sorted(found)

    def query_segment(self, a, b) -> list:
        if a[0] == b[0] or a[1] == b[1]:
            return self.query(min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
        # walk the segment cell by cell through its bounding box rows
        found = set()
        lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])
        for ib in range(self._iy(lo_y), self._iy(hi_y) + 1):
            ya = max(lo_y, self.y0 + ib * self.cy)
            yb = min(hi_y, self.y0 + (ib + 1) * self.cy)
            xa = a[0] + (b[0] - a[0]) * _ratio(ya - a[1], b[1] - a[1])
            xb = a[0] + (b[0] - a[0]) * _ratio(yb - a[1], b[1] - a[1])
            for ia in range(self._ix(min(xa, xb)), self._ix(max(xa, xb)) + 1):
                found.update(self.grid.get((ia, ib), ()))
        return sorted(found)


def _cell_size(extent, cells: int):
    if extent <= 0:
        return 1
    size = as_scalar(extent) / cells
    if isinstance(extent, int) and size >= 1:
        return math.ceil(size)
    return size


# -- region operations --------------------------------------------------------


def length_in_region(polyline: Sequence, rects: Sequence, index: Optional[RectIndex] = None,
                     prec: int = DEFAULT_PRECISION) -> LengthBound:
    """Enclosure of the length of ``polyline`` inside the union of ``rects``.

    Shared edges are never double counted: per segment the clipped parameter
    intervals are merged before measuring.
    """
    if len(polyline) < 2:
        raise GeometryError("polyline needs at least two vertices")
    polyline = [(as_scalar(a), as_scalar(b)) for a, b in polyline]
    total = ZERO_LENGTH
    for a, b in zip(polyline, polyline[1:]):
        if tuple(a) == tuple(b):
            continue
        candidates = index.query_segment(a, b) if index is not None else range(len(rects))
        spans = []
        for i in candidates:
            span = clip_params(a, b, rects[i])
            if span is not None and span[0] < span[1]:
                spans.append(span)
        measure = sum((hi - lo for lo, hi in merge_intervals(spans)), Fraction(0))
        if measure:
            total = total + segment_length(a, b, prec).scale(measure)
    return total


def normalize(rects: Iterable) -> list:
    """Canonical interior-disjoint decomposition by vertical slabs.

    Adjacent slabs with identical vertical cover are merged, so equal point
    sets give equal (sorted) outputs.
    """
    rects = [tuple(r) for r in rects]
    if not rects:
        return []
    xs = sorted({r[0] for r in rects} | {r[2] for r in rects})
    starts = defaultdict(list)
    for r in rects:
        starts[r[0]].append(r)
    active: list = []
    runs: list = []  # (x0, x1, cover)
    for xa, xb in zip(xs, xs[1:]):
        active = [r for r in active if r[2] > xa] + starts.get(xa, [])
        cover = tuple(merge_intervals((r[1], r[3]) for r in active))
        if runs and runs[-1][1] == xa and runs[-1][2] == cover:
            runs[-1] = (runs[-1][0], xb, cover)
        else:
            runs.append((xa, xb, cover))
    out = [(x0, lo, x1, hi) for x0, x1, cover in runs for lo, hi in cover]
    out.sort()
    return out


def difference(a: Iterable, b: Iterable) -> list:
    """Normalized decomposition of ``union(a) \\ union(b)``."""
    a = [tuple(r) for r in a]
    b = [tuple(r) for r in b]
    xs = sorted({r[0] for r in a} | {r[2] for r in a} | {r[0] for r in b} | {r[2] for r in b})
    pieces = []
    for xa, xb in zip(xs, xs[1:]):
        cov_a = merge_intervals((r[1], r[3]) for r in a if r[0] <= xa and r[2] >= xb)
        if not cov_a:
            continue
        cov_b = merge_intervals((r[1], r[3]) for r in b if r[0] <= xa and r[2] >= xb)
        for lo, hi in _subtract_intervals(cov_a, cov_b):
            pieces.append((xa, lo, xb, hi))
    return normalize(pieces)


def union_area(rects: Iterable):
    return sum(((r[2] - r[0]) * (r[3] - r[1]) for r in normalize(rects)), 0)


def check_disjoint(rects: Sequence) -> Optional[tuple]:
    """First pair of rect indices with overlapping interiors, or ``None``.

    Sweep over x with the active y-intervals kept sorted; disjoint active
    intervals mean only immediate neighbours need checking.
    """
    events = []
    for i, r in enumerate(rects):
        events.append((r[0], 1, i))
        events.append((r[2], 0, i))
    events.sort()
    active = SortedList()
    for _, kind, i in events:
        r = rects[i]
        key = (r[1], r[3], i)
        if kind == 0:
            active.discard(key)
            continue
        pos = active.bisect_left(key)
        if pos > 0 and active[pos - 1][1] > r[1]:
            return active[pos - 1][2], i
        if pos < len(active) and active[pos][0] < r[3]:
            return active[pos][2], i
        active.add(key)
    return None


def region_boundary(rects: Sequence, disjoint: bool = False) -> list:
    """Boundary polygons of the union of ``rects``.

    Each polygon is a list of vertices with the region on the left, so outer
    components run counterclockwise and holes clockwise. Pass
    ``disjoint=True`` when the rectangles are already interior-disjoint to
    skip normalization.
    """
    if not disjoint:
        rects = normalize(rects)
    bottoms = defaultdict(list)
    tops = defaultdict(list)
    lefts = defaultdict(list)
    rights = defaultdict(list)
    for x0, y0, x1, y1 in rects:
        bottoms[y0].append((x0, x1))
        tops[y1].append((x0, x1))
        lefts[x0].append((y0, y1))
        rights[x1].append((y0, y1))

    nxt: dict = {}

    def link(p, q):
        if p in nxt:
            raise NonManifoldError(Point(*p))
        nxt[p] = q

    for y in set(bottoms) | set(tops):
        b = merge_intervals(bottoms.get(y, ()))
        t = merge_intervals(tops.get(y, ()))
        for lo, hi in _subtract_intervals(b, t):
            link((lo, y), (hi, y))
        for lo, hi in _subtract_intervals(t, b):
            link((hi, y), (lo, y))
    for x in set(lefts) | set(rights):
        le = merge_intervals(lefts.get(x, ()))
        ri = merge_intervals(rights.get(x, ()))
        for lo, hi in _subtract_intervals(le, ri):
            link((x, hi), (x, lo))
        for lo, hi in _subtract_intervals(ri, le):
            link((x, lo), (x, hi))

    polygons = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        poly = []
        p = start
        while p not in seen:
            seen.add(p)
            poly.append(p)
            if p not in nxt:
                raise GeometryError(f"open boundary chain at {p}")
            p = nxt[p]
        if p != start:
            raise NonManifoldError(Point(*p))
        polygons.append(_drop_collinear(poly))
    return polygons


def _drop_collinear(poly: list) -> list:
    n = len(poly)
    out = []
    for i in range(n):
        a, b, c = poly[i - 1], poly[i], poly[(i + 1) % n]
        if (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1]):
            continue
        out.append(b)
    return out


def polygon_area2(poly: Sequence):
    """Twice the signed area (positive for counterclockwise)."""
    s = 0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


def rect_distance(a, b):
    """L-infinity distance between two closed rectangles."""
    gx = max(b[0] - a[2], a[0] - b[2], 0)
    gy = max(b[1] - a[3], a[1] - b[3], 0)
    return max(gx, gy)


def clearance(a: Sequence, b: Sequence):
    """Exact minimum L-infinity distance between ``union(a)`` and ``union(b)``."""
    if not a or not b:
        raise GeometryError("clearance needs nonempty rect sets")
    if len(a) < len(b):
        a, b = b, a
    best = None
    if len(b) <= 16:
        for r in a:
            for s in b:
                d = rect_distance(r, s)
                if best is None or d < best:
                    best = d
                    if d == 0:
                        return d
        return best
    index = RectIndex(b)
    span = max(index.cx, index.cy) * 260
    for r in a:
        radius = best if best is not None else max(index.cx, index.cy)
        cand = index.query(r[0] - radius, r[1] - radius, r[2] + radius, r[3] + radius)
        while not cand and radius < span:
            radius *= 2
            cand = index.query(r[0] - radius, r[1] - radius, r[2] + radius, r[3] + radius)
        for j in cand if cand else range(len(b)):
            d = rect_distance(r, b[j])
            if best is None or d < best:
                best = d
                if d == 0:
                    return d
    return best


class PointLocator:
    """Crossing-number point-in-polygon test for large rectilinear polygons."""

    def __init__(self, polygon: Sequence, bands: int = 4096):
        edges = []
        n = len(polygon)
        for i in range(n):
            (xa, ya), (xb, yb) = polygon[i], polygon[(i + 1) % n]
            if xa == xb and ya != yb:
                edges.append((xa, min(ya, yb), max(ya, yb)))
        self.edges = edges
        self.ylo = min(e[1] for e in edges)
        self.yhi = max(e[2] for e in edges)
        self.bands = bands
        self.band = as_scalar(self.yhi - self.ylo) / bands
        table = defaultdict(list)
        for e in edges:
            for k in range(self._band(e[1]), self._band(e[2]) + 1):
                table[k].append(e)
        self.table = {k: sorted(v) for k, v in table.items()}
        self.keys = {k: [e[0] for e in v] for k, v in self.table.items()}

    def _band(self, y) -> int:
        return min(self.bands - 1, max(0, math.floor((y - self.ylo) / self.band)))

    def inside(self, p) -> bool:
        """Strict interior test; the caller guarantees ``p`` is off the polygon."""
        x, y = p
        if y <= self.ylo or y >= self.yhi:
            return False
        k = self._band(y)
        row = self.table.get(k, ())
        start = bisect_right(self.keys.get(k, ()), x)
        crossings = 0
        for ex, ylo, yhi in row[start:]:
            # half-open rule on y avoids double counting at vertices
            if ylo <= y < yhi:
                crossings += 1
        return crossings % 2 == 1


def scalar_to_json(value) -> dict:
    q = as_scalar(value)
    return {"n": str(q.numerator), "d": str(q.denominator)}


def scalar_from_json(data) -> Fraction:
    if isinstance(data, dict):
        return Fraction(int(data["n"]), int(data["d"]))
    if isinstance(data, (int, str)):
        return Fraction(data)
    raise GeometryError(f"cannot decode scalar from {data!r}")


def rect_to_json(r) -> list:
    return [scalar_to_json(c) for c in r]


def rect_from_json(data) -> Rect:
    return Rect.make(*(scalar_from_json(c) for c in data))


__all__ = [
    "Scalar", "Point", "Segment", "Rect", "LengthBound", "GeometryError", "NonManifoldError",
    "as_scalar", "sqrt_enclosure", "segment_length", "polyline_length", "clip_params",
    "clip_segment_to_rect", "merge_intervals", "RectIndex", "length_in_region", "normalize",
    "difference", "union_area", "check_disjoint", "region_boundary", "polygon_area2",
    "rect_distance", "clearance", "PointLocator", "scalar_to_json", "scalar_from_json",
    "rect_to_json", "rect_from_json",
]
