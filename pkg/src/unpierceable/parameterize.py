"""Parameterizations of core curves and their lifting from one level to the next.

A core curve is an exact rectilinear polygon. Its vertices are stored on a
doubled integer lattice (half the plumbing's unit) so every core point is
integral, and positions along it are exact L1 arclengths. A
:class:`ParamCurve` maps ``[0, 1]`` onto the core polygon through knots
``(t, arclength)`` with constant speed between consecutive knots.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geom import LengthBound, Point, sqrt_enclosure
from .plumbing import CORNER, DIRS, EAST, SOUTH, WEST, Plumbing
from .refine import TOP, Layout, _frame_origin


class ParameterizationError(ValueError):
    pass


def _offset2(p, d: int) -> int:
    """Doubled coordinate of the core line for travel along ``d`` through piece ``p``."""
    sign = 1 if d in (EAST, SOUTH) else -1
    return 2 * p.outer_offset(d) + sign * p.extent(d + 1)


class CorePolyline:
    """Closed core polygon with cumulative L1 arclengths, doubled-lattice coordinates."""

    def __init__(self, P: Plumbing):
        xs, ys = [], []
        for p in P.pieces:
            if p.kind != CORNER:
                continue
            a, b = _offset2(p, p.din), _offset2(p, p.dout)
            x, y = (b, a) if p.din in (EAST, WEST) else (a, b)
            xs.append(x)
            ys.append(y)
        self.unit = P.unit / 2
        self.xs, self.ys = xs, ys
        n = len(xs)
        cum = [0] * (n + 1)
        for k in range(n):
            k2 = (k + 1) % n
            cum[k + 1] = cum[k] + abs(xs[k2] - xs[k]) + abs(ys[k2] - ys[k])
        self.cum = cum
        self.total = cum[n]
        self._index = None

    def __len__(self):
        return len(self.xs)

    def point_at(self, a) -> tuple:
        """Doubled-lattice point at arclength ``a`` (taken modulo the total)."""
        a = a % self.total
        k = bisect_right(self.cum, a) - 1
        k = min(k, len(self.xs) - 1)
        n = len(self.xs)
        x0, y0 = self.xs[k], self.ys[k]
        x1, y1 = self.xs[(k + 1) % n], self.ys[(k + 1) % n]
        r = a - self.cum[k]
        if x0 == x1:
            return x0, y0 + (r if y1 > y0 else -r)
        return x0 + (r if x1 > x0 else -r), y0

    def real_point(self, a) -> Point:
        x, y = self.point_at(a)
        return Point(x * self.unit, y * self.unit)

    def _build_index(self):
        index = defaultdict(list)
        n = len(self.xs)
        for k in range(n):
            x0, y0 = self.xs[k], self.ys[k]
            x1, y1 = self.xs[(k + 1) % n], self.ys[(k + 1) % n]
            if y0 == y1:
                index[("h", y0)].append((min(x0, x1), max(x0, x1), k))
            else:
                index[("v", x0)].append((min(y0, y1), max(y0, y1), k))
        self._index = index

    def locate(self, x, y) -> Optional[int]:
        """Arclength of the first trace point equal to ``(x, y)``, or None off the trace."""
        if self._index is None:
            self._build_index()
        hits = []
        for lo, hi, k in self._index.get(("h", y), ()):
            if lo <= x <= hi:
                hits.append(self.cum[k] + abs(x - self.xs[k]))
        for lo, hi, k in self._index.get(("v", x), ()):
            if lo <= y <= hi:
                hits.append(self.cum[k] + abs(y - self.ys[k]))
        return min(hits) if hits else None

    def segment_of(self, a) -> int:
        a = a % self.total
        return min(bisect_right(self.cum, a) - 1, len(self.xs) - 1)


@dataclass
class ParamCurve:
    """Piecewise constant-speed map ``[0, 1] -> core polygon``."""

    poly: CorePolyline
    knots_t: list
    knots_a: list

    def __post_init__(self):
        ts, as_ = self.knots_t, self.knots_a
        if ts[0] != 0 or ts[-1] != 1:
            raise ParameterizationError("knots must start at t=0 and end at t=1")
        if any(b <= a for a, b in zip(ts, ts[1:])) or any(b <= a for a, b in zip(as_, as_[1:])):
            raise ParameterizationError("knots must increase strictly")
        if as_[-1] - as_[0] != self.poly.total:
            raise ParameterizationError("the curve must run once around the core")

    @classmethod
    def constant_speed(cls, poly: CorePolyline, start) -> "ParamCurve":
        return cls(poly, [Fraction(0), Fraction(1)], [start, start + poly.total])

    def arclength(self, t):
        t = Fraction(t)
        if not 0 <= t <= 1:
            raise ParameterizationError(f"parameter {t} outside [0, 1]")
        k = min(bisect_right(self.knots_t, t) - 1, len(self.knots_t) - 2)
        t0, t1 = self.knots_t[k], self.knots_t[k + 1]
        a0, a1 = self.knots_a[k], self.knots_a[k + 1]
        return a0 + (a1 - a0) * (t - t0) / (t1 - t0)

    def parameter(self, a) -> Fraction:
        """Inverse of :meth:`arclength` for ``a`` in ``[knots_a[0], knots_a[-1]]``."""
        base = self.knots_a[0]
        a = base + (a - base) % self.poly.total
        k = min(bisect_right(self.knots_a, a) - 1, len(self.knots_a) - 2)
        t0, t1 = self.knots_t[k], self.knots_t[k + 1]
        a0, a1 = self.knots_a[k], self.knots_a[k + 1]
        return t0 + (t1 - t0) * Fraction(a - a0, a1 - a0)

    def __call__(self, t) -> Point:
        return self.poly.real_point(self.arclength(t))

    def breakpoints(self) -> list:
        """Parameters of every knot and every polygon vertex, sorted."""
        ts = set(self.knots_t)
        for c in self.poly.cum[:-1]:
            ts.add(self.parameter(c))
        return sorted(ts)

    def length_between(self, t0, t1) -> Fraction:
        return (self.arclength(t1) - self.arclength(t0)) * self.poly.unit

    def to_json(self) -> dict:
        return {"knots": [[str(t), str(a * self.poly.unit)] for t, a in zip(self.knots_t, self.knots_a)]}


@dataclass(frozen=True)
class Region:
    """A subdivided rectangle (``rect`` >= 0) or a corner piece following one."""

    kind: str
    piece: int
    rect: int
    label: Optional[str] = None


def regions_of(L: Layout) -> list:
    """Subdivided rectangles and corners of the coarse plumbing in core order."""
    out = []
    n = len(L.P.pieces)
    for g in range(L.R):
        i = L.piece_of(g)
        out.append(Region("rect", i, g, L.r_label[g]))
        if g == L.R - 1 or L.piece_of(g + 1) != i:
            out.append(Region("corner", (i + 1) % n, g))
    return out


def _local_point2(P: Plumbing, i: int, u2: int, s2: int, scale2: int = 1) -> tuple:
    """Doubled point at local doubled coordinates in piece ``i`` (lattice scaled by ``scale2``)."""
    p = P.pieces[i]
    ox, oy = _frame_origin(p)
    dx, dy = DIRS[p.din]
    nx, ny = -dy, dx
    return 2 * ox * scale2 + u2 * dx + s2 * nx, 2 * oy * scale2 + u2 * dy + s2 * ny


@dataclass(frozen=True)
class EntryTimes:
    times: tuple
    positions: tuple


def entry_times(gamma: ParamCurve, L: Layout, regions: Sequence[Region]) -> EntryTimes:
    """First entry parameter of the coarse core into each region, in order."""
    P = L.P
    poly = gamma.poly
    positions = []
    for reg in regions:
        i = reg.piece if reg.kind == "rect" else L.piece_of(reg.rect)
        p = P.pieces[i]
        w = p.width
        if reg.kind == "rect":
            u2 = Fraction(2 * L.r_start[reg.rect], L.scale)
        else:
            u2 = 2 * p.length
        x, y = _local_point2(P, i, u2, w)
        a = poly.locate(x, y)
        if a is None:
            raise ParameterizationError(f"region {reg} entry is not on the core curve")
        positions.append(a)
    base = positions[0]
    unwrapped = [base + (a - base) % poly.total for a in positions]
    if any(b <= a for a, b in zip(unwrapped, unwrapped[1:])):
        raise ParameterizationError("the core curve does not meet the regions in order")
    return EntryTimes(tuple(gamma.parameter(a) for a in unwrapped), tuple(unwrapped))


def initial_curve(P: Plumbing, L: Layout) -> ParamCurve:
    """Constant-speed core of ``P`` starting where it enters the first region."""
    poly = CorePolyline(P)
    g = ParamCurve.constant_speed(poly, 0)
    regions = regions_of(L)
    start = entry_times(g, L, regions[:1]).positions[0]
    return ParamCurve.constant_speed(poly, start)


def _anchor2(L: Layout, reg: Region, prev_channel: Optional[int]) -> tuple:
    """Doubled new-lattice anchor point and the channel it sits in."""
    H, t = L.H, L.t
    if reg.kind == "rect":
        j = 0 if reg.label == TOP else t - 1
        u = L.r_start[reg.rect]
        i = L.piece_of(reg.rect)
    else:
        j = prev_channel
        i = L.piece_of(reg.rect)
        u = L.P.pieces[i].length * L.scale
    ox, oy, dx, dy, nx, ny, _ = L.frames[i]
    s2 = (2 * j + 1) * H
    return (2 * ox + 2 * u * dx + s2 * nx, 2 * oy + 2 * u * dy + s2 * ny), j


def lift(gamma: ParamCurve, Q: Plumbing, L: Layout, regions: Sequence[Region],
         entries: Optional[EntryTimes] = None) -> tuple:
    """``(next curve, entry times)``: anchor the finer core at the coarse entry times.

    A T rectangle anchors at its left side in the outermost channel, a B
    rectangle in the innermost; a corner anchors at the right side of the
    rectangle before it, in that rectangle's channel.
    """
    if entries is None:
        entries = entry_times(gamma, L, regions)
    poly = CorePolyline(Q)
    if poly.unit != L.unit / 2:
        raise ParameterizationError("the fine plumbing does not sit on the layout lattice")
    anchors = []
    channel = None
    for reg in regions:
        (x, y), channel = _anchor2(L, reg, channel)
        a = poly.locate(x, y)
        if a is None:
            raise ParameterizationError(f"anchor of {reg} is not on the refined core curve")
        anchors.append(a)
    base = anchors[0]
    unwrapped = [base + (a - base) % poly.total for a in anchors]
    if any(b <= a for a, b in zip(unwrapped, unwrapped[1:])):
        raise ParameterizationError("anchors are not in core order on the refined curve")
    ts = list(entries.times) + [Fraction(1)]
    as_ = unwrapped + [base + poly.total]
    return ParamCurve(poly, ts, as_), entries


def _dist2(p: Point, q: Point) -> Fraction:
    return (p.x - q.x) ** 2 + (p.y - q.y) ** 2


@dataclass
class LiftReport:
    sup_gap: LengthBound
    sup_bound: Fraction
    sup_ok: bool
    samples: int
    monotone_ok: bool
    monotone_failures: list = field(default_factory=list)
    diameter_ok: bool = True
    max_interval_diameter: Optional[LengthBound] = None
    flagged: list = field(default_factory=list)


def _float_track(curve: ParamCurve, ts: Sequence[float]) -> list:
    """Float positions (doubled lattice) of ``curve`` at sorted parameters; a screening aid only."""
    poly = curve.poly
    kt = [float(t) for t in curve.knots_t]
    ka = [float(a) for a in curve.knots_a]
    cum = [float(c) for c in poly.cum]
    xs, ys, n, total = poly.xs, poly.ys, len(poly.xs), float(poly.total)
    out = []
    for t in ts:
        k = min(bisect_right(kt, t) - 1, len(kt) - 2)
        a = (ka[k] + (ka[k + 1] - ka[k]) * (t - kt[k]) / (kt[k + 1] - kt[k])) % total
        j = min(bisect_right(cum, a) - 1, n - 1)
        x0, y0, x1, y1 = xs[j], ys[j], xs[(j + 1) % n], ys[(j + 1) % n]
        r = a - cum[j]
        if x0 == x1:
            out.append((x0, y0 + (r if y1 > y0 else -r)))
        else:
            out.append((x0 + (r if x1 > x0 else -r), y0))
    return out


def sup_gap2(fine: ParamCurve, coarse: ParamCurve, samples: int = 10_000) -> tuple:
    """Exact ``max |fine(t) - coarse(t)|^2`` over all breakpoints plus a uniform grid.

    Every parameter is screened in floating point; the exact maximum is then
    taken over the parameters whose float value comes within a margin far
    above double rounding of the float maximum.
    """
    ts = set(fine.breakpoints()) | set(coarse.breakpoints())
    ts.update(Fraction(k, samples) for k in range(samples + 1))
    ts = sorted(ts)
    tf = [float(t) for t in ts]
    pf, pc = _float_track(fine, tf), _float_track(coarse, tf)
    uf, uc = float(fine.poly.unit), float(coarse.poly.unit)
    d2 = [(xa * uf - xb * uc) ** 2 + (ya * uf - yb * uc) ** 2 for (xa, ya), (xb, yb) in zip(pf, pc)]
    cut = max(d2) - 1e-6
    best, arg = Fraction(0), Fraction(0)
    for t, d in zip(ts, d2):
        if d < cut:
            continue
        e = _dist2(fine(t), coarse(t))
        if e > best:
            best, arg = e, t
    return best, arg, len(ts)


def lift_report(fine: ParamCurve, coarse: ParamCurve, entries: EntryTimes, w: Fraction,
                samples: int = 10_000) -> LiftReport:
    """Sup distance against ``5w``, per-interval monotone length and diameter against ``3*sqrt(2)*w``."""
    best, _, count = sup_gap2(fine, coarse, samples)
    bound = 5 * w
    rep = LiftReport(sqrt_enclosure(best), bound, best <= bound * bound, count, True)
    ts = list(entries.times) + [Fraction(1)]
    poly = fine.poly
    worst = Fraction(0)
    for k in range(len(ts) - 1):
        t0, t1 = ts[k], ts[k + 1]
        if fine.length_between(t0, t1) < coarse.length_between(t0, t1):
            rep.monotone_ok = False
            rep.monotone_failures.append(k)
        a0, a1 = fine.arclength(t0), fine.arclength(t1)
        pts = [poly.point_at(a0), poly.point_at(a1)]
        a = a0
        # walk the vertices strictly inside the interval
        while True:
            seg = poly.segment_of(a)
            nxt = a - (a % poly.total) + poly.cum[seg + 1]
            if nxt >= a1:
                break
            pts.append(poly.point_at(nxt))
            a = nxt
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        diag2 = ((max(xs) - min(xs)) ** 2 + (max(ys) - min(ys)) ** 2) * poly.unit ** 2
        worst = max(worst, diag2)
        if diag2 > 18 * w * w:
            rep.diameter_ok = False
    rep.max_interval_diameter = sqrt_enclosure(worst)
    if not rep.sup_ok:
        rep.flagged.append("sup gap exceeds 5w at this level")
    return rep


@dataclass(frozen=True)
class CauchyRow:
    level: int
    sup_gap: LengthBound
    bound: Fraction
    tail_bound: Fraction


def cauchy_report(curves: Sequence[ParamCurve], widths: Sequence[Fraction], samples: int = 10_000) -> list:
    """Per-level ``sup |gamma^{n+1} - gamma^n|`` with the ``5 w_n`` and ``6 w_{n+1}`` bounds."""
    rows = []
    for n in range(len(curves) - 1):
        best, _, _ = sup_gap2(curves[n + 1], curves[n], samples)
        rows.append(CauchyRow(n, sqrt_enclosure(best), 5 * widths[n],
                              6 * widths[n + 1] if n + 1 < len(widths) else None))
    return rows


@dataclass(frozen=True)
class SeparationReport:
    pairs: int
    min_distance: LengthBound
    min_pair: tuple


def separation_probe(gamma: ParamCurve, pairs: int = 10_000, seed: int = 0,
                     min_segments: int = 2) -> SeparationReport:
    """Minimum distance between sampled points at least one straight piece apart.

    Two points qualify when the core segments holding them are at least
    ``min_segments`` apart cyclically; each core segment crosses one
    straight piece, so two segments apart leaves a whole piece between.
    """
    rng = random.Random(seed)
    poly = gamma.poly
    n = len(poly)
    if n < 2 * min_segments:
        raise ParameterizationError("core polygon too short for the separation gap")
    best, arg, done = None, None, 0
    denom = 1 << 30
    while done < pairs:
        s, t = Fraction(rng.randrange(denom), denom), Fraction(rng.randrange(denom), denom)
        ks, kt = poly.segment_of(gamma.arclength(s)), poly.segment_of(gamma.arclength(t))
        gap = abs(ks - kt)
        if min(gap, n - gap) < min_segments:
            continue
        d = _dist2(gamma(s), gamma(t))
        if best is None or d < best:
            best, arg = d, (s, t)
        done += 1
    return SeparationReport(pairs, sqrt_enclosure(best), arg)
