"""Plumbings: cyclic chains of rectangular straight and corner pieces.

Coordinates of every piece are integers; the real coordinate is the integer
times :attr:`Plumbing.unit`. A piece records the direction the core curve
travels when it enters (``din``) and leaves (``dout``). Directions are
indices into :data:`DIRS` (east, north, west, south). Traversal is
counterclockwise, so the inner boundary lies on the left and the outer
boundary on the right.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .geom import (
    GeometryError,
    Point,
    as_scalar,
    check_disjoint,
    polygon_area2,
    region_boundary,
    scalar_from_json,
    scalar_to_json,
)

EAST, NORTH, WEST, SOUTH = range(4)
DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))
DIR_NAMES = "ENWS"

STRAIGHT = "S"
CORNER = "C"


class PlumbingError(GeometryError):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message if index is None else f"piece {index}: {message}")


def turn(din: int, dout: int) -> int:
    """+1 for a left turn, -1 for a right turn, 0 when going straight."""
    delta = (dout - din) % 4
    if delta == 0:
        return 0
    if delta == 1:
        return 1
    if delta == 3:
        return -1
    raise PlumbingError(f"reversal from {DIR_NAMES[din]} to {DIR_NAMES[dout]}")


class Piece(NamedTuple):
    kind: str
    x0: int
    y0: int
    x1: int
    y1: int
    din: int
    dout: int

    @property
    def rect(self) -> tuple:
        return (self.x0, self.y0, self.x1, self.y1)

    def side(self, d: int) -> tuple:
        """The side of the rect facing direction ``d`` as an ordered endpoint pair."""
        x0, y0, x1, y1 = self.x0, self.y0, self.x1, self.y1
        if d == EAST:
            return ((x1, y0), (x1, y1))
        if d == NORTH:
            return ((x0, y1), (x1, y1))
        if d == WEST:
            return ((x0, y0), (x0, y1))
        return ((x0, y0), (x1, y0))

    @property
    def entry(self) -> tuple:
        return self.side((self.din + 2) % 4)

    @property
    def exit(self) -> tuple:
        return self.side(self.dout)

    def extent(self, d: int) -> int:
        """Size of the rect measured along direction ``d``."""
        return self.x1 - self.x0 if d % 2 == 0 else self.y1 - self.y0

    @property
    def length(self) -> int:
        """Distance between the openings (straight pieces)."""
        return self.extent(self.din)

    @property
    def width(self) -> int:
        """Distance between the boundary sides (straight pieces)."""
        return self.extent(self.din + 1)

    @property
    def inner_corner(self) -> tuple:
        """Mutual vertex of the two openings of a corner piece."""
        a, b = set(self.entry), set(self.exit)
        common = a & b
        if len(common) != 1:
            raise PlumbingError("corner openings are not adjacent sides")
        return common.pop()

    def outer_offset(self, d: int) -> int:
        """Coordinate of the outer (right-hand) boundary line for travel along ``d``."""
        # the right normal of d is (dy, -dx); the outer side faces that way
        if d == EAST:
            return self.y0
        if d == NORTH:
            return self.x1
        if d == WEST:
            return self.y1
        return self.x0

    def to_json(self) -> list:
        return [self.kind, str(self.x0), str(self.y0), str(self.x1), str(self.y1),
                DIR_NAMES[self.din], DIR_NAMES[self.dout]]

    @classmethod
    def from_json(cls, data: Sequence) -> "Piece":
        kind, x0, y0, x1, y1, din, dout = data
        return cls(kind, int(x0), int(y0), int(x1), int(y1),
                   DIR_NAMES.index(din), DIR_NAMES.index(dout))


def straight(x0, y0, x1, y1, d) -> Piece:
    return Piece(STRAIGHT, x0, y0, x1, y1, d, d)


def corner(x0, y0, x1, y1, din, dout) -> Piece:
    return Piece(CORNER, x0, y0, x1, y1, din, dout)


@dataclass(frozen=True)
class Plumbing:
    pieces: tuple
    unit: Fraction = Fraction(1)
    level: int = 0
    width_units: int = field(init=False)
    min_length_units: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "unit", as_scalar(self.unit))
        straights = [p for p in self.pieces if p.kind == STRAIGHT]
        if not straights:
            raise PlumbingError("plumbing has no straight pieces")
        object.__setattr__(self, "width_units", max(p.width for p in straights))
        object.__setattr__(self, "min_length_units", min(p.length for p in straights))

    def __len__(self):
        return len(self.pieces)

    @property
    def width(self) -> Fraction:
        return self.width_units * self.unit

    @property
    def min_length(self) -> Fraction:
        return self.min_length_units * self.unit

    def real_rect(self, i: int) -> tuple:
        u = self.unit
        return tuple(c * u for c in self.pieces[i].rect)

    def straight_indices(self) -> list:
        return [i for i, p in enumerate(self.pieces) if p.kind == STRAIGHT]

    def corner_indices(self) -> list:
        return [i for i, p in enumerate(self.pieces) if p.kind == CORNER]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "unit": scalar_to_json(self.unit),
            "pieces": [p.to_json() for p in self.pieces],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Plumbing":
        return cls(tuple(Piece.from_json(p) for p in data["pieces"]),
                   scalar_from_json(data["unit"]), int(data.get("level", 0)))


def initial_plumbing(eps) -> Plumbing:
    """Square annulus between the squares of side ``2(1+eps)`` and ``2(1-eps)``.

    Four straight sides and four square corners, traversed counterclockwise
    starting with the bottom side.
    """
    eps = as_scalar(eps)
    if not 0 < eps < 1:
        raise PlumbingError(f"eps must lie in (0, 1), got {eps}")
    q = eps.denominator
    a, b = q - eps.numerator, q + eps.numerator  # inner and outer half-sides in units of 1/q
    pieces = (
        straight(-a, -b, a, -a, EAST),
        corner(a, -b, b, -a, EAST, NORTH),
        straight(a, -a, b, a, NORTH),
        corner(a, a, b, b, NORTH, WEST),
        straight(-a, a, a, b, WEST),
        corner(-b, a, -a, b, WEST, SOUTH),
        straight(-b, -a, -a, a, SOUTH),
        corner(-b, -b, -a, -a, SOUTH, EAST),
    )
    return Plumbing(pieces, Fraction(1, q), 0)


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    corner_dims: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def fail(self, message: str, index: Optional[int] = None):
        self.errors.append(PlumbingError(message, index))

    def raise_if_failed(self):
        if self.errors:
            raise self.errors[0]


def validate_plumbing(P: Plumbing, topology: bool = True) -> ValidationReport:
    """Check piece alternation, exact gluing, orientation, caches and topology.

    ``topology=False`` skips the boundary extraction, which dominates the
    cost on very large plumbings.
    """
    rep = ValidationReport()
    pieces = P.pieces
    n = len(pieces)
    if n < 4 or n % 2:
        rep.fail(f"expected an even number (>= 4) of pieces, got {n}")
    winding = 0
    for i, p in enumerate(pieces):
        if p.x0 >= p.x1 or p.y0 >= p.y1:
            rep.fail("degenerate rectangle", i)
            continue
        if p.kind == STRAIGHT:
            if p.din != p.dout:
                rep.fail("straight piece changes direction", i)
        elif p.kind == CORNER:
            if (p.dout - p.din) % 2 != 1:
                rep.fail("corner piece does not turn by a right angle", i)
            else:
                winding += turn(p.din, p.dout)
                dims = (p.x1 - p.x0, p.y1 - p.y0)
                rep.corner_dims[dims] = rep.corner_dims.get(dims, 0) + 1
        else:
            rep.fail(f"unknown piece kind {p.kind!r}", i)
        q = pieces[(i + 1) % n]
        if p.kind == q.kind:
            rep.fail(f"two consecutive {'straight' if p.kind == STRAIGHT else 'corner'} pieces", i)
        if p.dout != q.din:
            rep.fail(f"exit direction {DIR_NAMES[p.dout]} does not match next entry "
                     f"{DIR_NAMES[q.din]}", i)
        elif p.exit != q.entry:
            rep.fail(f"opening {p.exit} is not glued to next opening {q.entry}", i)
    if rep.ok and winding != 4:
        rep.fail(f"core curve turns {winding} quarter turns, expected +4 (counterclockwise)")
    straights = [p for p in pieces if p.kind == STRAIGHT]
    if straights:
        if P.width_units != max(p.width for p in straights):
            rep.fail("cached width does not match the widest straight piece")
        if P.min_length_units != min(p.length for p in straights):
            rep.fail("cached min-length does not match the shortest straight piece")
    if topology and rep.ok:
        rects = [p.rect for p in pieces]
        clash = check_disjoint(rects)
        if clash is not None:
            rep.fail(f"pieces {clash[0]} and {clash[1]} overlap", clash[0])
        else:
            try:
                polys = region_boundary(rects, disjoint=True)
            except GeometryError as exc:
                rep.fail(str(exc))
            else:
                if len(polys) != 2:
                    rep.fail(f"union has {len(polys)} boundary components, expected 2")
                else:
                    signs = sorted(polygon_area2(poly) > 0 for poly in polys)
                    if signs != [False, True]:
                        rep.fail("union is not an annulus (no hole)")
    return rep


def min_dims(P: Plumbing) -> tuple:
    """``(w, l, d)`` with ``d = min(l, w)``, all exact."""
    w, l = P.width, P.min_length
    return w, l, min(w, l)


@dataclass(frozen=True)
class FoliationCurve:
    t: Fraction
    vertices: tuple

    def __len__(self):
        return len(self.vertices)


def _leaf_offset(p: Piece, d: int, t: Fraction):
    """Perpendicular coordinate of the leaf at parameter ``t`` for travel along ``d``."""
    w = p.extent(d + 1)
    # moving inward means moving toward the left normal of d
    sign = 1 if d in (EAST, SOUTH) else -1
    return p.outer_offset(d) + sign * t * w


def foliation_curve(P: Plumbing, t) -> FoliationCurve:
    """Leaf at distance ``t * width`` from the outer boundary, as a CCW polygon.

    Each corner piece contributes one vertex, where the leaf segments of its
    two neighbouring straights meet. Coordinates are real (unit applied).
    """
    t = as_scalar(t)
    if not 0 <= t <= 1:
        raise PlumbingError(f"foliation parameter must lie in [0, 1], got {t}")
    u = P.unit
    verts = []
    for p in P.pieces:
        if p.kind != CORNER:
            continue
        a = _leaf_offset(p, p.din, t)
        b = _leaf_offset(p, p.dout, t)
        # a fixes y when entering horizontally, x when entering vertically
        x, y = (b, a) if p.din in (EAST, WEST) else (a, b)
        verts.append(Point(x * u, y * u))
    return FoliationCurve(t, tuple(verts))


def core_curve(P: Plumbing) -> FoliationCurve:
    return foliation_curve(P, Fraction(1, 2))


def bend_points(c) -> list:
    """Vertices of a closed rectilinear curve where the direction changes."""
    verts = list(c.vertices if isinstance(c, FoliationCurve) else c)
    n = len(verts)
    out = []
    for i in range(n):
        a, b, e = verts[i - 1], verts[i], verts[(i + 1) % n]
        if (a[0] == b[0] == e[0]) or (a[1] == b[1] == e[1]):
            continue
        out.append(b)
    return out


class JunctionKind(enum.Enum):
    """Shape of a straight piece together with its two corner neighbours.

    U: both corners turn the same way. Z: they turn opposite ways.
    The suffix records the first turn.
    """

    U_LEFT = ("U", 1)
    U_RIGHT = ("U", -1)
    Z_LEFT = ("Z", 1)
    Z_RIGHT = ("Z", -1)

    @property
    def shape(self) -> str:
        return self.value[0]

    @property
    def first_turn(self) -> int:
        return self.value[1]


def classify_junction(P: Plumbing, i: int) -> JunctionKind:
    pieces = P.pieces
    n = len(pieces)
    if pieces[i].kind != STRAIGHT:
        raise PlumbingError("junctions are indexed by straight pieces", i)
    before, after = pieces[i - 1], pieces[(i + 1) % n]
    t0, t1 = turn(before.din, before.dout), turn(after.din, after.dout)
    shape = "U" if t0 == t1 else "Z"
    return JunctionKind((shape, t0))


def reverse_orientation(P: Plumbing) -> Plumbing:
    """Same pieces traversed the other way round (inner boundary on the right)."""
    rev = tuple(Piece(p.kind, p.x0, p.y0, p.x1, p.y1, (p.dout + 2) % 4, (p.din + 2) % 4)
                for p in reversed(P.pieces))
    # keep straight pieces at even positions relative to the original start
    return Plumbing(rev[-1:] + rev[:-1], P.unit, P.level)


def boundary_polygons(P: Plumbing) -> tuple:
    """``(outer, inner)`` boundary polygons in real coordinates."""
    polys = region_boundary([p.rect for p in P.pieces], disjoint=True)
    if len(polys) != 2:
        raise PlumbingError(f"expected 2 boundary components, got {len(polys)}")
    outer, inner = sorted(polys, key=polygon_area2, reverse=True)
    u = P.unit
    return ([Point(x * u, y * u) for x, y in outer], [Point(x * u, y * u) for x, y in inner])
