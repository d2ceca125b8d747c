import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from unpierceable.geom import (
    GeometryError,
    LengthBound,
    NonManifoldError,
    PointLocator,
    RectIndex,
    Segment,
    check_disjoint,
    clearance,
    clip_segment_to_rect,
    difference,
    length_in_region,
    merge_intervals,
    normalize,
    polygon_area2,
    polyline_length,
    rect_from_json,
    rect_to_json,
    region_boundary,
    scalar_from_json,
    scalar_to_json,
    sqrt_enclosure,
    union_area,
)
from unpierceable.plumbing import initial_plumbing

from oracles import monte_carlo_length, random_case

coord = st.fractions(min_value=-4, max_value=4, max_denominator=12)


@st.composite
def rects(draw, n=st.integers(1, 6)):
    out = []
    for _ in range(draw(n)):
        x0, x1 = sorted(draw(st.lists(coord, min_size=2, max_size=2, unique=True)))
        y0, y1 = sorted(draw(st.lists(coord, min_size=2, max_size=2, unique=True)))
        out.append((x0, y0, x1, y1))
    return out


def test_clip_examples():
    s = Segment.make((0, 0), (2, 0))
    assert clip_segment_to_rect(s, (0, -1, 1, 1)) == Segment.make((0, 0), (1, 0))
    assert clip_segment_to_rect(Segment.make((5, 5), (6, 6)), (0, 0, 1, 1)) is None
    diag = Segment.make((0, 0), (1, 1))
    assert clip_segment_to_rect(diag, (0, 0, 1, 1)) == diag


def test_length_examples():
    assert length_in_region([(F(1, 2), 0), (F(1, 2), 1)], [(0, 0, 1, 1)]) == LengthBound.exact(1)
    two = [(0, -1, 1, 1), (1, -1, 2, 1)]
    assert length_in_region([(0, 0), (2, 0)], two) == LengthBound.exact(2)


def test_floats_rejected():
    with pytest.raises(TypeError):
        length_in_region([(0.5, 0), (0.5, 1)], [(0, 0, 1, 1)])


def test_sqrt_enclosure_tight_and_exact():
    b = sqrt_enclosure(2)
    assert b.lower ** 2 < 2 < b.upper ** 2
    assert b.width <= F(1, 2 ** 127)
    assert sqrt_enclosure(F(9, 4)).is_exact


def test_monte_carlo_agreement_small():
    rng = random.Random(1)
    for seed in range(5):
        r, poly = random_case(rng)
        got = length_in_region(poly, r)
        est, sigma = monte_carlo_length(poly, r, samples=200_000, seed=seed)
        mid = float(got.lower + got.upper) / 2
        assert abs(mid - est) <= 4 * sigma + 1e-12


def test_region_boundary_examples():
    polys = region_boundary([(0, 0, 2, 1)])
    assert len(polys) == 1 and len(polys[0]) == 4
    P = initial_plumbing(F(1, 4))
    polys = region_boundary([P.real_rect(i) for i in range(len(P))])
    areas = sorted(polygon_area2(p) / 2 for p in polys)
    # hole runs clockwise, so its signed area is negative
    assert areas == [-(2 * (1 - F(1, 4))) ** 2, (2 * (1 + F(1, 4))) ** 2]
    with pytest.raises(NonManifoldError):
        region_boundary([(0, 0, 1, 1), (1, 1, 2, 2)])


def test_clearance_examples():
    assert clearance([(0, 0, 1, 1)], [(2, 0, 3, 1)]) == 1
    assert clearance([(0, 0, 1, 1)], [(0, 0, 1, 1)]) == 0


def test_json_roundtrip():
    assert scalar_from_json(scalar_to_json(F(-7, 3))) == F(-7, 3)
    r = (F(1, 3), F(0), F(2), F(5, 2))
    assert tuple(rect_from_json(rect_to_json(r))) == r
    with pytest.raises(GeometryError):
        scalar_from_json(1.5)


@given(rects(), coord, coord, coord, coord)
@settings(max_examples=150, deadline=None)
def test_length_additive_over_complement(rs, x0, y0, x1, y1):
    if (x0, y0) == (x1, y1):
        return
    poly = [(x0, y0), (x1, y1)]
    box = (F(-5), F(-5), F(5), F(5))
    inside = length_in_region(poly, rs)
    outside = length_in_region(poly, difference([box], rs))
    total = polyline_length(poly)
    # the two closed sets share their boundary, so together they cover the segment
    assert inside.upper + outside.upper >= total.lower
    assert inside.lower <= total.upper and outside.lower <= total.upper


@given(rects())
@settings(max_examples=150, deadline=None)
def test_normalize_preserves_area_and_is_disjoint(rs):
    n = normalize(rs)
    assert check_disjoint(n) is None
    assert union_area(n) == union_area(rs)
    assert normalize(n) == n


@given(rects())
@settings(max_examples=100, deadline=None)
def test_boundary_area_matches_union(rs):
    try:
        polys = region_boundary(rs)
    except NonManifoldError:
        return
    assert sum(polygon_area2(p) for p in polys) == 2 * union_area(rs)


@given(rects(), rects())
@settings(max_examples=100, deadline=None)
def test_clearance_symmetric_and_index_consistent(a, b):
    assert clearance(a, b) == clearance(b, a)
    brute = min(max(max(s[0] - r[2], r[0] - s[2], 0), max(s[1] - r[3], r[1] - s[3], 0))
                for r in a for s in b)
    assert clearance(a, b) == brute


@given(rects(), coord, coord)
@settings(max_examples=150, deadline=None)
def test_point_locator_matches_rect_membership(rs, x, y):
    n = normalize(rs)
    try:
        polys = region_boundary(n, disjoint=True)
    except NonManifoldError:
        return
    on_edge = any(min(p[i][0], p[(i + 1) % len(p)][0]) <= x <= max(p[i][0], p[(i + 1) % len(p)][0])
                  and min(p[i][1], p[(i + 1) % len(p)][1]) <= y <= max(p[i][1], p[(i + 1) % len(p)][1])
                  for p in polys for i in range(len(p)))
    if on_edge:
        return
    parity = sum(PointLocator(p).inside((x, y)) for p in polys) % 2
    e = F(1, 10**6)
    member = all(any(r[0] <= x + dx <= r[2] and r[1] <= y + dy <= r[3] for r in n)
                 for dx in (-e, e) for dy in (-e, e))
    assert bool(parity) == member


@given(st.lists(st.tuples(coord, coord).map(sorted), max_size=8))
def test_merge_intervals_union(iv):
    merged = merge_intervals(iv)
    assert all(a[1] < b[0] for a, b in zip(merged, merged[1:]))
    for lo, hi in iv:
        assert any(m[0] <= lo and hi <= m[1] for m in merged)


@given(rects(), coord, coord, coord, coord)
@settings(max_examples=100, deadline=None)
def test_index_query_matches_scan(rs, x0, y0, x1, y1):
    idx = RectIndex(rs, cells=4)
    poly = [(x0, y0), (x1, y1)]
    if (x0, y0) == (x1, y1):
        return
    assert length_in_region(poly, rs, idx) == length_in_region(poly, rs)
