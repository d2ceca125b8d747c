import random
from fractions import Fraction as F

import cvxpy as cp
import pytest

from unpierceable.crossing import (
    Arc,
    CrossingError,
    LevelGeometry,
    SlabCells,
    adversarial_search,
    certified_lower_bound,
    count_rook_hits,
    dichotomy_audit,
    faithful_bounds,
    intersection_trace,
    measured_loss_budget,
    piercing_components,
    random_crossing_segment,
    rubber_band,
    segment_budget_audit,
    slab_cells,
    slab_crossing_lower_bound,
    square_crossing_lower_bound,
    symbolic_budget,
)
from unpierceable.geom import LengthBound
from unpierceable.refine import assemble_plan, build_slabs, subdivide, vsquares
from unpierceable.rook import RookPlacement
from unpierceable.schedule import FAITHFUL, Schedule, params_only_schedule, relaxed

from test_schedule import faithful_prefix


def socp_slab_optimum(cells, top, bottom, u_range):
    """Shortest path top edge -> cells in order -> bottom edge, as a second-order cone program."""
    boxes = [tuple(float(c) for c in cell) for cell in cells]
    n = len(boxes) + 2
    p = cp.Variable((n, 2))
    cons = [p[0, 1] == float(top), p[-1, 1] == float(bottom),
            p[0, 0] >= float(u_range[0]), p[0, 0] <= float(u_range[1]),
            p[-1, 0] >= float(u_range[0]), p[-1, 0] <= float(u_range[1])]
    for k, (u0, s0, u1, s1) in enumerate(boxes, start=1):
        cons += [p[k, 0] >= u0, p[k, 0] <= u1, p[k, 1] >= s0, p[k, 1] <= s1]
    obj = cp.Minimize(sum(cp.norm(p[k + 1] - p[k]) for k in range(n - 1)))
    prob = cp.Problem(obj, cons)
    prob.solve()
    return prob.value


@pytest.fixture(scope="module")
def slabs(small):
    rects = subdivide(small["P"], small["params"])
    return rects, [build_slabs(r, small["params"], small["placement"]) for r in rects[:3]]


@pytest.fixture(scope="module")
def cells(small):
    return SlabCells(small["L"], small["params"])


def _vertical_through(P, piece, x):
    r = P.real_rect(piece)
    m = P.width / 4
    return Arc(((x, r[1] - m), (x, r[3] + m)))


def test_outside_arc_has_no_length(small):
    arc = Arc(((F(5), F(5)), (F(6), F(7))))
    tr = intersection_trace(arc, [small["g0"], small["g1"]])
    assert [l.upper for l in tr.lengths] == [0, 0]


def test_vertical_segment_measures_width(small):
    P = small["P"]
    arc = _vertical_through(P, 0, F(1, 7))
    tr = intersection_trace(arc, [small["g0"], small["g1"]])
    assert tr.lengths[0] == LengthBound.exact(P.width)
    assert tr.losses[0].upper <= measured_loss_budget(small["params"])


def test_levels_must_nest(small):
    with pytest.raises(CrossingError):
        intersection_trace(_vertical_through(small["P"], 0, F(1, 7)), [small["g1"], small["g0"]])


def test_change_loci(small):
    g0 = small["g0"]
    radial = _vertical_through(small["P"], 0, F(1, 7))
    assert piercing_components(radial, g0).count == 1
    # leave through the bottom side, come back, leave again
    weave = Arc(((F(0), F(-1, 4)), (F(0), F(-7, 4)), (F(1, 5), F(-7, 4)), (F(1, 5), F(-1, 4)),
                 (F(2, 5), F(-1, 4)), (F(2, 5), F(-7, 4))))
    assert piercing_components(weave, g0).count == 3
    bounce = Arc(((F(0), F(-1, 4)), (F(0), F(-1)), (F(1, 5), F(-1, 4))))
    assert piercing_components(bounce, g0).count == 0
    with pytest.raises(CrossingError):
        piercing_components(Arc(((F(0), F(-1)), (F(0), F(-7, 4)))), g0)


def test_refined_change_count_is_odd(small):
    arc = _vertical_through(small["P"], 0, F(1, 7))
    assert piercing_components(arc, small["g1"]).count % 2 == 1


def test_rook_column_hits(small):
    P, L, params = small["P"], small["L"], small["params"]
    plan = assemble_plan(L)
    rect = L.rects[0]
    col = 4
    x = rect.rect[0] + (col + F(1, 2)) * rect.base / params.v
    hits = count_rook_hits(_vertical_through(P, 0, x), plan, params)
    per_rect_slabs = (params.t - 1) // (2 * params.v)
    # one rook per slab sits in this column
    assert hits.hits == per_rect_slabs
    assert hits.hits <= params.k_ceil * params.lam
    assert not hits.in_contract  # the segment is 3/2 long
    miss = count_rook_hits(_vertical_through(P, 0, rect.rect[0] + rect.base / 1000), plan, params)
    assert miss.hits == 0


def test_slab_bound_matches_cone_program(small, slabs):
    params = small["params"]
    _, groups = slabs
    for slab in groups[0][:3] + groups[1][:3]:
        sc = slab_crossing_lower_bound(slab, params)
        cells = slab_cells(slab, params.w / params.t)
        u_range = (slab.parent.start, slab.parent.start + slab.parent.base)
        ref = socp_slab_optimum(cells, slab.s_hi, slab.s_lo, u_range)
        assert sc.optimum == pytest.approx(ref, rel=1e-6)
        assert float(sc.lower.lower) <= ref + 1e-9
        assert sc.exceeds_rect_length


def test_slab_bound_refuses_bad_placement(small, slabs):
    slab = slabs[1][0][0]
    bad = type(slab)(slab.parent, slab.index, slab.s_lo, slab.s_hi, RookPlacement(9, (0,) * 9), slab.rooks)
    with pytest.raises(CrossingError):
        slab_crossing_lower_bound(bad, small["params"])


@pytest.mark.parametrize("factor", [F(2), F(1, 3)])
def test_slab_bounds_are_homogeneous(small, slabs, factor):
    params = small["params"]
    slab = slabs[1][0][1]
    a = slab_crossing_lower_bound(slab, params)
    b = slab_crossing_lower_bound(slab, params, scale=factor)
    assert b.additive_bound == factor * a.additive_bound
    assert b.optimum == pytest.approx(float(factor) * a.optimum, rel=1e-9)
    scaled = a.lower.scale(factor)
    assert b.lower.lower <= scaled.upper and scaled.lower <= b.lower.upper


def test_additive_bound_can_exceed_the_optimum(small, slabs):
    # vertical and horizontal travel overlap on diagonal legs, so their sum is no lower bound
    sc = slab_crossing_lower_bound(slabs[1][0][0], small["params"])
    assert not sc.additive_holds and sc.lower.upper <= sc.additive_bound


def test_certified_bound_small_case():
    # one column of horizontal gap and three of drop: sqrt(1 + 9)
    b = certified_lower_bound([(0, 2, 1, 3), (2, 0, 3, 1)], 3, 0)
    assert b.lower ** 2 <= 10 <= b.upper ** 2 and b.width < F(1, 2 ** 100)


def test_rubber_band_simple_case():
    length, pts, _ = rubber_band([(0, 2, 1, 3), (2, 0, 3, 1)], 3, 0, (0, 3))
    assert length == pytest.approx(10 ** 0.5, rel=1e-9)


def test_square_bound_composes(small, slabs):
    params = small["params"]
    group = slabs[1][0]
    squares = vsquares(group, params)
    sq = squares[0]
    total = square_crossing_lower_bound(sq, params)
    parts = [slab_crossing_lower_bound(s, params).lower for s in sq]
    assert total == sum(parts[1:], parts[0])
    assert len(sq) == params.k_ceil
    assert total.lower > params.k * params.rect_length
    assert square_crossing_lower_bound(sq[:1], params) == parts[0]


def test_faithful_budget_identity():
    S = params_only_schedule(F(1, 4), FAITHFUL, faithful_prefix())
    p = S.levels[0]
    assert p.k * p.rect_length >= 1


def test_random_segments_within_budget(small):
    P = small["P"]
    S = Schedule(F(1, 2), relaxed(F(1, 4)), (small["params"],))
    rng = random.Random(5)
    for _ in range(15):
        i = rng.choice(P.straight_indices())
        audit = segment_budget_audit(random_crossing_segment(P, i, rng), [small["g0"], small["g1"]], S, i)
        assert audit.ok
        assert audit.trace.losses[0].upper <= audit.measured_budgets[0]
        assert audit.symbolic_budgets[0] == symbolic_budget(0, P.width, 9)


def test_budget_audit_rejects_non_crossing(small):
    S = Schedule(F(1, 2), relaxed(F(1, 4)), (small["params"],))
    short = Arc(((F(1, 7), F(-1)), (F(1, 7), F(-3, 4))))
    with pytest.raises(CrossingError):
        segment_budget_audit(short, [small["g0"], small["g1"]], S, 0)


def test_faithful_fractions():
    fb = faithful_bounds(params_only_schedule(F(1, 4), FAITHFUL, faithful_prefix()))
    assert fb.loss_sum <= F(1, 10) and fb.segment_fraction >= F(9, 10)
    assert fb.excess_sum < F(1, 100) and fb.arc_fraction > F(9, 10) - F(1, 100)
    assert fb.segment_ok and fb.arc_ok


def test_search_arcs_satisfy_dichotomy(small, cells):
    results = adversarial_search(small["L"], max_cuts=3)
    assert [r.cuts for r in results] == [0, 1, 2, 3]
    for r in results:
        audit = dichotomy_audit(r.arc, small["g1"], cells)
        assert audit.holds
        assert audit.changes == r.predicted_changes
    free = results[0]
    assert dichotomy_audit(free.arc, small["g1"], cells).full_slabs >= 1
    tr = intersection_trace(free.arc, [small["g0"], small["g1"]])
    assert tr.lengths[1].lower > 0


def test_search_under_short_budget(small):
    params = small["params"]
    assert adversarial_search(small["L"], max_cuts=3, budget=params.rect_length) == []


def test_wall_following_beats_no_slab_bound(small, slabs):
    params = small["params"]
    free = adversarial_search(small["L"], max_cuts=0)[0]
    group = slabs[1][0]
    # the arc crosses every slab of the first rectangle, so it is at least as long as their bounds
    total = square_crossing_lower_bound(group, params)
    assert free.length.lower >= total.upper


def test_random_polylines_satisfy_dichotomy(small, cells):
    P = small["P"]
    rng = random.Random(11)
    r = P.real_rect(0)
    for _ in range(10):
        ys = sorted((r[1] + (r[3] - r[1]) * F(rng.randrange(1, 999), 1000) for _ in range(4)), reverse=True)
        xs = [r[0] + (r[2] - r[0]) * F(rng.randrange(1, 999), 1000) for _ in range(5)]
        pts = [(xs[0], r[3] + F(1, 4))] + [(x, y) for x, y in zip(xs[1:], ys)] + [(xs[-1], r[1] - F(1, 4))]
        assert dichotomy_audit(Arc(tuple(pts)), small["g1"], cells).holds


def test_arc_json_roundtrip():
    arc = Arc(((F(1, 3), F(0)), (F(2), F(-5, 7))))
    assert Arc.from_json(arc.to_json()) == arc
    assert arc.scaled(3).points[0].x == 1
    with pytest.raises(CrossingError):
        Arc(((F(0), F(0)),))
