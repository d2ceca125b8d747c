import dataclasses
from fractions import Fraction as F

import pytest

from unpierceable.cli import complement_clearance
from unpierceable.geom import difference, union_area
from unpierceable.plumbing import classify_junction, initial_plumbing, validate_plumbing
from unpierceable.refine import (
    BOTTOM,
    TOP,
    Layout,
    RefinementError,
    assemble_plan,
    build_slabs,
    first_label,
    refine,
    split_length,
    subdivide,
)
from unpierceable.rook import RookPlacement, generate_good_placement
from unpierceable.schedule import derive_from_dims, derive_level, relaxed

from conftest import small_level
from oracles import L_CORE, thicken_core

QUARTER = relaxed(F(1, 4))


def test_uniform_subdivision_of_initial_piece():
    P = initial_plumbing(F(1, 4))
    p = derive_from_dims(P.width, P.min_length, F(1, 128), 9, QUARTER)
    rects = subdivide(P, p)
    on_first = [r for r in rects if r.piece == 0]
    # 3/2 cut into cells of 1/256; U junction wants an even count, which 384 already is
    assert len(on_first) == 384
    assert {r.base for r in rects} == {F(1, 256)}


def test_z_junction_merges_last_pair():
    Z = thicken_core(L_CORE)
    p = derive_level(Z, F(1, 8), 9, QUARTER)
    rects = subdivide(Z, p)
    for i in Z.straight_indices():
        mine = [r for r in rects if r.piece == i]
        shape = classify_junction(Z, i).shape
        assert (len(mine) % 2 == 0) == (shape == "U")
        assert sum(r.base for r in mine) == Z.pieces[i].length * Z.unit
        for r in mine:
            assert p.rect_length / 2 <= r.base <= 2 * p.rect_length
    z_piece = next(i for i in Z.straight_indices() if classify_junction(Z, i).shape == "Z")
    bases = [r.base for r in rects if r.piece == z_piece]
    # length 2 in cells of 1/4 gives 8; the last two merge into one of 1/2
    assert bases == [F(1, 4)] * 6 + [F(1, 2)]


@pytest.mark.parametrize("length,spacing,parity", [(F(3, 2), F(1, 16), 0), (F(3, 2), F(1, 16), 1),
                                                   (F(1), F(3, 10), 0), (F(1), F(3, 10), 1)])
def test_split_length_parity_and_sum(length, spacing, parity):
    cells = split_length(length, spacing, parity)
    assert len(cells) % 2 == parity and sum(cells) == length
    assert all(spacing / 2 <= c <= 2 * spacing for c in cells)


def test_labels_alternate_and_start_after_left_turn():
    P = initial_plumbing(F(1, 4))
    p = derive_level(P, F(1, 8), 9, QUARTER)
    rects = subdivide(P, p)
    for i in P.straight_indices():
        labels = [r.label for r in rects if r.piece == i]
        assert first_label(P, i) == TOP == labels[0]
        assert all(a != b for a, b in zip(labels, labels[1:]))


def test_slabs_for_quarter_schedule():
    P = initial_plumbing(F(1, 4))
    p = derive_level(P, F(1, 8), 9, QUARTER)
    placement = generate_good_placement(9, 0)
    rects = subdivide(P, p)
    h = p.w / p.t
    for r in rects[:2]:
        slabs = build_slabs(r, p, placement)
        assert len(slabs) == 128
        for slab in slabs:
            assert slab.cell == (r.base / 9, 2 * h)
            for rook in slab.rooks:
                mid = (rook.s_lo + rook.s_hi) / 2
                assert mid == rook.skipped * h and rook.skipped % 2 == (0 if r.label == TOP else 1)
                assert rook.u == r.start + (rook.column + F(1, 2)) * r.base / 9
    top = build_slabs(rects[0], p, placement)
    assert top[0].s_hi == p.w and top[-1].s_lo == h
    bottom = build_slabs(rects[1], p, placement)
    assert rects[1].label == BOTTOM and bottom[0].s_lo == 0


def test_refined_fixture(small):
    P, Q, params, rep = small["P"], small["Q"], small["params"], small["report"]
    assert validate_plumbing(Q).ok
    assert Q.width <= params.w / params.t
    assert Q.width == params.w / params.t - params.eta
    assert Q.min_length == params.eta
    assert all(v["bad"] == 0 for v in rep.parity.values())
    assert complement_clearance(P, Q) == params.eta / 2 > 0


def test_refined_area_is_coarse_minus_walls(small):
    P, Q, L = small["P"], small["Q"], small["L"]
    plan = assemble_plan(L)
    k = L.scale
    coarse = [tuple(c * k for c in p.rect) for p in P.pieces]
    left = difference(coarse, plan.walls())
    assert union_area(left) == sum((p.x1 - p.x0) * (p.y1 - p.y0) for p in Q.pieces)


def test_plan_counts(small):
    L, params = small["L"], small["params"]
    plan = assemble_plan(L)
    rows = (params.t - 1) // 2
    assert len(plan.rook_segments) == L.R * rows
    # every leaf but the innermost turns each corner with two nonempty legs
    assert len(plan.corner_segments) == 4 * 2 * params.t


def test_skipped_elements_have_one_gap_per_rook(small):
    L, params = small["L"], small["params"]
    plan = assemble_plan(L)
    i = L.straights[0]
    assert L.P.pieces[i].din == 0  # bottom side, travelling east: s grows with y
    ox, oy = L.frames[i][:2]
    x_lo, x_hi = ox, ox + L.P.pieces[i].length * L.scale
    mine = [g for g in range(L.R) if L.piece_of(g) == i]
    t = params.t
    for e in (1, 2, t // 2, t - 2, t - 1):
        y = oy + e * L.H
        segs = [q for q in plan.foliation_segments if q[1] == q[3] == y and x_lo <= q[0] and q[2] <= x_hi]
        # T rectangles skip even elements 2..t-1, B rectangles odd elements 1..t-2
        skipping = sum(1 for g in mine if (L.r_label[g] == TOP) == (e % 2 == 0))
        assert len(segs) == 1 + skipping
    y = oy + t * L.H
    assert sum(1 for q in plan.foliation_segments if q[1] == q[3] == y and x_lo <= q[0] and q[2] <= x_hi) == 1


def test_smaller_walls_hug_the_boundary_closer():
    base = small_level(eta_div=100)
    thin = small_level(eta_div=200)
    gaps = []
    for P, params, placement in (base, thin):
        Q, _ = refine(P, params, placement, topology=False)
        gaps.append(complement_clearance(P, Q))
    assert gaps[1] < gaps[0]
    assert gaps == [base[1].eta / 2, thin[1].eta / 2]


def test_refine_deterministic(small):
    Q2, _ = refine(small["P"], small["params"], small["placement"], validate=False)
    assert Q2.pieces == small["Q"].pieces


def test_refine_l_shape():
    Z = thicken_core(L_CORE)
    p = derive_level(Z, F(1, 5), 9, QUARTER)
    Q, rep = refine(Z, p, generate_good_placement(9, 0))
    assert rep.parity["Z"] == {"ok": 2, "bad": 0}
    assert Q.width <= p.w / p.t


def test_invalid_placement_rejected(small):
    with pytest.raises(RefinementError):
        Layout(small["P"], small["params"], RookPlacement(9, tuple(range(9))))


def test_mismatched_width_rejected(small):
    params = dataclasses.replace(small["params"], w=small["params"].w / 2)
    with pytest.raises(RefinementError):
        Layout(small["P"], params, small["placement"])
