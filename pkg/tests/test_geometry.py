import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxlab.errors import DegenerateBox, NonFinite
from boxlab.geometry import Box, box_from_corners, iou, pair_geometry
from conftest import quarter_box
from oracles import exact_iou, pixel_grid_areas, pixel_grid_iou

coord = st.floats(min_value=-100, max_value=100, allow_nan=False)
extent = st.floats(min_value=1e-2, max_value=50, allow_nan=False)
boxes = st.builds(Box, coord, coord, extent, extent)


def test_box_from_corners():
    assert box_from_corners(0, 0, 2, 2) == Box(1, 1, 2, 2)
    assert box_from_corners(-1, -1, 1, 1) == Box(0, 0, 2, 2)


@pytest.mark.parametrize("corners", [(1, 1, 1, 3), (0, 2, 1, 2), (3, 0, 1, 1)])
def test_box_from_corners_degenerate(corners):
    with pytest.raises(DegenerateBox):
        box_from_corners(*corners)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(NonFinite):
        box_from_corners(bad, 0, 1, 1)
    with pytest.raises(NonFinite):
        Box(0, 0, bad, 1)


def test_box_rejects_nonpositive_extent():
    with pytest.raises(DegenerateBox):
        Box(0, 0, 0, 1)
    with pytest.raises(DegenerateBox):
        Box(0, 0, 1, -2)


def test_pair_geometry_overlap():
    a, b = (0, 0, 2, 2), (1, 1, 3, 3)
    g = pair_geometry(box_from_corners(*a), box_from_corners(*b))
    inter, union, enclosing = pixel_grid_areas(a, b)
    assert g.intersection_area == 1 == pytest.approx(inter, abs=1e-9)
    assert g.union_area == 7 == pytest.approx(union, abs=1e-9)
    assert g.enclosing_area == 9 == pytest.approx(enclosing, abs=1e-9)
    assert g.center_dist_sq == 2
    assert g.enclosing_diag_sq == 18


def test_pair_geometry_disjoint():
    a, b = (0, 0, 1, 1), (2, 0, 3, 1)
    g = pair_geometry(box_from_corners(*a), box_from_corners(*b))
    _, _, enclosing = pixel_grid_areas(a, b)
    assert g.intersection_area == 0
    assert (g.enclosing_w, g.enclosing_h) == (3, 1)
    assert g.enclosing_area == 3 == pytest.approx(enclosing, abs=1e-9)


def test_pair_geometry_identity():
    a = Box(0.3, -1.2, 2.5, 0.75)
    g = pair_geometry(a, a)
    assert g.intersection_area == g.union_area == a.area


def test_iou_examples():
    a = box_from_corners(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(box_from_corners(0, 0, 1, 1), box_from_corners(3, 0, 4, 1)) == 0.0
    expected = pixel_grid_iou((0, 0, 2, 2), (1, 1, 3, 3))
    assert iou(a, box_from_corners(1, 1, 3, 3)) == pytest.approx(1 / 7, abs=1e-15)
    assert expected == pytest.approx(1 / 7, abs=1e-9)


def test_iou_matches_oracles_on_quarter_lattice():
    rng = random.Random(7)
    for _ in range(200):
        a, b = quarter_box(rng), quarter_box(rng)
        got = iou(box_from_corners(*a), box_from_corners(*b))
        assert abs(got - float(exact_iou(a, b))) < 1e-12
        assert abs(got - pixel_grid_iou(a, b)) < 2e-2


@given(boxes, boxes)
def test_geometry_invariants(a, b):
    g = pair_geometry(a, b)
    assert g.intersection_area <= min(a.area, b.area) * (1 + 1e-12)
    assert g.union_area == pytest.approx(a.area + b.area - g.intersection_area)
    assert g.enclosing_area >= g.union_area * (1 - 1e-12)
    assert g.center_dist_sq <= g.enclosing_diag_sq
    assert 0.0 <= iou(a, b) <= 1.0


@given(boxes, boxes)
def test_iou_symmetric(a, b):
    assert iou(a, b) == iou(b, a)


@given(boxes, boxes, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_iou_translation_invariant(a, b, dx, dy):
    assert iou(a.translate(dx, dy), b.translate(dx, dy)) == pytest.approx(iou(a, b), abs=1e-9)


def test_iou_translation_invariant_tight():
    rng = random.Random(3)
    for _ in range(500):
        a, b = quarter_box(rng), quarter_box(rng)
        t = rng.randint(-400, 400) / 4
        base = iou(box_from_corners(*a), box_from_corners(*b))
        moved = iou(box_from_corners(a[0] + t, a[1] - t, a[2] + t, a[3] - t),
                    box_from_corners(b[0] + t, b[1] - t, b[2] + t, b[3] - t))
        assert abs(moved - base) < 1e-12


@given(boxes, boxes, st.floats(1e-3, 1e3))
def test_iou_scale_invariant(a, b, s):
    assert iou(a.scale(s), b.scale(s)) == pytest.approx(iou(a, b), abs=1e-9)


@given(boxes, st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_iou_containment(outer, fw, fh, px, py):
    w, h = outer.w * fw, outer.h * fh
    cx = outer.x1 + w / 2 + px * (outer.w - w)
    cy = outer.y1 + h / 2 + py * (outer.h - h)
    inner = Box(cx, cy, w, h)
    assert iou(inner, outer) == pytest.approx(inner.area / outer.area, rel=1e-9)
