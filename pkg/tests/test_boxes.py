import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovsim.boxes import (
    Box,
    BoxSet,
    GeometryError,
    box_difference,
    box_from_center,
    box_intersection,
    boxset_difference,
    boxset_intersection,
    boxset_op,
    boxset_union,
    hull_of_boxes,
    hull_of_points,
)

UNIT = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
BIG = Box((0.0, 0.0, 0.0), (2.0, 2.0, 2.0))


def grid_coords(step=0.5, lo=-0.5, hi=2.5):
    return np.arange(lo, hi + step / 2, step)


def grid_points(step=0.5, lo=-0.5, hi=2.5):
    cs = grid_coords(step, lo, hi)
    return [(x, y, z) for x in cs for y in cs for z in cs]


boxes3 = st.builds(
    lambda los, widths: Box(
        tuple(los), tuple(lo + w for lo, w in zip(los, widths))
    ),
    st.tuples(*([st.integers(0, 20).map(lambda v: v / 2.0)] * 3)),
    st.tuples(*([st.integers(0, 8).map(lambda v: v / 2.0)] * 3)),
)


def test_invalid_box_rejected():
    with pytest.raises(GeometryError):
        Box((0.0, 0.0, 0.0), (-1.0, 0.0, 0.0))


def test_degenerate_box_contains_its_face():
    plane = Box((0.0, 0.0, 0.0), (0.0, 1.0, 1.0))
    assert plane.contains((0.0, 0.5, 0.5))
    assert not plane.contains((0.1, 0.5, 0.5))
    assert plane.volume() == 0.0
    assert not plane.is_empty()


def test_face_sharing_boxes_intersect():
    left = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    right = Box((1.0, 0.0, 0.0), (2.0, 1.0, 1.0))
    cut = box_intersection(left, right)
    assert cut is not None
    assert cut.lo[0] == cut.hi[0] == 1.0


def test_open_face_blocks_intersection():
    open_right = Box((1.0, 0.0, 0.0), (2.0, 1.0, 1.0), lo_open=(True, False, False))
    assert box_intersection(UNIT, open_right) is None


def test_difference_unit_from_big_has_volume_seven():
    frags = box_difference(BIG, UNIT)
    assert len(frags) <= 6
    assert sum(f.volume() for f in frags) == pytest.approx(7.0)
    # fragments are exact: grid membership matches "in BIG and not in UNIT"
    for p in grid_points():
        expected = BIG.contains(p) and not UNIT.contains(p)
        assert any(f.contains(p) for f in frags) == expected, p


def test_difference_monte_carlo_volume():
    rng = np.random.default_rng(7)
    diff = boxset_difference(BoxSet.of(BIG), BoxSet.of(UNIT))
    pts = rng.uniform(0.0, 2.0, size=(100_000, 3))
    hits = sum(diff.contains(tuple(p)) for p in pts)
    assert 8.0 * hits / len(pts) == pytest.approx(7.0, abs=0.05)


def test_self_difference_empty():
    assert boxset_difference(BoxSet.of(UNIT), BoxSet.of(UNIT)).is_empty()


def test_intersection_of_disjoint_empty():
    far = Box((5.0, 5.0, 5.0), (6.0, 6.0, 6.0))
    assert boxset_intersection(BoxSet.of(UNIT), BoxSet.of(far)).is_empty()


def test_union_is_concatenation():
    u = boxset_union(BoxSet.of(UNIT), BoxSet.of(BIG))
    assert u.rect_count == 2


def test_boxset_op_dispatch():
    assert boxset_op(BoxSet.of(UNIT), BoxSet.of(UNIT), "difference").is_empty()
    with pytest.raises(GeometryError):
        boxset_op(BoxSet.of(UNIT), BoxSet.of(UNIT), "xor")


def test_hulls():
    h = hull_of_points([(0.0, 1.0, 2.0), (3.0, -1.0, 0.0)])
    assert h.lo == (0.0, -1.0, 0.0)
    assert h.hi == (3.0, 1.0, 2.0)
    hb = hull_of_boxes([UNIT, Box((2.0, 2.0, 2.0), (3.0, 3.0, 3.0))])
    assert hb.lo == (0.0, 0.0, 0.0) and hb.hi == (3.0, 3.0, 3.0)
    assert box_from_center((1.0, 1.0, 1.0), 1.0).lo == (0.0, 0.0, 0.0)


def test_bloat():
    assert UNIT.bloated(1.0).lo == (-1.0, -1.0, -1.0)
    with pytest.raises(GeometryError):
        UNIT.bloated(-0.5)


@settings(max_examples=150, deadline=None)
@given(boxes3, boxes3)
def test_pairwise_difference_membership_and_fragment_bound(a, b):
    frags = box_difference(a, b)
    assert len(frags) <= 6
    for p in grid_points(step=1.0, lo=0.0, hi=14.0):
        expected = a.contains(p) and not b.contains(p)
        assert any(f.contains(p) for f in frags) == expected


@settings(max_examples=100, deadline=None)
@given(
    st.lists(boxes3, min_size=1, max_size=2),
    st.lists(boxes3, min_size=1, max_size=2),
    st.sampled_from(["union", "intersect", "difference"]),
)
def test_boxset_ops_match_point_semantics(abox, bbox, op):
    A = BoxSet(tuple(abox))
    B = BoxSet(tuple(bbox))
    result = boxset_op(A, B, op)
    for p in grid_points(step=1.5, lo=0.0, hi=15.0):
        in_a, in_b = A.contains(p), B.contains(p)
        expected = {
            "union": in_a or in_b,
            "intersect": in_a and in_b,
            "difference": in_a and not in_b,
        }[op]
        assert result.contains(p) == expected


@settings(max_examples=60, deadline=None)
@given(st.lists(boxes3, min_size=1, max_size=3))
def test_difference_by_single_box_fragment_bound(abox):
    # subtracting one box can split each member into at most six pieces
    A = BoxSet(tuple(abox))
    B = BoxSet.of(Box((2.0, 2.0, 2.0), (9.0, 9.0, 9.0)))
    out = boxset_difference(A, B)
    assert out.rect_count <= 6 * A.rect_count * B.rect_count


def test_difference_fragments_are_disjoint():
    rng = np.random.default_rng(3)
    for _ in range(50):
        lo = rng.integers(0, 8, size=3) / 2.0
        a = Box(tuple(lo), tuple(lo + rng.integers(1, 8, size=3) / 2.0))
        lo2 = rng.integers(0, 8, size=3) / 2.0
        b = Box(tuple(lo2), tuple(lo2 + rng.integers(1, 8, size=3) / 2.0))
        frags = box_difference(a, b)
        for i, f in enumerate(frags):
            for g in frags[i + 1 :]:
                cut = box_intersection(f, g)
                assert cut is None or cut.is_empty()
