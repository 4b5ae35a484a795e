"""Axis-aligned 3D box geometry underlying airspace regions.

A region is a finite union of boxes (a :class:`BoxSet`).  Boxes are closed
by default, so boxes sharing a face intersect.  Set difference of closed
boxes is not closed, so carved fragments mark the faces they lost as open;
point membership therefore stays exact even on shared boundaries.  All
coordinate comparisons are exact on the stored floats.
"""

from __future__ import annotations

from dataclasses import dataclass

Vec3 = tuple[float, float, float]

_AXES = (0, 1, 2)
_ALL_CLOSED = (False, False, False)


class GeometryError(ValueError):
    """Raised for malformed boxes or box sets."""


@dataclass(frozen=True)
class Box:
    """Product of three closed-by-default intervals, possibly degenerate.

    ``lo_open``/``hi_open`` flag faces excluded from the box.  User-built
    boxes are fully closed; open faces appear only in difference results.
    """

    lo: Vec3
    hi: Vec3
    lo_open: tuple[bool, bool, bool] = _ALL_CLOSED
    hi_open: tuple[bool, bool, bool] = _ALL_CLOSED

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise GeometryError("boxes are 3-dimensional")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        for a in _AXES:
            if not lo[a] <= hi[a]:
                raise GeometryError(
                    f"lo exceeds hi on axis {a}: {lo[a]} > {hi[a]}"
                )

    def is_empty(self) -> bool:
        """True when a degenerate axis has an open endpoint."""
        for a in _AXES:
            if self.lo[a] == self.hi[a] and (self.lo_open[a] or self.hi_open[a]):
                return True
        return False

    def contains(self, p: Vec3) -> bool:
        for a in _AXES:
            v = p[a]
            lo = self.lo[a]
            if v < lo or (v == lo and self.lo_open[a]):
                return False
            hi = self.hi[a]
            if v > hi or (v == hi and self.hi_open[a]):
                return False
        return True

    def volume(self) -> float:
        if self.is_empty():
            return 0.0
        v = 1.0
        for a in _AXES:
            v *= self.hi[a] - self.lo[a]
        return v

    def center(self) -> Vec3:
        return tuple((self.lo[a] + self.hi[a]) / 2.0 for a in _AXES)

    def bloated(self, margin: float) -> "Box":
        """Closed box expanded by ``margin`` on every face."""
        if margin < 0:
            raise GeometryError("margin must be nonnegative")
        return Box(
            tuple(v - margin for v in self.lo),
            tuple(v + margin for v in self.hi),
        )


def box_from_center(center: Vec3, half_side: float) -> Box:
    """Closed cube of side ``2 * half_side`` around ``center``."""
    return Box(
        tuple(c - half_side for c in center),
        tuple(c + half_side for c in center),
    )


def hull_of_points(points) -> Box:
    """Smallest closed box containing every point."""
    pts = list(points)
    if not pts:
        raise GeometryError("hull of no points")
    lo = tuple(min(p[a] for p in pts) for a in _AXES)
    hi = tuple(max(p[a] for p in pts) for a in _AXES)
    return Box(lo, hi)


def hull_of_boxes(boxes) -> Box:
    """Smallest closed box containing every (nonempty) box."""
    bxs = [b for b in boxes if not b.is_empty()]
    if not bxs:
        raise GeometryError("hull of no boxes")
    lo = tuple(min(b.lo[a] for b in bxs) for a in _AXES)
    hi = tuple(max(b.hi[a] for b in bxs) for a in _AXES)
    return Box(lo, hi)


def box_intersection(a: Box, b: Box) -> Box | None:
    """Intersection box, or None when empty."""
    lo = [0.0, 0.0, 0.0]
    hi = [0.0, 0.0, 0.0]
    lo_open = [False, False, False]
    hi_open = [False, False, False]
    for ax in _AXES:
        if a.lo[ax] > b.lo[ax]:
            lo[ax], lo_open[ax] = a.lo[ax], a.lo_open[ax]
        elif a.lo[ax] < b.lo[ax]:
            lo[ax], lo_open[ax] = b.lo[ax], b.lo_open[ax]
        else:
            lo[ax], lo_open[ax] = a.lo[ax], a.lo_open[ax] or b.lo_open[ax]
        if a.hi[ax] < b.hi[ax]:
            hi[ax], hi_open[ax] = a.hi[ax], a.hi_open[ax]
        elif a.hi[ax] > b.hi[ax]:
            hi[ax], hi_open[ax] = b.hi[ax], b.hi_open[ax]
        else:
            hi[ax], hi_open[ax] = a.hi[ax], a.hi_open[ax] or b.hi_open[ax]
        if lo[ax] > hi[ax]:
            return None
        if lo[ax] == hi[ax] and (lo_open[ax] or hi_open[ax]):
            return None
    return Box(tuple(lo), tuple(hi), tuple(lo_open), tuple(hi_open))


def box_difference(a: Box, b: Box) -> list[Box]:
    """``a`` minus ``b`` as at most six disjoint fragments.

    Fragments abutting ``b`` get an open face exactly where ``b`` is
    closed, so the union of fragments has the set-theoretic membership.
    """
    if a.is_empty():
        return []
    cut = box_intersection(a, b)
    if cut is None or cut.is_empty():
        return [a]
    frags: list[Box] = []
    # Remaining core of `a` still to carve; starts as `a`, narrows per axis.
    lo = list(a.lo)
    hi = list(a.hi)
    lo_open = list(a.lo_open)
    hi_open = list(a.hi_open)
    for ax in _AXES:
        # Slab of core points lying below b's lower face on this axis.
        # The slab keeps the face exactly when b excludes it (open lo).
        below_hi, below_open = b.lo[ax], not b.lo_open[ax]
        if below_hi == hi[ax]:
            below_open = below_open or hi_open[ax]
        if lo[ax] < below_hi or (lo[ax] == below_hi and not lo_open[ax] and not below_open):
            f_hi = list(hi)
            f_hi_open = list(hi_open)
            f_hi[ax], f_hi_open[ax] = below_hi, below_open
            frags.append(Box(tuple(lo), tuple(f_hi), tuple(lo_open), tuple(f_hi_open)))
        # Slab of core points lying above b's upper face.
        above_lo, above_open = b.hi[ax], not b.hi_open[ax]
        if above_lo == lo[ax]:
            above_open = above_open or lo_open[ax]
        if above_lo < hi[ax] or (above_lo == hi[ax] and not above_open and not hi_open[ax]):
            f_lo = list(lo)
            f_lo_open = list(lo_open)
            f_lo[ax], f_lo_open[ax] = above_lo, above_open
            frags.append(Box(tuple(f_lo), tuple(hi), tuple(f_lo_open), tuple(hi_open)))
        # Narrow the core to b's extent on this axis before the next cut.
        lo[ax], lo_open[ax] = cut.lo[ax], cut.lo_open[ax]
        hi[ax], hi_open[ax] = cut.hi[ax], cut.hi_open[ax]
    return [f for f in frags if not f.is_empty()]


@dataclass(frozen=True)
class BoxSet:
    """Finite union of boxes; membership is inside-any-member.

    No canonical form: overlapping members are permitted and equality of
    regions is decided semantically by the volume algebra, never by
    comparing the member lists.
    """

    boxes: tuple[Box, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @classmethod
    def of(cls, *boxes: Box) -> "BoxSet":
        return cls(tuple(boxes))

    @classmethod
    def empty(cls) -> "BoxSet":
        return cls(())

    def contains(self, p: Vec3) -> bool:
        return any(b.contains(p) for b in self.boxes)

    def is_empty(self) -> bool:
        return all(b.is_empty() for b in self.boxes)

    @property
    def rect_count(self) -> int:
        return len(self.boxes)


def boxset_union(a: BoxSet, b: BoxSet) -> BoxSet:
    return BoxSet(a.boxes + b.boxes)


def boxset_intersection(a: BoxSet, b: BoxSet) -> BoxSet:
    out = []
    for x in a.boxes:
        for y in b.boxes:
            cut = box_intersection(x, y)
            if cut is not None:
                out.append(cut)
    return BoxSet(tuple(out))


def boxset_difference(a: BoxSet, b: BoxSet) -> BoxSet:
    out = []
    for x in a.boxes:
        pieces = [x] if not x.is_empty() else []
        for y in b.boxes:
            pieces = [f for p in pieces for f in box_difference(p, y)]
        out.extend(pieces)
    return BoxSet(tuple(out))


_BOXSET_OPS = {
    "union": boxset_union,
    "intersect": boxset_intersection,
    "difference": boxset_difference,
}


def boxset_op(a: BoxSet, b: BoxSet, op: str) -> BoxSet:
    """Apply ``op`` in {union, intersect, difference} to two regions."""
    try:
        fn = _BOXSET_OPS[op]
    except KeyError:
        raise GeometryError(f"unknown box set operation {op!r}") from None
    return fn(a, b)
