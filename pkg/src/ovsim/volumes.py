"""Operation volumes: timed schedules of airspace regions and their algebra.

An operation volume is a nonempty sequence of (region, time) pairs with
strictly increasing times.  It denotes the space-time set occupied by an
aircraft: region ``i`` over ``[T_i, T_{i+1})`` and the final region forever
from ``T_k`` on.  Only the first time point may be ``-inf``, which reserves
the first region for all time before ``T_2``.

Set operations align two volumes on the union of their time points (which
preserves the denoted sets) and then combine regions pairwise, so the
result denotes exactly the set-theoretic combination, final tails included.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .boxes import Box, BoxSet, boxset_op, boxset_intersection, box_intersection, Vec3

NEG_INF = float("-inf")

OV_OPS = ("intersect", "union", "difference")


class VolumeError(ValueError):
    """Raised for malformed operation volumes or invalid operations."""


@dataclass(frozen=True)
class SpaceTimePoint:
    position: Vec3
    time: float

    def __post_init__(self):
        if not math.isfinite(self.time):
            raise VolumeError("space-time points have finite time")
        if not all(math.isfinite(v) for v in self.position):
            raise VolumeError("space-time points have finite position")


@dataclass(frozen=True)
class OperationVolume:
    """Sequence of (region, time) pairs; see module docstring for semantics."""

    regions: tuple[BoxSet, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "times", times)
        if not regions or len(regions) != len(times):
            raise VolumeError("need one region per time point, at least one pair")
        for i, t in enumerate(times):
            if math.isnan(t) or t == math.inf:
                raise VolumeError("time points must be finite or -inf")
            if t == NEG_INF and i > 0:
                raise VolumeError("-inf is only allowed as the first time point")
            if i > 0 and not times[i - 1] < t:
                raise VolumeError("time points must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs) -> "OperationVolume":
        pairs = list(pairs)
        return cls(
            tuple(region for region, _ in pairs),
            tuple(time for _, time in pairs),
        )

    @property
    def pairs(self) -> tuple[tuple[BoxSet, float], ...]:
        return tuple(zip(self.regions, self.times))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dur(self) -> float:
        if self.times[0] == NEG_INF:
            raise VolumeError("duration undefined for a volume starting at -inf")
        return self.times[-1] - self.times[0]

    @property
    def t_last(self) -> float:
        return self.times[-1]

    @property
    def r_last(self) -> BoxSet:
        return self.regions[-1]

    @property
    def r_all(self) -> BoxSet:
        boxes: tuple[Box, ...] = ()
        for region in self.regions:
            boxes += region.boxes
        return BoxSet(boxes)

    @property
    def rect_count(self) -> int:
        return sum(r.rect_count for r in self.regions)


def single_pair(region_box: Box, time: float) -> OperationVolume:
    return OperationVolume((BoxSet.of(region_box),), (time,))


def contains(ov: OperationVolume, p: SpaceTimePoint) -> bool:
    """Whether the space-time point lies in the denoted set."""
    i = bisect_right(ov.times, p.time) - 1
    if i < 0:
        return False
    return ov.regions[i].contains(p.position)


def contains_batch(ov: OperationVolume, positions, times) -> np.ndarray:
    """Vectorized :func:`contains` over arrays of positions and times."""
    positions = np.asarray(positions, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.shape, dtype=bool)
    k = len(ov)
    for i in range(k):
        t_mask = times >= ov.times[i]
        if i + 1 < k:
            t_mask &= times < ov.times[i + 1]
        if not t_mask.any():
            continue
        s_mask = np.zeros(times.shape, dtype=bool)
        for b in ov.regions[i].boxes:
            m = np.ones(times.shape, dtype=bool)
            for ax in range(3):
                v = positions[:, ax]
                if b.lo_open[ax]:
                    m &= v > b.lo[ax]
                else:
                    m &= v >= b.lo[ax]
                if b.hi_open[ax]:
                    m &= v < b.hi[ax]
                else:
                    m &= v <= b.hi[ax]
            s_mask |= m
        out |= t_mask & s_mask
    return out


def _region_at(ov: OperationVolume, t: float) -> BoxSet:
    """Region occupied at time ``t``; empty before the first time point."""
    i = bisect_right(ov.times, t) - 1
    if i < 0:
        return BoxSet.empty()
    return ov.regions[i]


def insert(ov: OperationVolume, t: float) -> OperationVolume:
    """Add ``t`` as a time point without changing the denoted set.

    Before the first time point an empty region is prepended; between two
    points the earlier region is duplicated; past the end the final region
    is duplicated; a time point already present leaves the volume unchanged.
    """
    if math.isnan(t) or t == math.inf:
        raise VolumeError("inserted time point must be finite or -inf")
    if t in ov.times:
        return ov
    if t < ov.times[0]:
        return OperationVolume((BoxSet.empty(),) + ov.regions, (t,) + ov.times)
    i = bisect_right(ov.times, t) - 1
    return OperationVolume(
        ov.regions[: i + 1] + (ov.regions[i],) + ov.regions[i + 1 :],
        ov.times[: i + 1] + (t,) + ov.times[i + 1 :],
    )


def align(
    a: OperationVolume, b: OperationVolume
) -> tuple[OperationVolume, OperationVolume]:
    """Rewrite both volumes over the union of their time points."""
    times = tuple(sorted(set(a.times) | set(b.times)))
    return _on_times(a, times), _on_times(b, times)


def _on_times(ov: OperationVolume, times: tuple[float, ...]) -> OperationVolume:
    return OperationVolume(tuple(_region_at(ov, t) for t in times), times)


def combine(a: OperationVolume, b: OperationVolume, op: str) -> OperationVolume:
    """Set-combine two volumes; ``op`` is intersect, union or difference."""
    if op not in OV_OPS:
        raise VolumeError(f"unknown operation {op!r}")
    times = tuple(sorted(set(a.times) | set(b.times)))
    regions = tuple(
        boxset_op(_region_at(a, t), _region_at(b, t), op) for t in times
    )
    return OperationVolume(regions, times)


def is_empty(ov: OperationVolume) -> bool:
    return all(region.is_empty() for region in ov.regions)


def disjoint(a: OperationVolume, b: OperationVolume) -> bool:
    return is_empty(combine(a, b, "intersect"))


def disjoint_with_stats(a: OperationVolume, b: OperationVolume) -> tuple[bool, int]:
    """Disjointness plus the number of box pairs the check compared."""
    times = tuple(sorted(set(a.times) | set(b.times)))
    empty = True
    pairs = 0
    for t in times:
        ra = _region_at(a, t)
        rb = _region_at(b, t)
        pairs += len(ra.boxes) * len(rb.boxes)
        if empty and not boxset_intersection(ra, rb).is_empty():
            empty = False
    return empty, pairs


def refines(a: OperationVolume, b: OperationVolume) -> bool:
    """Whether ``a`` occupies no space-time outside ``b``."""
    return is_empty(combine(a, b, "difference"))


def reschedule(ov: OperationVolume, delta: float) -> OperationVolume:
    """Shift every time point by ``delta`` (regions unchanged)."""
    if ov.times[0] == NEG_INF:
        raise VolumeError("cannot reschedule a volume starting at -inf; trim it first")
    if delta < 0:
        raise VolumeError("reschedule delta must be nonnegative")
    return OperationVolume(ov.regions, tuple(t + delta for t in ov.times))


def trim_unbounded_start(ov: OperationVolume) -> OperationVolume:
    """Drop a leading ``-inf`` pair, leaving the finite-time schedule."""
    if ov.times[0] != NEG_INF:
        return ov
    if len(ov) == 1:
        raise VolumeError("volume has no finite time points")
    return OperationVolume(ov.regions[1:], ov.times[1:])


def ov_overlap_box_pairs(a: OperationVolume, b: OperationVolume) -> int:
    """Box pairs a full disjointness check of the two volumes compares."""
    times = tuple(sorted(set(a.times) | set(b.times)))
    return sum(
        len(_region_at(a, t).boxes) * len(_region_at(b, t).boxes) for t in times
    )


# --- structured-text serialization ---------------------------------------


def _box_to_jsonable(b: Box) -> dict:
    out = {"lo": list(b.lo), "hi": list(b.hi)}
    if any(b.lo_open):
        out["lo_open"] = list(b.lo_open)
    if any(b.hi_open):
        out["hi_open"] = list(b.hi_open)
    return out


def _box_from_jsonable(d: dict) -> Box:
    return Box(
        tuple(d["lo"]),
        tuple(d["hi"]),
        tuple(d.get("lo_open", (False, False, False))),
        tuple(d.get("hi_open", (False, False, False))),
    )


def ov_to_jsonable(ov: OperationVolume) -> list[dict]:
    """Ordered list of {time, boxes}; ``-inf`` encoded as the string "-inf"."""
    return [
        {
            "time": "-inf" if t == NEG_INF else t,
            "boxes": [_box_to_jsonable(b) for b in region.boxes],
        }
        for region, t in ov.pairs
    ]


def ov_from_jsonable(data) -> OperationVolume:
    regions = []
    times = []
    for entry in data:
        t = entry["time"]
        times.append(NEG_INF if t == "-inf" else float(t))
        regions.append(BoxSet(tuple(_box_from_jsonable(b) for b in entry["boxes"])))
    return OperationVolume(tuple(regions), tuple(times))
