"""Kinematic vehicles, sampled reachtubes and volume-generation strategies.

Vehicles are constant-speed point masses steered straight at the next
waypoint with truncated Gaussian actuation noise.  Reachtubes are estimated
by simulating seeded traces and taking per-time-bin bounding boxes, bloated
on every face; they certify volumes that noisy vehicles are unlikely to
violate.

Two deterministic strategies turn a waypoint route into a volume:

* conservative: one bloated box around the whole route, held for the whole
  (slack-scaled) flight, then a parked box around the landing spot;
* aggressive: one bloated box per route segment with per-segment windows,
  then the parked box.  More, smaller reservations let other traffic in
  sooner at the price of more rectangles for the manager to check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .boxes import Box, BoxSet, Vec3, hull_of_boxes, hull_of_points
from .volumes import NEG_INF, OperationVolume, VolumeError


class Strategy(enum.Enum):
    CONSERVATIVE = "conservative"
    AGGRESSIVE = "aggressive"


@dataclass(frozen=True)
class VehicleParams:
    speed: float = 2.0  # m/s
    waypoint_tol: float = 0.3  # m
    noise_sigma: float = 0.02  # m per tick, per axis, truncated at 3 sigma
    seed: int = 0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        if self.waypoint_tol <= 0:
            raise ValueError("waypoint tolerance must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be nonnegative")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng((self.seed, stream))


def step_vehicle(
    pos: Vec3,
    params: VehicleParams,
    target_wp: Vec3,
    dt: float,
    rng: np.random.Generator | None = None,
) -> Vec3:
    """One control tick: advance min(speed*dt, distance) toward the waypoint."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return pos
    dx = tuple(t - p for t, p in zip(target_wp, pos))
    dist = math.sqrt(sum(d * d for d in dx))
    step = min(params.speed * dt, dist)
    if dist > 0.0:
        pos = tuple(p + d / dist * step for p, d in zip(pos, dx))
    if params.noise_sigma > 0.0 and rng is not None:
        bound = 3.0 * params.noise_sigma
        noise = np.clip(
            rng.normal(0.0, params.noise_sigma, size=3), -bound, bound
        )
        pos = tuple(p + float(n) for p, n in zip(pos, noise))
    return pos


def at_waypoint(pos: Vec3, wp: Vec3, tol: float) -> bool:
    return math.dist(pos, wp) <= tol


@dataclass(frozen=True)
class Reachtube:
    """Contiguous time bins, each bounding every sampled state in it."""

    bins: tuple[tuple[float, float, Box], ...]

    def __post_init__(self):
        if not self.bins:
            raise VolumeError("reachtube needs at least one bin")
        prev_end = None
        for t_a, t_b, _ in self.bins:
            if not t_a < t_b:
                raise VolumeError("bin intervals must be increasing")
            if prev_end is not None and t_a != prev_end:
                raise VolumeError("bin intervals must be contiguous")
            prev_end = t_b

    @property
    def t_start(self) -> float:
        return self.bins[0][0]

    @property
    def t_end(self) -> float:
        return self.bins[-1][1]

    def contains(self, pos: Vec3, t: float) -> bool:
        for t_a, t_b, box in self.bins:
            if t_a <= t < t_b:
                return box.contains(pos)
        return False

    def to_records(self) -> list[dict]:
        """Plot-friendly dump: one {t_a, t_b, lo, hi} record per bin."""
        return [
            {"t_a": t_a, "t_b": t_b, "lo": list(box.lo), "hi": list(box.hi)}
            for t_a, t_b, box in self.bins
        ]


def simulate_trace(
    start: Vec3,
    waypoints,
    params: VehicleParams,
    dt: float,
    horizon: float,
    rng: np.random.Generator,
) -> list[tuple[float, Vec3]]:
    """Raw waypoint-following trace sampled every dt up to the horizon."""
    pos = tuple(float(v) for v in start)
    trace = [(0.0, pos)]
    idx = 0
    t = 0.0
    while t < horizon - 1e-9:
        t += dt
        if idx < len(waypoints):
            pos = step_vehicle(pos, params, waypoints[idx], dt, rng)
            if at_waypoint(pos, waypoints[idx], params.waypoint_tol):
                idx += 1
        trace.append((t, pos))
    return trace


def estimate_reachtube(
    start_box: Box,
    waypoints,
    params: VehicleParams,
    n_samples: int,
    bin_width: float = 0.5,
    bloat: float = 1.0,
    dt: float = 0.1,
) -> Reachtube:
    """Sampled over-approximation of where the vehicle may be, per time bin.

    Starts are drawn from ``start_box``; every sampled point lands inside
    its bin's box by construction, and the bloat margin absorbs behaviour
    between samples.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample trace")
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    if bloat < 0:
        raise ValueError("bloat must be nonnegative")
    route_len = _route_length(start_box.center(), waypoints)
    horizon = (route_len / params.speed) * 1.5 + 2.0
    n_bins = max(1, math.ceil(horizon / bin_width))
    horizon = n_bins * bin_width
    per_bin: list[list[Vec3]] = [[] for _ in range(n_bins)]
    for k in range(n_samples):
        rng = params.rng(stream=k + 1)
        start = tuple(
            float(rng.uniform(start_box.lo[a], start_box.hi[a])) for a in range(3)
        )
        for t, pos in simulate_trace(start, waypoints, params, dt, horizon, rng):
            b = min(int(t / bin_width), n_bins - 1)
            per_bin[b].append(pos)
    bins = []
    last_box = None
    for i, pts in enumerate(per_bin):
        box = hull_of_points(pts).bloated(bloat) if pts else last_box
        if box is None:
            raise VolumeError("no samples in the first bin")
        last_box = box
        bins.append((i * bin_width, (i + 1) * bin_width, box))
    return Reachtube(tuple(bins))


def reachtube_to_ov(
    tube: Reachtube, t_split: list[float], airspace: Box
) -> OperationVolume:
    """Wrap a tube as a volume: bounding boxes per split window.

    With no splits the result is a single pair bounding the whole horizon.
    With splits, the first pair reserves the initial bin from unbounded
    past (the vehicle waits inside it before launch), each split window is
    covered by the hull of the bins it spans, and from the horizon end the
    whole airspace is reserved (the tube says nothing beyond it).
    """
    splits = [float(t) for t in t_split]
    if any(b <= a for a, b in zip(splits, splits[1:])):
        raise VolumeError("split times must be increasing")
    if splits and (splits[0] < tube.t_start or splits[-1] > tube.t_end):
        raise VolumeError("split times must lie within the tube horizon")
    if not splits:
        whole = hull_of_boxes([box for _, _, box in tube.bins])
        return OperationVolume((BoxSet.of(whole),), (tube.t_start,))
    regions: list[BoxSet] = [BoxSet.of(tube.bins[0][2])]
    times: list[float] = [NEG_INF]
    # Windows always begin at the tube start so the whole horizon is covered.
    bounds = [tube.t_start] + [s for s in splits if s > tube.t_start]
    bounds.append(tube.t_end)
    for w_start, w_end in zip(bounds, bounds[1:]):
        if w_start == w_end:
            continue
        boxes = [
            box for t_a, t_b, box in tube.bins if t_a < w_end and t_b > w_start
        ]
        regions.append(BoxSet.of(hull_of_boxes(boxes)))
        times.append(w_start)
    regions.append(BoxSet.of(airspace))
    times.append(tube.t_end)
    return OperationVolume(tuple(regions), tuple(times))


def _route_length(pos: Vec3, waypoints) -> float:
    total = 0.0
    prev = pos
    for wp in waypoints:
        total += math.dist(prev, wp)
        prev = wp
    return total


def _segments(pos: Vec3, waypoints) -> list[tuple[Vec3, Vec3, float]]:
    """Nonzero route legs as (from, to, length)."""
    segs = []
    prev = tuple(float(v) for v in pos)
    for wp in waypoints:
        wp = tuple(float(v) for v in wp)
        d = math.dist(prev, wp)
        if d > 0.0:
            segs.append((prev, wp, d))
        prev = wp
    return segs


def make_ov(
    strategy: Strategy,
    pos: Vec3,
    clk: float,
    waypoints,
    params: VehicleParams,
    bloat: float = 1.0,
    slack: float = 1.5,
) -> OperationVolume:
    """Deterministic volume for a waypoint route, per strategy.

    Segment traversal times are distance/speed scaled by ``slack``; both
    strategies end parked in a bloated box around the final waypoint, which
    route generators place clear of everyone else's routes.
    """
    waypoints = [tuple(float(v) for v in wp) for wp in waypoints]
    if not waypoints:
        raise VolumeError("route needs at least one waypoint")
    if slack < 1.0:
        raise VolumeError("slack below 1 leaves no time to fly the route")
    segs = _segments(pos, waypoints)
    pad = hull_of_points([waypoints[-1]]).bloated(bloat)
    if not segs:
        return OperationVolume((BoxSet.of(pad),), (clk,))
    total_eta = sum(d for _, _, d in segs) / params.speed * slack
    if strategy is Strategy.CONSERVATIVE:
        hull = hull_of_points([pos, *waypoints]).bloated(bloat)
        return OperationVolume(
            (BoxSet.of(hull), BoxSet.of(pad)), (clk, clk + total_eta)
        )
    regions = []
    times = []
    t = clk
    for a, b, d in segs:
        regions.append(BoxSet.of(hull_of_points([a, b]).bloated(bloat)))
        times.append(t)
        t += d / params.speed * slack
    regions.append(BoxSet.of(pad))
    times.append(t)
    return OperationVolume(tuple(regions), tuple(times))


def leg_schedule(
    strategy: Strategy,
    pos: Vec3,
    clk: float,
    waypoints,
    params: VehicleParams,
    slack: float = 1.5,
) -> tuple[float, ...]:
    """Earliest start time per route leg, matching :func:`make_ov` windows.

    Conservative reservations cover the whole route at once, so every leg
    may start immediately; aggressive ones gate each leg on its window so
    the vehicle never runs ahead of its reserved box.
    """
    waypoints = [tuple(float(v) for v in wp) for wp in waypoints]
    if strategy is Strategy.CONSERVATIVE:
        return tuple(clk for _ in waypoints)
    out = []
    t = clk
    prev = tuple(float(v) for v in pos)
    for wp in waypoints:
        out.append(t)
        d = math.dist(prev, wp)
        t += d / params.speed * slack
        prev = wp
    return tuple(out)
