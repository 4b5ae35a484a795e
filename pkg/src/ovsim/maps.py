"""Scenario maps: per-agent spawn points, waypoint routes and landing spots.

Every map shares one layout rule: the flown route area (corridor, loop or
random arena) sits between two diagonal staircases of parking slots, one
northwest and one southeast of it.  Spawns and landing spots live on the
staircases.  Walking a staircase moves diagonally, so the bounding hull of
any agent's whole route (which is anchored at its own slots) contains no
other slot: every other slot escapes either sideways or lengthwise.  That
gives the liveness precondition by construction - nobody's parked start or
landing box blocks anyone else's route hull - and it is re-checked
explicitly for every generated instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import (
    Box,
    Vec3,
    box_from_center,
    box_intersection,
    hull_of_points,
)

MAP_KINDS = ("corridor", "loop", "random")

CRUISE_Z = 10.0
SLOT_STEP = 3.0


class ConfigError(ValueError):
    """Raised for unsatisfiable or malformed scenario configurations."""


@dataclass(frozen=True)
class MapLayout:
    kind: str
    spawns: tuple[Vec3, ...]
    routes: tuple[tuple[Vec3, ...], ...]  # last waypoint is the landing spot
    spawn_margin: float
    airspace: Box

    @property
    def n_agents(self) -> int:
        return len(self.spawns)

    def landing_spot(self, i: int) -> Vec3:
        return self.routes[i][-1]

    def spawn_box(self, i: int) -> Box:
        return box_from_center(self.spawns[i], self.spawn_margin)

    def route_hull(self, i: int, bloat: float) -> Box:
        """Bloated bounding box of everything agent ``i`` may reserve."""
        return hull_of_points([self.spawns[i], *self.routes[i]]).bloated(bloat)


def parse_map_kind(name: str) -> tuple[str, int]:
    """Split e.g. "random4" into ("random", 4); plain kinds get 0."""
    name = name.lower()
    if name in ("corridor", "loop"):
        return name, 0
    if name.startswith("random"):
        suffix = name[len("random") :]
        if suffix.isdigit() and int(suffix) >= 1:
            return "random", int(suffix)
    raise ConfigError(f"unknown map {name!r}")


def _staircases(area_lo, area_hi, n, margin, z):
    """n parking slots on each diagonal staircase around the route area."""
    nw = [
        (
            area_lo[0] - margin - SLOT_STEP * (n - s),
            area_hi[1] + margin + SLOT_STEP * (s + 1),
            z,
        )
        for s in range(n)
    ]
    se = [
        (
            area_hi[0] + margin + SLOT_STEP * (t + 1),
            area_lo[1] - margin - SLOT_STEP * (n - t),
            z,
        )
        for t in range(n)
    ]
    return nw, se


def generate_map(
    kind: str,
    n_agents: int,
    airspace: Box | None = None,
    seed: int = 0,
    spawn_margin: float = 1.0,
    bloat: float = 1.0,
) -> MapLayout:
    """Build a map instance; deterministic in (kind, n_agents, seed)."""
    base_kind, n_random = parse_map_kind(kind)
    if n_agents < 1:
        raise ConfigError("need at least one agent")
    z = CRUISE_Z
    margin = spawn_margin + bloat

    if base_kind == "corridor":
        # A single tight tube; half the fleet enters from each end.  Gate
        # fixes sit clear of the tube's bloated box so approach legs do not
        # overlap it: rival traffic can fly its approach while the tube is
        # busy and only the short tube windows themselves serialize.
        west, east = (0.0, 0.0, z), (20.0, 0.0, z)
        gate_w, gate_e = (-4.0, 0.0, z), (24.0, 0.0, z)
        nw, se = _staircases((gate_w[0], 0.0), (gate_e[0], 0.0), n_agents, margin, z)
        spawns = []
        routes = []
        for i in range(n_agents):
            if i % 2 == 0:  # starts west, crosses west -> east
                spawns.append(nw[i])
                routes.append((gate_w, west, east, gate_e, se[i]))
            else:
                spawns.append(se[i])
                routes.append((gate_e, east, west, gate_w, nw[i]))
    elif base_kind == "loop":
        # Everyone flies the same closed chain, entering at staggered corners.
        verts = [(6.0, 6.0, z), (14.0, 6.0, z), (14.0, 14.0, z), (6.0, 14.0, z)]
        nw, se = _staircases((6.0, 6.0), (14.0, 14.0), n_agents, margin, z)
        spawns = list(nw)
        routes = []
        for i in range(n_agents):
            k = i % len(verts)
            lap = [verts[(k + j) % len(verts)] for j in range(len(verts))]
            lap.append(verts[k])
            routes.append(tuple(lap) + (se[i],))
    else:  # random
        arena_lo, arena_hi = (0.0, 0.0), (25.0, 25.0)
        nw, se = _staircases(arena_lo, arena_hi, n_agents, margin, z)
        rng = np.random.default_rng((seed, 0xA1EA))
        spawns = list(nw)
        routes = []
        for i in range(n_agents):
            wps = []
            prev = spawns[i]
            while len(wps) < n_random:
                cand = (
                    float(rng.uniform(arena_lo[0] + 1, arena_hi[0] - 1)),
                    float(rng.uniform(arena_lo[1] + 1, arena_hi[1] - 1)),
                    z,
                )
                if math.dist(cand, prev) >= 2.0:
                    wps.append(cand)
                    prev = cand
            routes.append(tuple(wps) + (se[i],))

    layout = MapLayout(
        kind=kind,
        spawns=tuple(spawns),
        routes=tuple(tuple(r) for r in routes),
        spawn_margin=spawn_margin,
        airspace=airspace
        if airspace is not None
        else _auto_airspace(spawns, routes, margin),
    )
    validate_layout(layout, bloat)
    return layout


def _auto_airspace(spawns, routes, margin) -> Box:
    pts = list(spawns)
    for r in routes:
        pts.extend(r)
    return hull_of_points(pts).bloated(margin + 2.0)


def validate_layout(layout: MapLayout, bloat: float) -> None:
    """Reject layouts that break the scenario preconditions.

    Checks: airspace containment, pairwise disjoint spawn boxes, and that
    each agent's landing and spawn boxes avoid every other agent's bloated
    route hull (so parked agents can never block a retried route forever).
    """
    for i in range(layout.n_agents):
        for p in (layout.spawns[i], *layout.routes[i]):
            if not layout.airspace.contains(p):
                raise ConfigError(
                    f"agent {i} leaves the airspace at {p}; too many agents "
                    "for this arena or the airspace is too small"
                )
    pads = [
        box_from_center(layout.landing_spot(i), bloat)
        for i in range(layout.n_agents)
    ]
    for i in range(layout.n_agents):
        hull_i = layout.route_hull(i, bloat)
        for j in range(layout.n_agents):
            if i == j:
                continue
            cut = box_intersection(layout.spawn_box(i), layout.spawn_box(j))
            if cut is not None:
                raise ConfigError(f"spawn boxes of agents {i} and {j} overlap")
            if box_intersection(pads[j], hull_i) is not None:
                raise ConfigError(
                    f"landing spot of agent {j} blocks agent {i}'s route"
                )
            if box_intersection(layout.spawn_box(j), hull_i) is not None:
                raise ConfigError(
                    f"spawn box of agent {j} blocks agent {i}'s route"
                )
