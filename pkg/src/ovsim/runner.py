"""Scenario runner: wires agents, manager and bus; monitors global safety.

One run is a single-threaded event loop.  Monitors re-evaluate the global
predicates (manager contracts pairwise disjoint; every agent's current
contract within the manager's record; non-violated agents' current
contracts pairwise disjoint) after every delivery and every tick; contract
state is versioned so unchanged checkpoints are served from cache.  Any
breach without a corresponding violate flag aborts the run: that is a bug
in the protocol, not in the scenario.

Runs are reproducible: identical configuration and seed give byte-identical
event logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import agent as agent_mod
from . import manager as manager_mod
from .boxes import Box, box_from_center
from .maps import ConfigError, MapLayout, generate_map, parse_map_kind
from .messages import MANAGER, Release, Reply, Request, Violate
from .simnet import DelayModel, Deliver, EventBus, PlanTrigger, Tick
from .vehicles import Strategy, VehicleParams, at_waypoint, leg_schedule, make_ov, step_vehicle
from .volumes import NEG_INF, OperationVolume, disjoint, refines, single_pair


class SafetyViolationError(RuntimeError):
    """A global safety predicate failed without a violate flag."""


@dataclass(frozen=True)
class ScenarioConfig:
    map: str = "corridor"
    n_agents: int = 2
    strategy: str = "conservative"
    delay: float = 0.0
    jitter: float = 0.0
    dt: float = 0.1
    seed: int = 0
    max_time: float = 1800.0
    airspace: Box | None = None
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    bloat: float = 1.0
    slack: float = 1.5
    spawn_margin: float = 1.0
    plan_epsilon: float = 0.01
    retry_spacing: float = 1.0
    max_backlog: int = 200_000

    def validated(self) -> "ScenarioConfig":
        parse_map_kind(self.map)
        if self.n_agents < 1:
            raise ConfigError("n_agents must be at least 1")
        if self.max_time <= 0:
            raise ConfigError("max_time must be positive")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.strategy not in (s.value for s in Strategy):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.delay < 0 or self.jitter < 0:
            raise ConfigError("delays must be nonnegative")
        return self

    @property
    def strategy_enum(self) -> Strategy:
        return Strategy(self.strategy)

    def to_jsonable(self) -> dict:
        out = {
            "map": self.map,
            "n_agents": self.n_agents,
            "strategy": self.strategy,
            "delay": self.delay,
            "jitter": self.jitter,
            "dt": self.dt,
            "seed": self.seed,
            "max_time": self.max_time,
            "bloat": self.bloat,
            "slack": self.slack,
            "spawn_margin": self.spawn_margin,
            "plan_epsilon": self.plan_epsilon,
            "retry_spacing": self.retry_spacing,
            "vehicle": {
                "speed": self.vehicle.speed,
                "waypoint_tol": self.vehicle.waypoint_tol,
                "noise_sigma": self.vehicle.noise_sigma,
                "seed": self.vehicle.seed,
            },
        }
        if self.airspace is not None:
            out["airspace"] = {"lo": list(self.airspace.lo), "hi": list(self.airspace.hi)}
        return out

    @classmethod
    def from_jsonable(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        vehicle = data.pop("vehicle", None)
        airspace = data.pop("airspace", None)
        kwargs = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if vehicle is not None:
            kwargs["vehicle"] = VehicleParams(**vehicle)
        if airspace is not None:
            kwargs["airspace"] = Box(tuple(airspace["lo"]), tuple(airspace["hi"]))
        return cls(**kwargs).validated()


class EventLog:
    """Line-oriented, replayable record of everything that happened."""

    def __init__(self):
        self.records: list[dict] = []
        self._seq = 0

    def add(self, t: float, kind: str, frm, to, summary: str, data: dict | None = None):
        rec = {
            "due": round(float(t), 9),
            "seq": self._seq,
            "kind": kind,
            "from": frm,
            "to": to,
            "summary": summary,
        }
        if data:
            rec["data"] = data
        self.records.append(rec)
        self._seq += 1


class Monitor:
    """Global safety predicates, cached on contract-state versions."""

    def __init__(self, world: "World"):
        self.world = world
        self._last_key = None

    def _key(self):
        w = self.world
        return (
            w.manager.version,
            tuple(a.version for a in w.agents),
            tuple(a.violated for a in w.agents),
        )

    def check(self, where: str) -> None:
        key = self._key()
        if key == self._last_key:
            return
        w = self.world
        if not manager_mod.check_manager_invariant(w.manager):
            self._breach(where, "manager records overlap")
        for a in w.agents:
            if not refines(a.curr_contr, w.manager.contr_arr[a.id]):
                self._breach(where, f"agent {a.id} holds more than its record")
        live = [a for a in w.agents if not a.violated]
        for i, a in enumerate(live):
            for b in live[i + 1 :]:
                if not disjoint(a.curr_contr, b.curr_contr):
                    self._breach(
                        where, f"agents {a.id} and {b.id} hold overlapping contracts"
                    )
        self._last_key = key

    def _breach(self, where: str, what: str):
        self.world.log.add(self.world.bus.now, "monitor", "monitor", None, what)
        raise SafetyViolationError(f"{what} (at {where}, t={self.world.bus.now})")


class World:
    """Mutable state of one scenario run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config.validated()
        self.layout: MapLayout = generate_map(
            config.map,
            config.n_agents,
            airspace=config.airspace,
            seed=config.seed,
            spawn_margin=config.spawn_margin,
            bloat=config.bloat,
        )
        spawn_contracts = {
            i: single_pair(self.layout.spawn_box(i), NEG_INF)
            for i in range(config.n_agents)
        }
        self.manager = manager_mod.initial_state(spawn_contracts)
        self.agents = [
            agent_mod.AgentState(
                id=i, curr_contr=spawn_contracts[i], pos=self.layout.spawns[i]
            )
            for i in range(config.n_agents)
        ]
        self.rngs = [
            np.random.default_rng((config.seed, i)) for i in range(config.n_agents)
        ]
        self.bus = EventBus(
            delay=DelayModel(config.delay, config.jitter, config.seed),
            max_backlog=config.max_backlog,
        )
        self.bus.handler = self._handle
        self.log = EventLog()
        self.monitor = Monitor(self)
        self.planned = [False] * config.n_agents
        self.end_time: float | None = None

    # -- helpers ----------------------------------------------------------

    def _terminal(self, a) -> bool:
        return a.completed or a.violated or a.liveness_failed

    def _maybe_finish(self):
        if all(self._terminal(a) for a in self.agents):
            if self.bus.pending_deliveries() == 0:
                self.end_time = self.bus.now
                self.bus.stop()

    def _send(self, sender, dest, msg):
        ev = self.bus.send(sender, dest, msg)
        summary = type(msg).__name__.lower()
        data = {"msg_id": ev.msg_id}
        if isinstance(msg, (Request, Release)):
            data["t1"] = msg.ov.times[0] if msg.ov.times[0] != NEG_INF else "-inf"
            data["pairs"] = len(msg.ov)
            data["rects"] = msg.ov.rect_count
        self.log.add(self.bus.now, "send", sender, dest, summary, data)

    # -- event handlers ---------------------------------------------------

    def _handle(self, t: float, payload) -> None:
        if isinstance(payload, Deliver):
            self.log.add(
                t,
                "deliver",
                payload.sender,
                payload.dest,
                type(payload.msg).__name__.lower(),
                {"msg_id": payload.msg_id},
            )
            if payload.dest == MANAGER:
                self._deliver_to_manager(payload.msg)
            else:
                self._deliver_to_agent(payload.dest, payload.msg)
            self.monitor.check("delivery")
        elif isinstance(payload, Tick):
            self._tick(payload.agent_id)
            self.monitor.check("tick")
        elif isinstance(payload, PlanTrigger):
            self._plan_trigger(payload.agent_id)
        self._maybe_finish()

    def _deliver_to_manager(self, msg) -> None:
        if isinstance(msg, Request):
            decision = manager_mod.on_request(self.manager, msg.sender, msg.ov)
            self.log.add(
                self.bus.now,
                "decision",
                MANAGER,
                msg.sender,
                "accept" if decision.accepted else "reject",
                {
                    "requested_t1": decision.requested_t1,
                    "pairs": len(msg.ov),
                    "rects": msg.ov.rect_count,
                    "queries": decision.queries,
                    "rects_checked": decision.rects,
                    "delta_floor": decision.delta_floor
                    if decision.delta_floor != NEG_INF
                    else "-inf",
                    "attempt": self.agents[msg.sender].retry.attempts,
                },
            )
            reply = manager_mod.make_reply(self.manager, msg.sender)
            self._send(MANAGER, reply.to, reply)
        elif isinstance(msg, Release):
            manager_mod.on_release(self.manager, msg.sender, msg.ov)
        elif isinstance(msg, Violate):
            manager_mod.on_violate(self.manager, msg.sender)
        else:
            raise manager_mod.ProtocolError(f"manager got unexpected {msg!r}")

    def _deliver_to_agent(self, agent_id: int, msg) -> None:
        a = self.agents[agent_id]
        a.clk = self.bus.now
        if not isinstance(msg, Reply):
            raise manager_mod.ProtocolError(f"agent {agent_id} got unexpected {msg!r}")
        before_warn = a.warnings
        agent_mod.on_reply(a, msg.ov)
        if a.warnings > before_warn:
            self.log.add(self.bus.now, "warning", agent_id, None, "reply uncovers held contract")
        if a.status is agent_mod.AgentStatus.MOVING:
            self.log.add(self.bus.now, "transition", agent_id, None, "moving")
        else:  # rejected: hand back the uncovered remainder and retry later
            release = agent_mod.make_release(a)
            if release is not None:
                self._send(agent_id, MANAGER, release)
            self.log.add(self.bus.now, "transition", agent_id, None, "idle-rejected")
            self.bus.schedule(
                self.bus.now + self.config.retry_spacing, PlanTrigger(agent_id)
            )

    def _plan_trigger(self, agent_id: int) -> None:
        a = self.agents[agent_id]
        a.clk = self.bus.now
        if self._terminal(a) or a.status is not agent_mod.AgentStatus.IDLE:
            return
        if not self.planned[agent_id]:
            self.planned[agent_id] = True
            route = self.layout.routes[agent_id]
            ov = make_ov(
                self.config.strategy_enum,
                a.pos,
                self.bus.now,
                route,
                self.config.vehicle,
                bloat=self.config.bloat,
                slack=self.config.slack,
            )
            legs = leg_schedule(
                self.config.strategy_enum,
                a.pos,
                self.bus.now,
                route,
                self.config.vehicle,
                slack=self.config.slack,
            )
            msg = agent_mod.on_plan(a, ov, route, legs)
            self.log.add(
                self.bus.now,
                "plan",
                agent_id,
                None,
                self.config.strategy,
                {"pairs": len(ov), "rects": ov.rect_count},
            )
            self._send(agent_id, MANAGER, msg)
        else:
            msg = agent_mod.retry_reschedule(a)
            if msg is None:
                self.log.add(self.bus.now, "liveness", agent_id, None, "retry budget exhausted")
                return
            self.log.add(
                self.bus.now,
                "plan",
                agent_id,
                None,
                "retry",
                {"attempt": a.retry.attempts, "t1": msg.ov.times[0]},
            )
            self._send(agent_id, MANAGER, msg)

    def _tick(self, agent_id: int) -> None:
        a = self.agents[agent_id]
        a.clk = self.bus.now
        if a.status is agent_mod.AgentStatus.MOVING and not a.violated:
            while agent_mod.on_next_region(a):
                self.log.add(self.bus.now, "transition", agent_id, None, "next-region")
            self._move(a)
            violate = agent_mod.check_violation(a)
            if violate is not None:
                pair_idx = len(a.plan_contr) if a.plan_contr is not None else 0
                self.log.add(
                    self.bus.now,
                    "violate",
                    agent_id,
                    None,
                    "left current contract",
                    {"plan_pairs_left": pair_idx},
                )
                self._send(agent_id, MANAGER, violate)
            else:
                release = agent_mod.on_succeed(a)
                if a.completed and a.status is agent_mod.AgentStatus.IDLE:
                    self.log.add(self.bus.now, "succeed", agent_id, None, "route complete")
                    if release is not None:
                        self._send(agent_id, MANAGER, release)
        if not self.bus.stopped and not all(self._terminal(x) for x in self.agents):
            self.bus.schedule(self.bus.now + self.config.dt, Tick(agent_id))
        elif not self.bus.stopped and self.bus.pending_deliveries() > 0:
            self.bus.schedule(self.bus.now + self.config.dt, Tick(agent_id))

    def _move(self, a) -> None:
        if a.leg_index >= len(a.waypoints):
            return  # hovering at the end of the route
        if self.bus.now < a.leg_times[a.leg_index]:
            return  # wait for the reserved window of this leg
        target = a.waypoints[a.leg_index]
        a.pos = step_vehicle(
            a.pos, self.config.vehicle, target, self.config.dt, self.rngs[a.id]
        )
        if at_waypoint(a.pos, target, self.config.vehicle.waypoint_tol):
            a.leg_index += 1

    # -- entry point ------------------------------------------------------

    def run(self) -> None:
        self.log.add(
            0.0, "header", None, None, "scenario", {"config": self.config.to_jsonable()}
        )
        for i in range(self.config.n_agents):
            self.bus.schedule(i * self.config.plan_epsilon, PlanTrigger(i))
            self.bus.schedule(self.config.dt, Tick(i))
        self.monitor.check("init")
        self.bus.run_until(self.config.max_time)
        if self.end_time is None:
            self.end_time = self.config.max_time
        self.log.add(
            self.end_time,
            "end",
            None,
            None,
            "run complete",
            {
                "duration": self.end_time,
                "liveness": all(a.completed for a in self.agents),
                "emptiness_queries": self.manager.stats.emptiness_queries,
                "rects_checked": self.manager.stats.rects_checked,
                "violations_reported": self.manager.stats.violations_reported,
                "warnings": sum(a.warnings for a in self.agents),
            },
        )


def run_scenario(config: ScenarioConfig):
    """Run one scenario; returns (MetricsReport, event records)."""
    from .metrics import compute_metrics

    world = World(config)
    world.run()
    report = compute_metrics(world.log.records, config)
    return report, world.log.records
