"""Agent protocol endpoint: plan, request, wait, move, release.

The agent owns three contracts: ``curr_contr`` (the volume it actually
follows, mirroring the manager's record), ``plan_contr`` (the proposal for
the current route) and ``free_contr`` (the portion about to be handed
back).  While moving it checks every sampled step that its position and
clock lie inside ``curr_contr``; leaving it is a violation, after which the
vehicle halts in place and keeps the flag forever.

A rejected proposal is retried by shifting its schedule into the future:
the shift starts at 5 s and doubles up to 320 s, re-anchored at the current
clock, which eventually clears any window behind the other agents' parked
tails.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .boxes import Vec3
from .messages import Release, Request, Violate
from .manager import ProtocolError
from .volumes import (
    OperationVolume,
    SpaceTimePoint,
    combine,
    contains,
    is_empty,
    refines,
    reschedule,
    trim_unbounded_start,
)


class AgentStatus(enum.Enum):
    IDLE = "idle"
    REQUESTING = "requesting"
    WAITING = "waiting"
    MOVING = "moving"
    RELEASING = "releasing"


# Legal (from, action, to) transitions of the protocol state diagram.
ALLOWED_EDGES = frozenset(
    {
        (AgentStatus.IDLE, "plan", AgentStatus.REQUESTING),
        (AgentStatus.REQUESTING, "request", AgentStatus.WAITING),
        (AgentStatus.WAITING, "reply", AgentStatus.MOVING),
        (AgentStatus.WAITING, "reply", AgentStatus.RELEASING),
        (AgentStatus.MOVING, "next_region", AgentStatus.MOVING),
        (AgentStatus.MOVING, "violate", AgentStatus.MOVING),
        (AgentStatus.MOVING, "succeed", AgentStatus.RELEASING),
        (AgentStatus.RELEASING, "release", AgentStatus.IDLE),
    }
)


@dataclass
class RetryState:
    attempts: int = 0
    next_delta: float = 5.0
    delta_cap: float = 320.0
    max_attempts: int = 400


@dataclass
class AgentState:
    id: int
    curr_contr: OperationVolume
    pos: Vec3
    clk: float = 0.0
    status: AgentStatus = AgentStatus.IDLE
    plan_contr: OperationVolume | None = None
    free_contr: OperationVolume | None = None
    waypoints: tuple[Vec3, ...] = ()
    violated: bool = False
    warnings: int = 0
    retry: RetryState = field(default_factory=RetryState)
    # controller plumbing: per-leg earliest start times and progress
    leg_times: tuple[float, ...] = ()
    leg_index: int = 0
    completed: bool = False
    liveness_failed: bool = False
    version: int = 0  # bumped when curr_contr changes, for monitor caching
    trace: list = field(default_factory=list)

    def _edge(self, action: str, to: AgentStatus) -> None:
        self.trace.append((self.clk, action, self.status, to))
        self.status = to


def on_plan(
    state: AgentState,
    contr: OperationVolume,
    waypoints: tuple[Vec3, ...],
    leg_times: tuple[float, ...],
) -> Request:
    """Adopt a proposal and emit the request for it (IDLE -> WAITING)."""
    if state.status is not AgentStatus.IDLE:
        raise ProtocolError(f"agent {state.id} planned while {state.status.name}")
    state.plan_contr = contr
    state.waypoints = tuple(waypoints)
    state.leg_times = tuple(leg_times)
    state._edge("plan", AgentStatus.REQUESTING)
    state._edge("request", AgentStatus.WAITING)
    return Request(sender=state.id, ov=contr)


def on_reply(state: AgentState, contr: OperationVolume) -> None:
    """Process the manager's recorded contract.

    A reply that no longer covers ``curr_contr`` means the manager could
    hand our space to someone else: that raises a warning but the run
    continues so the condition can be diagnosed.  If the proposal was
    granted (covered by the reply) the agent starts moving; otherwise the
    uncovered remainder is queued for release and the agent will retry.
    """
    if state.status is not AgentStatus.WAITING:
        raise ProtocolError(f"agent {state.id} got a reply while {state.status.name}")
    if not refines(state.curr_contr, contr):
        state.warnings += 1
    if state.plan_contr is not None and refines(state.plan_contr, contr):
        state.curr_contr = contr
        state.version += 1
        state.leg_index = 0
        state._edge("reply", AgentStatus.MOVING)
    else:
        state.free_contr = combine(contr, state.curr_contr, "difference")
        state._edge("reply", AgentStatus.RELEASING)


def make_release(state: AgentState) -> Release | None:
    """Hand back ``free_contr`` and go idle; empty volumes send nothing."""
    if state.status is not AgentStatus.RELEASING:
        raise ProtocolError(f"agent {state.id} released while {state.status.name}")
    msg = None
    if state.free_contr is not None and not is_empty(state.free_contr):
        msg = Release(sender=state.id, ov=state.free_contr)
    state._edge("release", AgentStatus.IDLE)
    return msg


def on_next_region(state: AgentState) -> bool:
    """Drop the head pair of the plan once its interval has passed.

    Returns False when not enabled (wrong status, single pair left, or the
    clock has not reached the next time point yet).
    """
    if state.status is not AgentStatus.MOVING or state.plan_contr is None:
        return False
    plan = state.plan_contr
    if len(plan) < 2 or state.clk < plan.times[1]:
        return False
    state.plan_contr = OperationVolume(plan.regions[1:], plan.times[1:])
    state._edge("next_region", AgentStatus.MOVING)
    return True


def on_succeed(state: AgentState) -> Release | None:
    """Finish the route: keep only the final parked pair, release the rest.

    ``curr_contr`` is shrunk before the release message departs, so the
    agent never holds more than the manager's record.
    """
    if state.status is not AgentStatus.MOVING or state.plan_contr is None:
        return None
    plan = state.plan_contr
    if len(plan) != 1 or state.violated:
        return None
    if not plan.regions[-1].contains(state.pos):
        return None
    tail = OperationVolume(plan.regions[-1:], plan.times[-1:])
    state.free_contr = combine(state.curr_contr, tail, "difference")
    state.curr_contr = combine(state.curr_contr, state.free_contr, "difference")
    state.version += 1
    state._edge("succeed", AgentStatus.RELEASING)
    state.completed = True
    return make_release(state)


def check_violation(state: AgentState) -> Violate | None:
    """Flag (sticky) and report leaving the current contract while moving."""
    if state.status is not AgentStatus.MOVING or state.violated:
        return None
    if contains(state.curr_contr, SpaceTimePoint(state.pos, state.clk)):
        return None
    state.violated = True
    state._edge("violate", AgentStatus.MOVING)
    return Violate(sender=state.id)


def retry_reschedule(state: AgentState) -> Request | None:
    """Shift the rejected proposal into the future and re-request it.

    The plan's first finite time point is re-anchored to ``clk + delta``
    with delta doubling per attempt (capped); any unbounded prefix is
    trimmed first since a shift of ``-inf`` is undefined.  Returns None and
    flags the agent when the attempt budget is exhausted.
    """
    if state.status is not AgentStatus.IDLE:
        raise ProtocolError(f"agent {state.id} retried while {state.status.name}")
    if state.plan_contr is None:
        raise ProtocolError(f"agent {state.id} has no plan to retry")
    if state.retry.attempts >= state.retry.max_attempts:
        state.liveness_failed = True
        return None
    plan = trim_unbounded_start(state.plan_contr)
    delta = state.clk + state.retry.next_delta - plan.times[0]
    if delta < 0:
        delta = 0.0
    state.plan_contr = reschedule(plan, delta)
    state.leg_times = tuple(t + delta for t in state.leg_times)
    state.retry.attempts += 1
    state.retry.next_delta = min(state.retry.next_delta * 2, state.retry.delta_cap)
    state._edge("plan", AgentStatus.REQUESTING)
    state._edge("request", AgentStatus.WAITING)
    return Request(sender=state.id, ov=state.plan_contr)
