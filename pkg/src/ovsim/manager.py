"""Airspace manager: records per-agent contracts and arbitrates requests.

The manager grants a requested volume only when it is disjoint from every
other agent's recorded contract; granted volumes are merged into the
requester's record by union, and releases shrink it by set difference.
Replies always carry the recorded contract, whether or not the request was
granted, so a rejected agent learns the record it already holds.

Pending replies are served first-in first-out to keep runs deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .messages import Reply
from .volumes import OperationVolume, combine, disjoint, disjoint_with_stats


class ProtocolError(RuntimeError):
    """An automaton action was fired outside its precondition."""


@dataclass
class ManagerStats:
    emptiness_queries: int = 0
    rects_checked: int = 0
    violations_reported: int = 0


@dataclass
class RequestDecision:
    """Outcome of one request check, for logging and metrics."""

    agent_id: int
    accepted: bool
    requested_t1: float
    queries: int
    rects: int
    delta_floor: float  # max T_last over other recorded contracts


@dataclass
class ManagerState:
    contr_arr: dict[int, OperationVolume]
    reply_set: deque = field(default_factory=deque)
    stats: ManagerStats = field(default_factory=ManagerStats)
    violated_agents: set = field(default_factory=set)
    version: int = 0  # bumped on every contract change, for monitor caching


def initial_state(contracts: dict[int, OperationVolume]) -> ManagerState:
    return ManagerState(contr_arr=dict(contracts))


def on_request(
    state: ManagerState, agent_id: int, contr: OperationVolume
) -> RequestDecision:
    """Record the pending reply and merge ``contr`` if it conflicts with no one.

    The request is checked against every other agent's contract (the
    requester may overlap itself).  The recorded map is left untouched on
    rejection; either way the agent joins the reply queue.
    """
    if agent_id not in state.contr_arr:
        raise ProtocolError(f"request from unregistered agent {agent_id}")
    if agent_id not in state.reply_set:
        state.reply_set.append(agent_id)
    ok = True
    queries = 0
    rects = 0
    delta_floor = float("-inf")
    for other_id, other in state.contr_arr.items():
        if other_id == agent_id:
            continue
        queries += 1
        empty, pairs = disjoint_with_stats(contr, other)
        rects += pairs
        if not empty:
            ok = False
        delta_floor = max(delta_floor, other.t_last)
    state.stats.emptiness_queries += queries
    state.stats.rects_checked += rects
    if ok:
        state.contr_arr[agent_id] = combine(state.contr_arr[agent_id], contr, "union")
        state.version += 1
    return RequestDecision(
        agent_id=agent_id,
        accepted=ok,
        requested_t1=contr.times[0],
        queries=queries,
        rects=rects,
        delta_floor=delta_floor,
    )


def make_reply(state: ManagerState, agent_id: int | None = None) -> Reply:
    """Emit the recorded contract for the oldest (or given) pending agent."""
    if not state.reply_set:
        raise ProtocolError("no pending replies")
    if agent_id is None:
        agent_id = state.reply_set.popleft()
    elif agent_id in state.reply_set:
        state.reply_set.remove(agent_id)
    else:
        raise ProtocolError(f"agent {agent_id} has no pending reply")
    return Reply(to=agent_id, ov=state.contr_arr[agent_id])


def on_release(state: ManagerState, agent_id: int, contr: OperationVolume) -> None:
    """Shrink the agent's record by set difference."""
    if agent_id not in state.contr_arr:
        raise ProtocolError(f"release from unregistered agent {agent_id}")
    state.contr_arr[agent_id] = combine(
        state.contr_arr[agent_id], contr, "difference"
    )
    state.version += 1


def on_violate(state: ManagerState, agent_id: int) -> None:
    """Count the report and flag the agent; contracts are not touched."""
    state.stats.violations_reported += 1
    state.violated_agents.add(agent_id)


def check_manager_invariant(state: ManagerState) -> bool:
    """All recorded contracts pairwise disjoint."""
    ids = list(state.contr_arr)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if not disjoint(state.contr_arr[a], state.contr_arr[b]):
                return False
    return True
