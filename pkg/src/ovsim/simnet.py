"""Deterministic discrete-event engine and message bus.

Events are processed in (due time, sequence) order; the sequence number is
a global send counter, so simultaneous events resolve in send order and two
runs with the same configuration produce identical schedules.  Message
delay is uniform per run (optionally jittered from a seeded generator);
deliveries from one sender never overtake each other because later sends
are clamped to at-or-after the sender's previous delivery time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


@dataclass(frozen=True)
class Deliver:
    dest: Any  # agent id or messages.MANAGER
    sender: Any
    msg: Any
    msg_id: int


@dataclass(frozen=True)
class Tick:
    agent_id: int


@dataclass(frozen=True)
class PlanTrigger:
    agent_id: int


@dataclass(frozen=True)
class SimEvent:
    due: float
    seq: int
    payload: Any


@dataclass
class DelayModel:
    """Constant delivery delay, plus optional seeded uniform jitter."""

    delay: float = 0.0
    jitter: float = 0.0
    seed: int = 0
    _rng: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.delay < 0 or self.jitter < 0:
            raise ValueError("delays must be nonnegative")

    def sample(self) -> float:
        if self.jitter == 0.0:
            return self.delay
        if self._rng is None:
            object.__setattr__(self, "_rng", np.random.default_rng(self.seed))
        return self.delay + float(self._rng.uniform(0.0, self.jitter))


class BacklogError(RuntimeError):
    """Pending-event bound exceeded; the run is livelocked."""


class EventBus:
    """Single-threaded event loop owning the clock and the message queue."""

    def __init__(
        self,
        delay: DelayModel | None = None,
        max_backlog: int = 1_000_000,
    ):
        self.now = 0.0
        self.delay = delay or DelayModel()
        self.max_backlog = max_backlog
        self._heap: list[tuple[float, int, Any]] = []
        self._seq = 0
        self._msg_seq = 0
        self._last_delivery: dict[Any, float] = {}
        self.handler: Callable[[float, Any], None] | None = None
        self.stopped = False

    def schedule(self, due: float, payload: Any) -> None:
        if due < self.now:
            raise ValueError(f"cannot schedule into the past: {due} < {self.now}")
        if len(self._heap) >= self.max_backlog:
            raise BacklogError(f"more than {self.max_backlog} pending events")
        heapq.heappush(self._heap, (due, self._seq, payload))
        self._seq += 1

    def send(self, sender: Any, dest: Any, msg: Any) -> Deliver:
        """Schedule delivery of ``msg``; per-sender order is preserved."""
        due = self.now + self.delay.sample()
        floor = self._last_delivery.get(sender)
        if floor is not None and due < floor:
            due = floor
        self._last_delivery[sender] = due
        self._msg_seq += 1
        ev = Deliver(dest=dest, sender=sender, msg=msg, msg_id=self._msg_seq)
        self.schedule(due, ev)
        return ev

    def run_until(self, t_end: float) -> None:
        """Process events due up to ``t_end``; the clock lands on ``t_end``.

        With an empty queue the clock simply jumps.  A handler raising stops
        the run; ``stop()`` drains without processing further events.
        """
        if t_end < self.now:
            raise ValueError("cannot run backwards")
        while self._heap and not self.stopped:
            due, _, payload = self._heap[0]
            if due > t_end:
                break
            heapq.heappop(self._heap)
            self.now = due
            if self.handler is None:
                raise RuntimeError("no event handler installed")
            self.handler(due, payload)
        self.now = t_end if not self.stopped else self.now

    def stop(self) -> None:
        self.stopped = True

    @property
    def pending(self) -> int:
        return len(self._heap)

    def pending_deliveries(self) -> int:
        return sum(1 for _, _, p in self._heap if isinstance(p, Deliver))
