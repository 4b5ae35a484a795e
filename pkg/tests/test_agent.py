import pytest

from ovsim.agent import (
    ALLOWED_EDGES,
    AgentState,
    AgentStatus,
    check_violation,
    make_release,
    on_next_region,
    on_plan,
    on_reply,
    on_succeed,
    retry_reschedule,
)
from ovsim.boxes import Box, BoxSet, box_from_center
from ovsim.manager import ProtocolError
from ovsim.messages import Release, Request, Violate
from ovsim.volumes import (
    NEG_INF,
    OperationVolume,
    SpaceTimePoint,
    combine,
    contains,
    disjoint,
    is_empty,
    refines,
    single_pair,
)

SPAWN = (0.0, 0.0, 5.0)


def spawn_contract():
    return single_pair(box_from_center(SPAWN, 1.0), NEG_INF)


def fresh_agent():
    return AgentState(id=0, curr_contr=spawn_contract(), pos=SPAWN)


def plan_ov(t0=0.0):
    hull = Box((-1.0, -1.0, 4.0), (11.0, 1.0, 6.0))
    pad = Box((9.0, -1.0, 4.0), (11.0, 1.0, 6.0))
    return OperationVolume(
        (BoxSet.of(hull), BoxSet.of(pad)), (t0, t0 + 15.0)
    )


def planned_agent(t0=0.0):
    a = fresh_agent()
    msg = on_plan(a, plan_ov(t0), ((10.0, 0.0, 5.0),), (t0,))
    return a, msg


def granted(a):
    """Reply covering spawn and plan, as the manager would record it."""
    return combine(a.curr_contr, a.plan_contr, "union")


class TestPlanRequest:
    def test_plan_emits_request_and_waits(self):
        a, msg = planned_agent()
        assert isinstance(msg, Request)
        assert msg.ov == a.plan_contr == plan_ov()
        assert a.status is AgentStatus.WAITING

    def test_plan_outside_idle_rejected(self):
        a, _ = planned_agent()
        with pytest.raises(ProtocolError):
            on_plan(a, plan_ov(), (), ())


class TestReply:
    def test_granted_reply_starts_moving(self):
        a, _ = planned_agent()
        reply = granted(a)
        on_reply(a, reply)
        assert a.status is AgentStatus.MOVING
        assert a.curr_contr == reply
        assert a.warnings == 0

    def test_rejected_reply_goes_releasing(self):
        a, _ = planned_agent()
        old = a.curr_contr
        on_reply(a, old)  # record unchanged: the request was not granted
        assert a.status is AgentStatus.RELEASING
        assert a.curr_contr == old
        assert is_empty(a.free_contr)
        assert make_release(a) is None  # nothing to hand back
        assert a.status is AgentStatus.IDLE

    def test_rejected_reply_with_extra_space_releases_it(self):
        a, _ = planned_agent()
        extra = single_pair(Box((50.0,) * 3, (51.0,) * 3), 0.0)
        reply = combine(a.curr_contr, extra, "union")
        on_reply(a, reply)
        assert a.status is AgentStatus.RELEASING
        assert refines(extra, a.free_contr)
        msg = make_release(a)
        assert isinstance(msg, Release)

    def test_uncovering_reply_raises_warning(self):
        a, _ = planned_agent()
        crafted = single_pair(Box((90.0,) * 3, (91.0,) * 3), 0.0)
        on_reply(a, crafted)
        assert a.warnings == 1

    def test_reply_outside_waiting_rejected(self):
        with pytest.raises(ProtocolError):
            on_reply(fresh_agent(), spawn_contract())


class TestMoving:
    def test_next_region_drops_head_when_due(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        a.clk = 9.99
        assert not on_next_region(a)
        a.clk = 15.0
        assert on_next_region(a)
        assert len(a.plan_contr) == 1
        assert not on_next_region(a)

    def test_violation_on_spatial_drift(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        a.clk = 1.0
        a.pos = (50.0, 50.0, 50.0)
        msg = check_violation(a)
        assert isinstance(msg, Violate)
        assert a.violated
        assert a.status is AgentStatus.MOVING
        # sticky: no duplicate reports
        assert check_violation(a) is None

    def test_violation_on_missed_schedule(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        # pad region (and the still-held spawn box) active; stuck mid-route
        a.clk = 16.0
        a.pos = (5.0, 0.0, 5.0)
        assert isinstance(check_violation(a), Violate)

    def test_no_violation_inside(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        a.clk = 1.0
        a.pos = (5.0, 0.0, 5.0)
        assert check_violation(a) is None


class TestSucceed:
    def finished_agent(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        a.pos = (10.0, 0.0, 5.0)
        a.clk = 16.0
        assert on_next_region(a)
        return a

    def test_succeed_releases_everything_but_the_tail(self):
        a = self.finished_agent()
        msg = on_succeed(a)
        assert isinstance(msg, Release)
        assert a.status is AgentStatus.IDLE
        assert a.completed
        tail = single_pair(Box((9.0, -1.0, 4.0), (11.0, 1.0, 6.0)), 15.0)
        assert refines(a.curr_contr, tail)
        assert contains(a.curr_contr, SpaceTimePoint(a.pos, 20.0))
        assert disjoint(a.free_contr, a.curr_contr)

    def test_succeed_guards(self):
        a, _ = planned_agent()
        on_reply(a, granted(a))
        assert on_succeed(a) is None  # two pairs left
        a = self.finished_agent()
        a.pos = (0.0, 0.0, 5.0)
        assert on_succeed(a) is None  # not at the pad
        a.pos = (10.0, 0.0, 5.0)
        a.violated = True
        assert on_succeed(a) is None


class TestRetry:
    def rejected_agent(self):
        a, _ = planned_agent(t0=0.0)
        on_reply(a, a.curr_contr)
        make_release(a)
        return a

    def test_backoff_doubles_and_caps(self):
        a = self.rejected_agent()
        a.clk = 2.0
        deltas = []
        for _ in range(8):
            msg = retry_reschedule(a)
            assert isinstance(msg, Request)
            deltas.append(msg.ov.times[0] - a.clk)
            a.status = AgentStatus.IDLE  # simulate reject cycle
        assert deltas == [5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 320.0]

    def test_leg_times_shift_with_plan(self):
        a = self.rejected_agent()
        a.clk = 0.0
        msg = retry_reschedule(a)
        assert a.leg_times == (5.0,)
        assert msg.ov.times == (5.0, 20.0)

    def test_attempt_budget_flags_liveness_failure(self):
        a = self.rejected_agent()
        a.retry.max_attempts = 2
        retry_reschedule(a)
        a.status = AgentStatus.IDLE
        retry_reschedule(a)
        a.status = AgentStatus.IDLE
        assert retry_reschedule(a) is None
        assert a.liveness_failed

    def test_retry_outside_idle_rejected(self):
        a, _ = planned_agent()
        with pytest.raises(ProtocolError):
            retry_reschedule(a)


def test_traces_stay_on_allowed_edges():
    a, _ = planned_agent()
    on_reply(a, granted(a))
    a.clk = 16.0
    a.pos = (10.0, 0.0, 5.0)
    on_next_region(a)
    on_succeed(a)
    for clk, action, frm, to in a.trace:
        assert (frm, action, to) in ALLOWED_EDGES, (action, frm, to)
