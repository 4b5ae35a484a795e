"""Workload and performance metrics derived from a run's event log.

Response time per agent runs from its first request to its succeed event.
Manager workload is reported as emptiness queries and rectangle comparisons
per simulated second.  The violation rate is the fraction of region-time
pairs of accepted volumes whose owner failed to stay inside them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class IncompleteLogError(ValueError):
    """The log lacks the header or end records needed for a report."""


@dataclass
class MetricsReport:
    map: str
    n_agents: int
    strategy: str
    seed: int
    delay: float
    duration: float
    liveness: bool
    partial: bool
    response_time: dict[int, float] = field(default_factory=dict)
    max_response_time: float = math.nan
    avg_response_time: float = math.nan
    qe_per_s: float = 0.0
    rect_per_s: float = 0.0
    emptiness_queries: int = 0
    rects_checked: int = 0
    requests: int = 0
    rejections: int = 0
    violation_rate: float = 0.0
    violations: int = 0
    warnings: int = 0

    def to_jsonable(self) -> dict:
        return {
            "map": self.map,
            "n_agents": self.n_agents,
            "strategy": self.strategy,
            "seed": self.seed,
            "delay": self.delay,
            "duration": round(self.duration, 9),
            "liveness": self.liveness,
            "partial": self.partial,
            "response_time": {str(k): round(v, 9) for k, v in sorted(self.response_time.items())},
            "max_response_time": _round(self.max_response_time),
            "avg_response_time": _round(self.avg_response_time),
            "qe_per_s": _round(self.qe_per_s),
            "rect_per_s": _round(self.rect_per_s),
            "emptiness_queries": self.emptiness_queries,
            "rects_checked": self.rects_checked,
            "requests": self.requests,
            "rejections": self.rejections,
            "violation_rate": _round(self.violation_rate),
            "violations": self.violations,
            "warnings": self.warnings,
        }

    CSV_FIELDS = (
        "map,n_agents,strategy,seed,delay,duration,liveness,"
        "max_response_time,avg_response_time,qe_per_s,rect_per_s,"
        "requests,rejections,violation_rate,warnings"
    )

    def csv_row(self) -> str:
        return ",".join(
            str(v)
            for v in (
                self.map,
                self.n_agents,
                self.strategy,
                self.seed,
                self.delay,
                _round(self.duration),
                int(self.liveness),
                _round(self.max_response_time),
                _round(self.avg_response_time),
                _round(self.qe_per_s),
                _round(self.rect_per_s),
                self.requests,
                self.rejections,
                _round(self.violation_rate),
                self.warnings,
            )
        )


def _round(v: float):
    return round(v, 9) if isinstance(v, float) and math.isfinite(v) else v


def compute_metrics(records: list[dict], config) -> MetricsReport:
    """Aggregate one run's log into a report; flags partial logs."""
    header = next((r for r in records if r["kind"] == "header"), None)
    end = next((r for r in records if r["kind"] == "end"), None)
    partial = header is None or end is None

    first_request: dict[int, float] = {}
    succeed_at: dict[int, float] = {}
    accepted_pairs = 0
    violated_pairs = 0
    violations = 0
    requests = 0
    rejections = 0
    queries = 0
    rects = 0
    for r in records:
        kind = r["kind"]
        if kind == "send" and r["summary"] == "request":
            first_request.setdefault(r["from"], r["due"])
        elif kind == "succeed":
            succeed_at[r["from"]] = r["due"]
        elif kind == "decision":
            requests += 1
            data = r["data"]
            queries += data["queries"]
            rects += data["rects_checked"]
            if r["summary"] == "accept":
                accepted_pairs += data["pairs"]
            else:
                rejections += 1
        elif kind == "violate":
            violations += 1
            violated_pairs += 1

    if end is not None:
        duration = end["data"]["duration"]
        warnings = end["data"]["warnings"]
        liveness = end["data"]["liveness"]
    else:
        duration = max((r["due"] for r in records), default=0.0)
        warnings = 0
        liveness = False

    n_agents = config.n_agents
    liveness = liveness and len(succeed_at) == n_agents

    response = {
        i: succeed_at[i] - first_request[i]
        for i in succeed_at
        if i in first_request
    }
    report = MetricsReport(
        map=config.map,
        n_agents=n_agents,
        strategy=config.strategy,
        seed=config.seed,
        delay=config.delay,
        duration=duration,
        liveness=liveness,
        partial=partial,
        response_time=response,
        emptiness_queries=queries,
        rects_checked=rects,
        requests=requests,
        rejections=rejections,
        violations=violations,
        warnings=warnings,
    )
    if response:
        report.max_response_time = max(response.values())
        report.avg_response_time = sum(response.values()) / len(response)
    if duration > 0:
        report.qe_per_s = queries / duration
        report.rect_per_s = rects / duration
    if accepted_pairs > 0:
        report.violation_rate = violated_pairs / accepted_pairs
    return report
