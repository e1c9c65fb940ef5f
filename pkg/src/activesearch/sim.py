"""Event-driven simulation of g agents asynchronously sensing and sharing results.

One episode is a single logical event loop: all agents issue their first task at
time zero (processed in agent order), and whenever a task finishes its
measurement joins the shared history, the policy ingests it, and the freed agent
immediately decides its next action from exactly the measurements finished so
far.  Simultaneous finishes are processed in agent-index order, each followed at
once by that agent's re-issue, so with unit durations the issuer of task t sees
exactly max(0, t - g) finished measurements.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError
from .grid import GridShape, Measurement, MeasurementSet, NoiseModel, SparseSignal, observe


@dataclass(frozen=True)
class DurationModel:
    """Task-duration law: deterministic value, uniform(low, high), or exponential(rate)."""

    kind: str
    value: float = 1.0
    low: float = 0.5
    high: float = 1.5
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("deterministic", "uniform", "exponential"):
            raise InvalidParameterError(f"unknown duration kind {self.kind!r}")
        if self.kind == "deterministic" and self.value <= 0:
            raise InvalidParameterError("duration must be > 0")
        if self.kind == "uniform" and not (0 < self.low <= self.high):
            raise InvalidParameterError("uniform durations need 0 < low <= high")
        if self.kind == "exponential" and self.rate <= 0:
            raise InvalidParameterError("exponential rate must be > 0")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "deterministic":
            return self.value
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        # exponential draws can be arbitrarily small but stay strictly positive
        return float(max(rng.exponential(1.0 / self.rate), 1e-12))

    @classmethod
    def parse(cls, text: str) -> "DurationModel":
        """Parse 'det', 'det:v', 'unif:a,b', or 'exp:rate'."""
        head, _, tail = text.partition(":")
        if head == "det":
            return cls("deterministic", value=float(tail) if tail else 1.0)
        if head == "unif":
            lo, hi = (float(v) for v in tail.split(","))
            return cls("uniform", low=lo, high=hi)
        if head == "exp":
            return cls("exponential", rate=float(tail))
        raise InvalidParameterError(f"cannot parse duration spec {text!r}")


@dataclass(frozen=True)
class SearchEnvironment:
    """Ground truth bundle a policy is run against."""

    shape: GridShape
    signal: SparseSignal
    noise: NoiseModel


@dataclass(frozen=True)
class TraceEvent:
    type: str  # "issue" | "finish"
    t: int
    agent: int
    time: float
    offset: tuple[int, ...]
    extent: tuple[int, ...]
    y: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "type": self.type,
                "t": self.t,
                "agent": self.agent,
                "time": self.time,
                "action": {"offset": list(self.offset), "extent": list(self.extent)},
                "y": self.y,
            }
        )


@dataclass
class EpisodeTrace:
    """Ordered issue/finish events, the final shared history, and visibility snapshots."""

    events: list[TraceEvent] = field(default_factory=list)
    measurements: MeasurementSet = field(default_factory=MeasurementSet)
    visibility: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def visible_count_at_issue(self, t: int) -> int:
        return len(self.visibility[t])


def worst_case_visibility(t: int, g: int) -> int:
    """Cardinality of the least-informed feasible visible set when task t issues."""
    if t < 1:
        raise InvalidParameterError("t must be >= 1")
    return max(0, t - g)


def run_episode(
    env: SearchEnvironment,
    policy,
    g: int,
    T: int,
    durations: DurationModel | None = None,
    rng: np.random.Generator | None = None,
    on_complete: Optional[Callable[[int, MeasurementSet, object], None]] = None,
) -> EpisodeTrace:
    """Run one asynchronous episode until T measurements have completed.

    `on_complete(count, visible, policy)` fires after each finished measurement
    has been ingested (checkpointing hook).  Deterministic given the rng seed.
    """
    if g < 1 or T < 1:
        raise InvalidParameterError("g and T must be >= 1")
    if durations is None:
        durations = DurationModel("deterministic", value=1.0)
    if rng is None:
        raise InvalidParameterError("an explicit rng is required")

    trace = EpisodeTrace()
    visible = MeasurementSet()
    heap: list[tuple[float, int, int, int, object, float]] = []
    issued = 0
    finished = 0

    def issue(agent: int, now: float) -> None:
        nonlocal issued
        issued += 1
        t = issued
        decision = policy.decide(visible, rng)
        action = decision.action
        trace.visibility[t] = tuple(m.t for m in visible)
        trace.events.append(
            TraceEvent("issue", t, agent, now, action.offset, action.extent)
        )
        dur = durations.sample(rng)
        heapq.heappush(heap, (now + dur, agent, t, 0, action, now))

    for agent in range(min(g, T)):
        issue(agent, 0.0)

    while heap:
        finish_time, agent, t, _, action, issue_time = heapq.heappop(heap)
        y = observe(env.signal, action, env.noise, rng, env.shape)
        m = Measurement(
            action=action, y=y, t=t, agent_id=agent,
            issue_time=issue_time, finish_time=finish_time,
        )
        visible.append(m)
        policy.ingest(m, visible)
        finished += 1
        trace.events.append(
            TraceEvent("finish", t, agent, finish_time, action.offset, action.extent, y=y)
        )
        if on_complete is not None:
            on_complete(finished, visible, policy)
        if issued < T:
            issue(agent, finish_time)

    trace.measurements = visible
    return trace


def write_trace_jsonl(trace: EpisodeTrace, path: str) -> None:
    """One JSON event per line: {type, t, agent, time, action, y}."""
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace.events:
            fh.write(ev.to_json() + "\n")
