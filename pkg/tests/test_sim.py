import json

import numpy as np
import pytest

from activesearch.actions import enumerate_actions
from activesearch.errors import InvalidParameterError
from activesearch.grid import GridShape, NoiseModel, generate_signal
from activesearch.policies import PointSweepPolicy, RandomPointPolicy
from activesearch.sim import (
    DurationModel,
    SearchEnvironment,
    run_episode,
    worst_case_visibility,
    write_trace_jsonl,
)


def make_env(n=16, k=1, sigma2=0.0, seed=0):
    shape = GridShape([n])
    rng = np.random.default_rng(seed)
    signal = generate_signal(shape, k, rng)
    return SearchEnvironment(shape, signal, NoiseModel(sigma2)), shape, rng


def point_policy(shape, sigma2=0.0):
    return PointSweepPolicy(shape, enumerate_actions(shape, "dyadic"), sigma2)


def test_worst_case_visibility_examples():
    assert worst_case_visibility(4, 3) == 1
    assert worst_case_visibility(2, 3) == 0
    assert worst_case_visibility(3, 3) == 0
    assert worst_case_visibility(11, 3) == 8
    with pytest.raises(InvalidParameterError):
        worst_case_visibility(0, 3)


def test_unit_duration_visibility_exact():
    env, shape, rng = make_env()
    g, T = 3, 20
    trace = run_episode(env, point_policy(shape), g=g, T=T, rng=rng)
    for t in range(1, T + 1):
        assert len(trace.visibility[t]) == worst_case_visibility(t, g)
    assert len(trace.measurements) == T


def test_single_agent_sequential_visibility():
    env, shape, rng = make_env()
    trace = run_episode(env, point_policy(shape), g=1, T=10, rng=rng)
    for t in range(1, 11):
        assert trace.visibility[t] == tuple(range(1, t))


def test_stochastic_durations_mean_visibility():
    g, T, episodes = 4, 24, 1000
    counts = np.zeros((episodes, T))
    for e in range(episodes):
        env, shape, rng = make_env(seed=e)
        trace = run_episode(
            env, point_policy(shape), g=g, T=T,
            durations=DurationModel("uniform", low=0.5, high=1.5), rng=rng,
        )
        counts[e] = [len(trace.visibility[t]) for t in range(1, T + 1)]
    means = counts.mean(axis=0)
    for t in range(2 * g, T + 1):
        assert abs(means[t - 1] - (t - g)) <= 1.0


def test_visibility_subset_of_finished():
    env, shape, rng = make_env()
    trace = run_episode(
        env, point_policy(shape), g=3, T=18,
        durations=DurationModel("exponential", rate=1.0), rng=rng,
    )
    issue_time = {ev.t: ev.time for ev in trace.events if ev.type == "issue"}
    finish_time = {m.t: m.finish_time for m in trace.measurements}
    for t, visible in trace.visibility.items():
        for v in visible:
            assert finish_time[v] <= issue_time[t] + 1e-12


def test_agent_inflight_at_most_one():
    env, shape, rng = make_env()
    trace = run_episode(
        env, point_policy(shape), g=3, T=15,
        durations=DurationModel("uniform", low=0.2, high=2.0), rng=rng,
    )
    open_tasks = set()
    for ev in trace.events:
        if ev.type == "issue":
            assert ev.agent not in open_tasks
            open_tasks.add(ev.agent)
        else:
            open_tasks.discard(ev.agent)


def test_bit_identical_traces():
    def run_once():
        env, shape, rng = make_env(seed=11)
        return run_episode(
            env, point_policy(shape), g=2, T=12,
            durations=DurationModel("exponential", rate=2.0), rng=rng,
        )

    t1, t2 = run_once(), run_once()
    assert t1.events == t2.events
    assert t1.visibility == t2.visibility


def test_random_policy_uses_episode_rng_deterministically():
    def run_once():
        env, shape, rng = make_env(seed=3)
        pol = RandomPointPolicy(shape, enumerate_actions(shape, "dyadic"), 0.0)
        return run_episode(env, pol, g=2, T=10, rng=rng)

    assert run_once().events == run_once().events


def test_duration_model_parse():
    assert DurationModel.parse("det").value == 1.0
    assert DurationModel.parse("det:2.5").value == 2.5
    dm = DurationModel.parse("unif:0.5,1.5")
    assert (dm.low, dm.high) == (0.5, 1.5)
    assert DurationModel.parse("exp:3").rate == 3.0
    with pytest.raises(InvalidParameterError):
        DurationModel.parse("gamma:1")
    with pytest.raises(InvalidParameterError):
        DurationModel("deterministic", value=0.0)


def test_durations_strictly_positive(rng):
    for dm in (DurationModel("uniform", low=0.1, high=0.2),
               DurationModel("exponential", rate=100.0)):
        for _ in range(500):
            assert dm.sample(rng) > 0


def test_trace_jsonl_round_trip(tmp_path):
    env, shape, rng = make_env()
    trace = run_episode(env, point_policy(shape), g=2, T=6, rng=rng)
    path = tmp_path / "trace.jsonl"
    write_trace_jsonl(trace, str(path))
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == len(trace.events)
    finishes = [ev for ev in lines if ev["type"] == "finish"]
    assert len(finishes) == 6
    assert all(set(ev) == {"type", "t", "agent", "time", "action", "y"} for ev in lines)


def test_invalid_episode_params():
    env, shape, rng = make_env()
    with pytest.raises(InvalidParameterError):
        run_episode(env, point_policy(shape), g=0, T=5, rng=rng)
    with pytest.raises(InvalidParameterError):
        run_episode(env, point_policy(shape), g=1, T=0, rng=rng)
