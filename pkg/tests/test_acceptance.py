"""Acceptance suite: one test per criterion, each printing its pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines.  The slow multi-policy sweeps (criteria 5-10) are marked `slow`
but run by default; deselect with `-m "not slow"` for a quick pass over the
arithmetic criteria.
"""

import math
import time

import numpy as np
import pytest

from activesearch.actions import enumerate_actions
from activesearch.experiments import ExperimentConfig, emit_results, run_sweep
from activesearch.grid import GridShape, NoiseModel, generate_signal
from activesearch.policies import RsiPolicy, SpatsPolicy, make_policy
from activesearch.regret import (
    bound_regret_1sparse,
    bound_regret_block,
    bound_regret_multi,
    dyadic_action_count,
    lemma1_bound,
    mc_availability,
    mc_regret_game,
    regret_single_exact,
)
from activesearch.sim import SearchEnvironment, run_episode
from activesearch.experiments import full_recovery

slow = pytest.mark.slow


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {num:2d}] {status}: {name} {detail}")
    return ok


def bands_overlap(m1, s1, m2, s2, width):
    lo1, hi1 = m1 - width * s1, m1 + width * s1
    lo2, hi2 = m2 - width * s2, m2 + width * s2
    return (lo1 <= hi2) & (lo2 <= hi1)


def test_criterion_1_regret_equality():
    t0 = time.time()
    rng = np.random.default_rng(101)
    mean, se = mc_regret_game(32, 32, 1, 100_000, rng)
    target = regret_single_exact(32, 32)
    ok = abs(mean - target) <= 3 * se
    elapsed = time.time() - t0
    assert report(1, "Theorem 2 Eq.(5) equality",
                  ok and elapsed < 30,
                  f"mc={mean:.4f}+-{se:.4f} exact={target:.4f} t={elapsed:.1f}s")


def test_criterion_2_multi_agent_bound():
    t0 = time.time()
    details = []
    ok = True
    for g in (2, 4, 8):
        rng = np.random.default_rng(200 + g)
        mean, se = mc_regret_game(32, 32, g, 100_000, rng)
        bound = bound_regret_multi(32, 32, g)
        ok &= mean <= bound + 3 * se
        details.append(f"g={g}:{mean:.2f}<={bound:.2f}")
    elapsed = time.time() - t0
    assert report(2, "Theorem 2 Eq.(6) upper bound",
                  ok and elapsed < 120, f"{' '.join(details)} t={elapsed:.1f}s")


def test_criterion_3_bound_ordering():
    t0 = time.time()
    ok = True
    for n in (8, 16, 32, 64, 128, 256):
        count = dyadic_action_count(n)
        block = bound_regret_block(n, n - 1, count)
        one = bound_regret_1sparse(n, n - 1, count)
        ok &= block < one
        # the one-sparse form diverges at T = n-1; check finite horizons too
        ok &= block < bound_regret_1sparse(n, n - 2, count)
        ok &= bound_regret_block(n, int(math.log2(n)), count) < bound_regret_1sparse(
            n, n - 2, count
        )
    elapsed = time.time() - t0
    assert report(3, "Theorem 1 block < 1-sparse bound", ok and elapsed < 1.0,
                  f"n in [8,256], t={elapsed:.2f}s")


def test_criterion_4_lemma1_consistency():
    # Implemented exactly as stated - every step t of the idealized game - and
    # expected to FAIL: the paper's closed form is not a valid lower bound on
    # its own game for mid-range t (see the decisions ledger for the analysis).
    t0 = time.time()
    n, trials = 16, 10_000
    worst = (0.0, None)
    ok = True
    for g in (2, 4):
        rng = np.random.default_rng(400 + g)
        frac, se = mc_availability(n, n + g, g, trials, rng)
        for t in range(1, n + g + 1):
            bound = lemma1_bound(n, t, g)
            slack = frac[t - 1] - (bound - 3 * se[t - 1])
            if slack < worst[0]:
                worst = (slack, (g, t))
            ok &= slack >= 0
    elapsed = time.time() - t0
    assert report(4, "Lemma 1 availability lower bound", ok,
                  f"worst violation {worst[0]:.4f} at (g,t)={worst[1]}, t={elapsed:.1f}s")


@slow
def test_criterion_5_laplace_ts_failure_mode():
    t0 = time.time()
    base = dict(dims=(32,), k=1, sigma2=1.0, t_grid=(4, 8, 16, 24, 32),
                g=1, trials=50, seed=505)
    lap = run_sweep(ExperimentConfig(policy="laplace-ts", **base))
    point = run_sweep(ExperimentConfig(policy="point", **base))
    overlap = bands_overlap(lap.mean, lap.std_error, point.mean, point.std_error, 2.0)
    ok = bool(np.all(overlap))
    elapsed = time.time() - t0
    assert report(5, "Laplace-TS on par with point baseline",
                  ok and elapsed < 600,
                  f"laplace={np.round(lap.mean,2)} point={np.round(point.mean,2)} "
                  f"t={elapsed:.0f}s")


@slow
def test_criterion_6_spats_binary_search():
    t0 = time.time()
    n, trials, T = 64, 200, 48
    firsts = []
    for s in range(trials):
        shape = GridShape([n])
        rng = np.random.default_rng(np.random.SeedSequence(entropy=606, spawn_key=(s,)))
        actions = enumerate_actions(shape, "dyadic")
        signal = generate_signal(shape, 1, rng)
        env = SearchEnvironment(shape, signal, NoiseModel(0.0))
        policy = SpatsPolicy(shape, actions, 0.0, 1, rng=rng)
        first = [np.inf]

        def cb(count, visible, p):
            if first[0] == np.inf and full_recovery(p.recover(visible), signal):
                first[0] = count

        run_episode(env, policy, g=1, T=T, rng=rng, on_complete=cb)
        firsts.append(first[0])
    med = float(np.median(firsts))
    target = 2 * math.log2(n) + 4
    elapsed = time.time() - t0
    ok = med <= target and elapsed < 600
    assert report(6, "SPATS noiseless binary-search budget", ok,
                  f"median={med} <= {target}, t={elapsed:.0f}s")


def _t50_pair(policy, seed, t_grid, g_values, trials=50, k=5, sigma2=1.0):
    out = {}
    for g in g_values:
        cfg = ExperimentConfig(dims=(8, 16), k=k, sigma2=sigma2, policy=policy,
                               t_grid=t_grid, g=g, trials=trials, seed=seed)
        curve = run_sweep(cfg)
        out[g] = (curve.t50(), curve)
    return out


@slow
def test_criterion_7_spats_multi_agent_scaling():
    t0 = time.time()
    grid = (64, 128, 192, 256, 320, 384, 448, 512)
    res = _t50_pair("spats", 707, grid, (1, 4))
    t50_1, c1 = res[1]
    t50_4, c4 = res[4]
    ok = math.isfinite(t50_1) and math.isfinite(t50_4) and 0.8 <= t50_4 / t50_1 <= 1.2
    elapsed = time.time() - t0
    assert report(7, "SPATS multi-agent total-measurement scaling",
                  ok and elapsed < 3600,
                  f"T50(g=1)={t50_1:.0f} T50(g=4)={t50_4:.0f} "
                  f"ratio={t50_4 / t50_1 if math.isfinite(t50_1) else float('nan'):.2f} "
                  f"curves g1={np.round(c1.mean,2)} g4={np.round(c4.mean,2)} t={elapsed:.0f}s")


@slow
def test_criterion_8_rsi_multi_agent_degradation():
    t0 = time.time()
    grid = (64, 128, 192, 256, 320, 384, 448, 512)
    res = _t50_pair("rsi", 808, grid, (1, 4))
    t50_1, c1 = res[1]
    t50_4, c4 = res[4]
    ok = math.isfinite(t50_1) and t50_4 > t50_1
    elapsed = time.time() - t0
    assert report(8, "RSI degrades with more agents", ok and elapsed < 1800,
                  f"T50(g=1)={t50_1:.0f} T50(g=4)={t50_4:.0f} "
                  f"curves g1={np.round(c1.mean,2)} g4={np.round(c4.mean,2)} t={elapsed:.0f}s")


@slow
def test_criterion_9_rsi_noiseless_binary_descent():
    t0 = time.time()
    n, trials = 64, 50
    budget = int(math.log2(n)) + 1
    ok = True
    for s in range(trials):
        shape = GridShape([n])
        rng = np.random.default_rng(np.random.SeedSequence(entropy=909, spawn_key=(s,)))
        actions = enumerate_actions(shape, "dyadic")
        signal = generate_signal(shape, 1, rng)
        env = SearchEnvironment(shape, signal, NoiseModel(0.0))
        policy = RsiPolicy(shape, actions, 0.0, k=1)
        run_episode(env, policy, g=1, T=budget, rng=rng)
        ok &= policy.peel.found == signal.support
    elapsed = time.time() - t0
    assert report(9, "RSI noiseless k=1 located within log2(n)+1", ok and elapsed < 60,
                  f"budget={budget}, trials={trials}, t={elapsed:.1f}s")


@slow
def test_criterion_10_latsi_alpha_robustness():
    t0 = time.time()
    grid = (24, 48, 96, 144, 192)
    curves = {}
    for alpha in (0.0, 0.1, 1.0, 10.0):
        cfg = ExperimentConfig(dims=(128,), k=5, sigma2=1.0, policy="latsi",
                               t_grid=grid, g=2, alpha=alpha, trials=50, seed=1010)
        curves[alpha] = run_sweep(cfg)
    alphas = list(curves)
    ok = True
    for i in range(len(alphas)):
        for j in range(i + 1, len(alphas)):
            a, b = curves[alphas[i]], curves[alphas[j]]
            ok &= bool(np.all(bands_overlap(a.mean, a.std_error, b.mean, b.std_error, 2.0)))
    elapsed = time.time() - t0
    detail = " ".join(f"a={a}:{np.round(c.mean,2)}" for a, c in curves.items())
    assert report(10, "LATSI alpha robustness", ok and elapsed < 3600,
                  f"{detail} t={elapsed:.0f}s")


def test_criterion_11_posterior_oracle_suite():
    t0 = time.time()
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q",
         "tests/test_bayes.py::test_posterior_matches_joint_conditioning",
         "tests/test_bayes.py::test_gibbs_matches_quadrature_oracle",
         "tests/test_bayes.py::test_em_matches_coordinate_descent_oracle",
         "tests/test_bayes.py::test_lambda_plus_monte_carlo_laplace_variant",
         "tests/test_bayes.py::test_lambda_plus_monte_carlo_block_variant",
         "tests/test_info.py::test_mi_monte_carlo_oracle"],
        capture_output=True, text=True,
    )
    ok = proc.returncode == 0
    elapsed = time.time() - t0
    assert report(11, "posterior oracle suite", ok and elapsed < 300,
                  f"t={elapsed:.0f}s"), proc.stdout + proc.stderr


def test_criterion_12_determinism(tmp_path):
    cfg = ExperimentConfig(dims=(16,), k=2, sigma2=1.0, policy="spats",
                           t_grid=(8, 16, 24), g=2, trials=8, seed=1212)
    p1 = emit_results([run_sweep(cfg)], str(tmp_path / "a"), formats=("csv",))[0]
    p2 = emit_results([run_sweep(cfg)], str(tmp_path / "b"), formats=("csv",))[0]
    ok = open(p1, "rb").read() == open(p2, "rb").read()
    assert report(12, "byte-identical sweep reruns", ok)
