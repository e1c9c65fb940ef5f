"""Closed-form regret evaluators against independent high-precision re-implementations."""

import math

import mpmath
import numpy as np
import pytest

from activesearch.errors import InvalidParameterError
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


def mp_bound_1sparse(n, T, count):
    """Independent high-precision evaluation of the one-sparse regret bound."""
    total = mpmath.mpf(0)
    for t in range(1, min(T, n - 1) + 1):
        num = (1 - mpmath.mpf(t) / n) * (1 - mpmath.mpf(1) / (n - t + 1))
        r = n - t
        den = mpmath.mpf(0)
        if r > 1:
            den += mpmath.mpf(r - 1) / r * mpmath.log(mpmath.mpf(r) / (r - 1))
        den += mpmath.log(r) / r
        if den == 0:
            return mpmath.inf
        total += num / den
    return mpmath.sqrt(mpmath.log(count) * total)


def mp_bound_block(n, T, count):
    total = mpmath.mpf(0)
    for t in range(1, min(T, int(math.log2(n))) + 1):
        remaining = n - sum(mpmath.mpf(n) / 2**tp for tp in range(1, t))
        total += (1 - 1 / remaining) ** 2 / mpmath.log(2)
    return mpmath.sqrt(mpmath.log(count) * total)


def test_dyadic_count_formula():
    assert dyadic_action_count(128) == 255
    assert dyadic_action_count(4) == 7


@pytest.mark.parametrize("n,T,count", [(4, 1, 4), (8, 3, 15), (32, 20, 63), (128, 7, 255)])
def test_1sparse_matches_independent(n, T, count):
    ours = bound_regret_1sparse(n, T, count)
    ref = float(mp_bound_1sparse(n, T, count))
    assert ours == pytest.approx(ref, rel=1e-12)


def test_1sparse_frozen_value():
    # n=4, T=1, |X|=4: summand 0.883726..., bound sqrt(log(4) * summand)
    assert bound_regret_1sparse(4, 1, 4) == pytest.approx(1.1068402764944627, abs=1e-12)


def test_1sparse_empty_sum_and_monotone():
    assert bound_regret_1sparse(16, 0, 31) == 0.0
    vals = [bound_regret_1sparse(16, T, 31) for T in range(0, 15)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_1sparse_divergence_at_last_term():
    # the stated closed form has a vanishing denominator at t = n-1
    assert math.isinf(bound_regret_1sparse(8, 7, 15))
    assert math.isfinite(bound_regret_1sparse(8, 6, 15))


@pytest.mark.parametrize("n,T,count", [(2, 1, 3), (8, 3, 15), (128, 7, 255), (64, 100, 127)])
def test_block_matches_independent(n, T, count):
    ours = bound_regret_block(n, T, count)
    ref = float(mp_bound_block(n, T, count))
    assert ours == pytest.approx(ref, rel=1e-12)


def test_block_frozen_value():
    assert bound_regret_block(2, 1, 3) == pytest.approx(0.6294764691235798, abs=1e-12)
    assert bound_regret_block(2, 5, 3) == bound_regret_block(2, 1, 3)  # truncation at log2 n


def test_block_requires_power_of_two():
    with pytest.raises(InvalidParameterError):
        bound_regret_block(12, 4, 23)
    assert bound_regret_block(16, 0, 31) == 0.0


def test_block_below_1sparse_at_matched_action_count():
    count = dyadic_action_count(128)
    assert bound_regret_block(128, 7, count) < bound_regret_1sparse(128, 7, count)
    for n in (8, 16, 32, 64, 128, 256):
        c = dyadic_action_count(n)
        assert bound_regret_block(n, int(math.log2(n)), c) < bound_regret_1sparse(n, n - 1, c)
        # comparison at a finite horizon too: the divergent last term is excluded
        assert bound_regret_block(n, int(math.log2(n)), c) < bound_regret_1sparse(n, n - 2, c)


def test_single_exact_values():
    assert regret_single_exact(4, 4) == pytest.approx(1.5)
    assert regret_single_exact(4, 10) == pytest.approx(1.5)  # saturation at T_n = n
    for n in (5, 32):
        assert regret_single_exact(n, 1) == pytest.approx(1 - 1 / n)
    assert regret_single_exact(32, 32) == pytest.approx(15.5)


def test_multi_bound_values_and_gap():
    # g=1 exceeds the exact single-agent value by exactly T_n/n while T <= n
    for n, T in ((16, 10), (32, 32), (64, 40)):
        gap = bound_regret_multi(n, T, 1) - regret_single_exact(n, T)
        assert gap == pytest.approx(min(T, n) / n, abs=1e-12)
    T_n = 128
    expected = T_n - T_n * (T_n + 1) / 256 + T_n * 7 / 128
    assert bound_regret_multi(128, 128, 4) == pytest.approx(expected)


def test_multi_bound_dominates_single_on_grid():
    for n in (4, 8, 16, 32, 64):
        for T in range(1, 129, 7):
            for g in range(1, 9):
                assert bound_regret_multi(n, T, g) >= regret_single_exact(n, T) - 1e-12


def test_lemma1_values():
    assert lemma1_bound(10, 1, 1) == 0.0
    assert lemma1_bound(4, 2, 4) == pytest.approx(0.4375)
    assert lemma1_bound(16, 11, 3) == pytest.approx(1 - 15**2 * (16 - 11 + 5) / 16**3)


def test_lemma1_range_and_branch_monotonicity():
    # in [0,1] everywhere; nondecreasing within each branch (the closed form
    # drops discontinuously at the t = g branch switch for g >= 2)
    for n in (8, 16, 64):
        for g in (1, 2, 4, 8):
            vals = [lemma1_bound(n, t, g) for t in range(1, n + g + 1)]
            assert all(0.0 <= v <= 1.0 for v in vals)
            pre = vals[: max(g - 1, 0)]
            post = vals[max(g - 1, 0):]
            assert all(b >= a - 1e-12 for a, b in zip(pre, pre[1:]))
            assert all(b >= a - 1e-12 for a, b in zip(post, post[1:]))


def test_lemma1_large_n_log_space():
    v = lemma1_bound(10**6, 50, 4)
    assert 0.0 <= v <= 1.0


def test_mc_game_zero_horizon(rng):
    assert mc_regret_game(16, 0, 1, 100, rng) == (0.0, 0.0)


def test_mc_game_single_agent_matches_exact(rng):
    for n in (8, 16, 32):
        for T in (n // 2, n, 2 * n):
            mean, se = mc_regret_game(n, T, 1, 20_000, rng)
            assert abs(mean - regret_single_exact(n, T)) <= 3 * se


def test_mc_game_multi_agent_below_bound(rng):
    for n in (8, 16, 32):
        for g in (2, 4, 8):
            for T in (n // 2, n, 2 * n):
                mean, se = mc_regret_game(n, T, g, 20_000, rng)
                assert mean <= bound_regret_multi(n, T, g) + 3 * se


def test_mc_availability_blind_region_exact(rng):
    # while only blind picks are visible (t <= 2g) availability is 1-((n-1)/n)^(t-g)
    n, g, trials = 16, 3, 40_000
    frac, se = mc_availability(n, 2 * g, g, trials, rng)
    for t in range(1, 2 * g + 1):
        expect = 0.0 if t <= g else 1 - ((n - 1) / n) ** (t - g)
        assert abs(frac[t - 1] - expect) <= 4 * max(se[t - 1], 1e-4)
