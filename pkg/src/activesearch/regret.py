"""Closed-form regret evaluators and the Monte-Carlo one-sparse verification game.

The closed forms cover: the information-ratio regret bounds for the one-sparse
and halving-block priors, the exact single-agent expected regret, its
multi-agent upper bound, and the lower bound on the probability that the
optimal action is already visible at step t.  The Monte-Carlo game plays the
idealized policy those formulas describe - explore uniformly among actions not
in the visible history, exploit the target once it is visible - under
unit-duration asynchrony, so the formulas can be checked empirically.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError


def _check_n_T(n: int, T: int) -> None:
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    if T < 0:
        raise InvalidParameterError(f"T must be >= 0, got {T}")


def dyadic_action_count(n: int) -> int:
    """|X| of the default dyadic scheme in one dimension (2n - 1 for powers of two)."""
    count, length = 0, 1
    while length <= n:
        count += -(-n // length)
        length *= 2
    return count


def bound_regret_1sparse(n: int, T: int, action_count: int) -> float:
    """Regret upper bound for Thompson sampling with the true one-sparse prior.

    sqrt(log|X| * sum_{t=1}^{min(T, n-1)} num_t / den_t) with
    num_t = (1 - t/n)(1 - 1/(n-t+1)) and
    den_t = ((n-t-1)/(n-t)) log((n-t)/(n-t-1)) + (1/(n-t)) log(n-t).
    The final summand (t = n-1) has a vanishing denominator and a positive
    numerator, so the bound degenerates to +inf once T reaches n-1.
    """
    _check_n_T(n, T)
    if action_count < 2:
        raise InvalidParameterError("action_count must be >= 2")
    total = 0.0
    for t in range(1, min(T, n - 1) + 1):
        num = (1.0 - t / n) * (1.0 - 1.0 / (n - t + 1))
        r = n - t
        den = 0.0 if r == 1 else ((r - 1) / r) * math.log(r / (r - 1))
        den += (1.0 / r) * math.log(r)
        if den == 0.0:
            return math.inf
        total += num / den
    return math.sqrt(math.log(action_count) * total)


def bound_regret_block(n: int, T: int, action_count: int) -> float:
    """Regret upper bound for the halving-block prior (n must be a power of two).

    sqrt(log|X| * sum_{t=1}^{min(T, log2 n)} (1 - 1/(n - sum_{t'<t} n/2^t'))^2 / log 2).
    """
    _check_n_T(n, T)
    if n & (n - 1):
        raise InvalidParameterError(f"n must be a power of two, got {n}")
    if action_count < 2:
        raise InvalidParameterError("action_count must be >= 2")
    total = 0.0
    for t in range(1, min(T, int(math.log2(n))) + 1):
        remaining = n - sum(n / 2**tp for tp in range(1, t))  # equals n / 2^(t-1)
        total += (1.0 - 1.0 / remaining) ** 2 / math.log(2.0)
    return math.sqrt(math.log(action_count) * total)


def regret_single_exact(n: int, T: int) -> float:
    """Exact expected regret of the idealized single-agent game: Tn - Tn(Tn+1)/(2n)."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    T_n = min(T, n)
    return T_n - T_n * (T_n + 1) / (2.0 * n)


def bound_regret_multi(n: int, T: int, g: int) -> float:
    """Upper bound for g asynchronous agents: adds Tn(2g-1)/n with Tn = min(T, n+g)."""
    if n < 1 or g < 1:
        raise InvalidParameterError("n and g must be >= 1")
    T_n = min(T, n + g)
    return T_n - T_n * (T_n + 1) / (2.0 * n) + T_n * (2.0 * g - 1.0) / n


def lemma1_bound(n: int, t: int, g: int) -> float:
    """Lower bound on p(optimal action already visible when task t issues).

    t < g: 1 - ((n-1)/n)^t; t >= g: 1 - (n-1)^(g-1) (n-t+2g-1) / n^g, evaluated
    in log space so large n does not underflow.  Clamped to [0, 1].
    """
    if n < 2 or t < 1 or g < 1:
        raise InvalidParameterError("need n >= 2, t >= 1, g >= 1")
    if t < g:
        miss = math.exp(t * (math.log(n - 1) - math.log(n)))
    else:
        lead = n - t + 2 * g - 1
        if lead <= 0:
            return 1.0
        log_miss = (g - 1) * math.log(n - 1) + math.log(lead) - g * math.log(n)
        miss = math.exp(log_miss)
    return min(max(1.0 - miss, 0.0), 1.0)


def _simulate_game(
    n: int, T: int, g: int, trials: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized idealized game.

    Returns (per-trial cumulative regret, trials x T availability matrix whose
    [i, t-1] entry says whether the target action was visible when task t issued).
    Visibility follows unit-duration asynchrony: task t sees tasks 1..t-g.
    """
    x_star = rng.integers(n, size=trials)
    rows = np.arange(trials)
    chosen = np.empty((trials, T), dtype=np.int64)
    seen = np.zeros((trials, n), dtype=bool)  # distinct actions among visible tasks
    star_visible = np.zeros(trials, dtype=bool)
    regret = np.zeros(trials)
    avail = np.zeros((trials, T), dtype=bool)
    for t in range(1, T + 1):
        reveal = t - g  # this task index has just finished for the issuing agent
        if reveal >= 1:
            prev = chosen[:, reveal - 1]
            seen[rows, prev] = True
            star_visible |= prev == x_star
        avail[:, t - 1] = star_visible
        keys = rng.random((trials, n))
        keys[seen] = -1.0
        explore = np.argmax(keys, axis=1)
        pick = np.where(star_visible, x_star, explore)
        chosen[:, t - 1] = pick
        regret += 1.0 - (pick == x_star)
    return regret, avail


def mc_regret_game(
    n: int, T: int, g: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Mean and standard error of cumulative regret in the idealized game."""
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    if T == 0:
        return 0.0, 0.0
    regret, _ = _simulate_game(n, T, g, trials, rng)
    se = float(regret.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(regret.mean()), se


def mc_availability(
    n: int, T: int, g: int, trials: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step empirical fraction (and SE) of trials with the target visible at issue."""
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    _, avail = _simulate_game(n, T, g, trials, rng)
    frac = avail.mean(axis=0)
    se = np.sqrt(frac * (1.0 - frac) / trials)
    return frac, se
