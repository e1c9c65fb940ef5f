#!/usr/bin/env python3
"""Closed-form regret analytics and their Monte-Carlo verification game.

Run:  python3 demos/demo_regret_bounds.py
"""

import numpy as np

from activesearch import (
    bound_regret_1sparse,
    bound_regret_block,
    bound_regret_multi,
    lemma1_bound,
    mc_regret_game,
    regret_single_exact,
)
from activesearch.regret import dyadic_action_count

n = 128
count = dyadic_action_count(n)
print(f"n={n}, dyadic |X|={count}")

# The halving-block prior carries a much smaller bound than the true
# one-sparse prior at the same action-set size.
print("\nT    1-sparse bound   block bound")
for T in (1, 3, 7, 20):
    print(f"{T:3d}  {bound_regret_1sparse(n, T, count):14.3f}  "
          f"{bound_regret_block(n, T, count):11.3f}")

# Single-agent expected regret is exact; the asynchronous multi-agent bound
# adds at most Tn(2g-1)/n.
print("\ng    exact(g=1)   multi-agent bound")
for g in (1, 2, 4, 8):
    print(f"{g:2d}  {regret_single_exact(32, 32):10.3f}   "
          f"{bound_regret_multi(32, 32, g):10.3f}")

# The Monte-Carlo game plays the idealized policy the theorems analyze.
print("\nMonte-Carlo verification (n=32, T=32, 50k trials):")
for g in (1, 2, 4, 8):
    rng = np.random.default_rng(g)
    mean, se = mc_regret_game(32, 32, g, 50_000, rng)
    ref = regret_single_exact(32, 32) if g == 1 else bound_regret_multi(32, 32, g)
    rel = "= exact" if g == 1 else "<= bound"
    print(f"  g={g}: {mean:7.3f} +- {se:.3f}   {rel} {ref:.3f}")

# Availability of the optimal action in the shared history.
print("\np(x* visible at issue of step t), lower bound, n=32, g=4:")
for t in (4, 8, 16, 32):
    print(f"  t={t:2d}: {lemma1_bound(32, t, 4):.3f}")
