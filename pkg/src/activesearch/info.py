"""One-sparse hypothesis belief, mutual-information acquisition value, and peeling.

The belief places probability weights on the n hypotheses "beta = e_i" (unit
magnitude at cell i).  Observing (x, y) multiplies each weight by the Gaussian
likelihood N(y; x_i, sigma2); everything is kept in log space.  The acquisition
value of an action is the mutual information between the next observation and
the hypothesis, i.e. the entropy of the predictive Gaussian mixture minus the
per-hypothesis noise entropy.  For more than one target the belief is peeled:
once a cell is confirmed its contribution is subtracted from later likelihoods
and the belief restarts uniformly over the remaining cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .actions import RegionAction, to_dense
from .errors import InvalidParameterError
from .grid import GridShape, Measurement

CONFIRM_THRESHOLD = 0.99
QUAD_POINTS = 257
QUAD_SPAN_SIGMAS = 8.0
_QUAD_TOL = 1e-10
_QUAD_MAX_DOUBLINGS = 6


@dataclass(frozen=True)
class HypothesisPosterior:
    """Log-weights over the n one-sparse hypotheses; excluded cells carry -inf."""

    log_w: np.ndarray

    @classmethod
    def uniform(cls, n: int, exclude: frozenset[int] = frozenset()) -> "HypothesisPosterior":
        log_w = np.zeros(n)
        if exclude:
            log_w[list(exclude)] = -np.inf
        return cls(log_w=log_w - logsumexp(log_w))

    @property
    def n(self) -> int:
        return self.log_w.shape[0]

    def weights(self) -> np.ndarray:
        w = np.exp(self.log_w - logsumexp(self.log_w))
        return w / w.sum()

    def argmax(self) -> int:
        return int(np.argmax(self.log_w))


def update_hypothesis_posterior(
    post: HypothesisPosterior,
    m: Measurement,
    sigma2: float,
    shape: GridShape,
    found: frozenset[int] = frozenset(),
) -> HypothesisPosterior:
    """Multiply in the likelihood of one measurement and renormalize in log space.

    In peeling mode the unit contribution of every already-found cell is
    subtracted from the observation before the per-hypothesis likelihoods.
    """
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")
    x = to_dense(m.action, shape)
    y_eff = m.y - sum(x[f] for f in found)
    log_lik = -0.5 * (y_eff - x) ** 2 / sigma2
    log_w = post.log_w + log_lik
    return HypothesisPosterior(log_w=log_w - logsumexp(log_w))


def _mixture_entropy(means: np.ndarray, weights: np.ndarray, sigma: float, quad_points: int) -> float:
    """Differential entropy of sum_i w_i N(mean_i, sigma^2) by adaptive trapezoid.

    Integration runs over the union of windows mean +- QUAD_SPAN_SIGMAS * sigma
    (merged when they overlap), doubling the resolution until the value settles.
    """
    order = np.argsort(means)
    means, weights = means[order], weights[order]
    span = QUAD_SPAN_SIGMAS * sigma
    intervals: list[list[float]] = []
    for mval in means:
        lo, hi = mval - span, mval + span
        if intervals and lo <= intervals[-1][1]:
            intervals[-1][1] = max(intervals[-1][1], hi)
        else:
            intervals.append([lo, hi])
    log_w = np.log(weights)
    log_norm = -0.5 * math.log(2 * math.pi * sigma * sigma)

    def neg_plogp(ygrid: np.ndarray) -> np.ndarray:
        z = (ygrid[:, None] - means[None, :]) / sigma
        log_p = logsumexp(log_w[None, :] - 0.5 * z * z + log_norm, axis=1)
        return np.where(np.isfinite(log_p), -np.exp(log_p) * log_p, 0.0)

    total = 0.0
    for lo, hi in intervals:
        pts = max(quad_points, 33)
        prev = None
        for _ in range(_QUAD_MAX_DOUBLINGS + 1):
            ygrid = np.linspace(lo, hi, pts)
            val = float(np.trapezoid(neg_plogp(ygrid), ygrid))
            if prev is not None and abs(val - prev) < _QUAD_TOL * max(1.0, abs(val)):
                break
            prev = val
            pts = 2 * pts - 1
        total += val
    return total


def mutual_information(
    post: HypothesisPosterior,
    action: RegionAction,
    sigma2: float,
    shape: GridShape,
    quad_points: int = QUAD_POINTS,
    found: frozenset[int] = frozenset(),
) -> float:
    """I(beta; y | x) = H(mixture) - H(noise) >= 0 under the hypothesis belief."""
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")
    if quad_points < 33:
        raise InvalidParameterError("quad_points must be >= 33")
    x = to_dense(action, shape)
    w = post.weights()
    active = w > 0
    means = x[active]
    weights = w[active]
    # hypotheses sharing a predictive mean are one mixture component
    uniq, inverse = np.unique(np.round(means, 12), return_inverse=True)
    agg = np.zeros(uniq.shape[0])
    np.add.at(agg, inverse, weights)
    if uniq.shape[0] == 1:
        return 0.0
    sigma = math.sqrt(sigma2)
    h_mix = _mixture_entropy(uniq, agg, sigma, quad_points)
    h_cond = 0.5 * math.log(2 * math.pi * math.e * sigma2)
    return max(h_mix - h_cond, 0.0)


@dataclass(frozen=True)
class PeelingState:
    """Confirmed cells plus the active belief over the remaining ones.

    `max_found`, when set, caps the number of confirmations: the one-sparse
    model is only trustworthy while targets remain, and a capped state stops
    exclusion evidence from "confirming" a leftover cell after exhaustion.
    """

    found: frozenset[int]
    posterior: HypothesisPosterior
    threshold: float = CONFIRM_THRESHOLD
    min_obs: int = 1
    obs_since_reset: int = 0
    max_found: int | None = None

    @classmethod
    def fresh(
        cls, n: int, threshold: float = CONFIRM_THRESHOLD, max_found: int | None = None
    ) -> "PeelingState":
        return cls(
            found=frozenset(),
            posterior=HypothesisPosterior.uniform(n),
            threshold=threshold,
            min_obs=max(1, math.ceil(math.log2(max(n, 2)))),
            max_found=max_found,
        )

    @property
    def exhausted(self) -> bool:
        return self.max_found is not None and len(self.found) >= self.max_found

    def ingest(self, m: Measurement, sigma2: float, shape: GridShape) -> "PeelingState":
        post = update_hypothesis_posterior(self.posterior, m, sigma2, shape, found=self.found)
        return replace(self, posterior=post, obs_since_reset=self.obs_since_reset + 1)


def peel_update(state: PeelingState, shape: GridShape) -> PeelingState:
    """Confirm the argmax cell once its weight clears the threshold.

    Requires a minimum number of observations since the last reset so a couple
    of lucky noisy readings cannot confirm a cell.  On confirmation the belief
    resets to uniform over the remaining cells.  A state at its confirmation
    cap never confirms again.
    """
    if state.exhausted:
        return state
    w = state.posterior.weights()
    top = int(np.argmax(w))
    if state.obs_since_reset < state.min_obs or w[top] < state.threshold:
        return state
    found = state.found | {top}
    if len(found) >= shape.n:
        return replace(state, found=found, obs_since_reset=0)
    return replace(
        state,
        found=found,
        posterior=HypothesisPosterior.uniform(shape.n, exclude=found),
        obs_since_reset=0,
    )
