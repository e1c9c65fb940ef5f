"""Decision rules mapping the shared measurement history to the next sensing action.

Every policy exposes the same surface: `ingest` a newly finished measurement,
`decide` the next action from the currently visible history, and `recover` a
sparse-signal estimate from a history prefix.  Policies never see the ground
truth; when the environment is noiseless they still reason with a small floored
belief variance so their linear algebra stays well posed.

Tie-breaking is uniform everywhere: the action list is pre-sorted by (area,
offset), so the first maximal score wins - smallest region first, then lowest
offset - which keeps decision traces bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bayes
from .actions import ActionSet, RegionAction
from .bayes import (
    BlockHyper,
    LaplaceHyper,
    bsbl_em,
    default_block_hyper,
    draw_from_posterior as _draw_gaussian,
    gibbs_sample_laplace,
    lambda_plus_scores,
    laplace_em_map,
)
from .errors import InvalidParameterError
from .grid import GridShape, Measurement, MeasurementSet, SparseSignal, assemble
from .info import CONFIRM_THRESHOLD, PeelingState, peel_update

MIN_BELIEF_VAR = 1e-6
RECOVERY_THRESHOLD = 0.5  # midpoint between a unit target and zero
POLICY_NAMES = ("spats", "laplace-ts", "latsi", "rsi", "point", "random")


class _DesignCache:
    """Incrementally assembled (X, y) for an append-only measurement set.

    Keyed on the set's identity plus its last index, so replays over a fresh
    prefix object fall back to a full rebuild.
    """

    def __init__(self, shape: GridShape):
        self.shape = shape
        self._key = None
        self._X = np.zeros((16, shape.n))
        self._y = np.zeros(16)
        self._ts: list[int] = []

    def sync(self, visible: MeasurementSet) -> tuple[np.ndarray, np.ndarray]:
        m = len(visible)
        done = len(self._ts)
        stale = (
            self._key != id(visible)
            or m < done
            or (done > 0 and (m == 0 or visible[done - 1].t != self._ts[done - 1]))
        )
        if stale:
            self._key = id(visible)
            self._ts = []
            done = 0
        if m > self._X.shape[0]:
            grow = max(2 * self._X.shape[0], m)
            X_new = np.zeros((grow, self.shape.n))
            X_new[:done] = self._X[:done]
            y_new = np.zeros(grow)
            y_new[:done] = self._y[:done]
            self._X, self._y = X_new, y_new
        from .actions import to_dense

        for j in range(done, m):
            meas = visible[j]
            self._X[j] = to_dense(meas.action, self.shape)
            self._y[j] = meas.y
            self._ts.append(meas.t)
        return self._X[:m], self._y[:m]


@dataclass
class Decision:
    """Chosen action plus optional diagnostics for analysis and tests."""

    action: RegionAction
    index: int
    beta_star: Optional[np.ndarray] = None
    scores: Optional[np.ndarray] = None


def select_best(actions: ActionSet, scores: np.ndarray) -> int:
    """First maximal index; the action list's (area, offset) sort is the tie-break."""
    return int(np.argmax(scores))


def _support_estimate(shape: GridShape, beta_hat: np.ndarray) -> SparseSignal:
    support = frozenset(int(i) for i in np.flatnonzero(beta_hat >= RECOVERY_THRESHOLD))
    values = np.zeros(shape.n)
    values[list(support)] = 1.0
    return SparseSignal(values=values, support=support, k=len(support))


def region_mi_scores(
    posterior_weights: np.ndarray,
    actions: ActionSet,
    sigma2: float,
    quad_points: int = 1025,
) -> np.ndarray:
    """Mutual information of every region action under a one-sparse belief.

    For a rectangle the predictive mixture has at most two components (in-region
    mean w, out-of-region mean 0), so each action reduces to the pair
    (in-region mass p, separation w) and the entropy quadrature vectorizes.
    Agrees with `info.mutual_information` evaluated per action.
    """
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")
    sigma = math.sqrt(sigma2)
    dense = actions.dense_matrix()
    w_act = dense.max(axis=1)
    p_in = (dense > 0) @ posterior_weights
    out = np.zeros(len(actions))
    live = (p_in > 1e-300) & (p_in < 1.0 - 1e-300)
    if not np.any(live):
        return out
    p = p_in[live]
    sep = w_act[live] / sigma  # cluster separation in noise units
    span = 8.0

    def entropy_windows(zgrid: np.ndarray, p_, sep_) -> np.ndarray:
        # zgrid: (A, Q) in noise units; mixture (1-p) at 0, p at sep
        lp0 = np.log1p(-p_)[:, None] - 0.5 * zgrid**2
        lp1 = np.log(p_)[:, None] - 0.5 * (zgrid - sep_[:, None]) ** 2
        m = np.maximum(lp0, lp1)
        logp = m + np.log(np.exp(lp0 - m) + np.exp(lp1 - m)) - 0.5 * math.log(2 * math.pi)
        integ = np.where(np.isfinite(logp), -np.exp(logp) * logp, 0.0)
        return np.trapezoid(integ, zgrid, axis=1)

    q = max(quad_points, 33)
    h0 = np.empty(p.shape[0])
    merged = sep < 2 * span
    if np.any(merged):
        zg = np.linspace(np.full(merged.sum(), -span), sep[merged] + span, q).T
        h0[merged] = entropy_windows(zg, p[merged], sep[merged])
    if np.any(~merged):
        ps, ss = p[~merged], sep[~merged]
        zg1 = np.linspace(np.full(ss.shape[0], -span), np.full(ss.shape[0], span), q).T
        zg2 = np.linspace(ss - span, ss + span, q).T
        h0[~merged] = entropy_windows(zg1, ps, ss) + entropy_windows(zg2, ps, ss)
    # H(mixture) = log(sigma) + H0; H(noise) = log(sigma) + 0.5 log(2 pi e)
    out[live] = np.maximum(h0 - 0.5 * math.log(2 * math.pi * math.e), 0.0)
    return out


def blend_scores(info_scores: np.ndarray, reward_scores: np.ndarray, alpha: float) -> np.ndarray:
    """Normalized acquisition blend: I/mean(I) + alpha * reward/|mean(reward)|.

    The reward normalizer takes the absolute mean because the expected reward is
    non-positive; a signed divisor would invert its ordering.  A degenerate
    all-zero information term falls back to reward-only ranking (and vice versa).
    """
    if alpha < 0:
        raise InvalidParameterError(f"alpha must be >= 0, got {alpha}")
    mean_i = float(np.mean(info_scores))
    mean_r = abs(float(np.mean(reward_scores)))
    if mean_i <= 0:
        return reward_scores / mean_r if mean_r > 0 else np.zeros_like(reward_scores)
    blended = info_scores / mean_i
    if alpha > 0 and mean_r > 0:
        blended = blended + alpha * reward_scores / mean_r
    return blended


class SpatsPolicy:
    """Block-sparse Thompson sampling with a halving block length.

    The block length starts at n/g and halves after every g completed
    measurements (floored at 1).  At each new size every parent block hands its
    learned scale gamma to both children, so regions the EM has already cleared
    stay cleared across scales - re-initializing gamma instead resurrects them
    and destroys the bisection behavior.  The shared intra-block correlation is
    re-drawn as a Toeplitz r^|i-j| at the new length with the trial's r.

    gamma is floored at a fraction of the belief noise: a single sub-noise
    reading must not prune a block irreversibly, or targets whose first reading
    was unlucky can never be revisited.
    """

    name = "spats"

    def __init__(
        self,
        shape: GridShape,
        actions: ActionSet,
        sigma2: float,
        g: int,
        rng: np.random.Generator | None = None,
        em_iters: int = bayes.EM_ITERS,
    ):
        self.shape = shape
        self.actions = actions
        self.sigma2 = max(sigma2, MIN_BELIEF_VAR)
        self.g = max(1, int(g))
        self.em_iters = em_iters
        self.gamma_floor = 0.05 * self.sigma2
        # near-unity correlation: one region reading then pins a whole block,
        # which is what makes halving behave like bisection
        self.corr = float(rng.uniform(0.98, 0.999)) if rng is not None else 0.99
        self.completed = 0
        self.L = max(1, math.ceil(shape.n / self.g))
        self.hyper: BlockHyper = default_block_hyper(shape.n, self.L, corr=self.corr)
        self._dense_pad: dict[int, np.ndarray] = {}

    def _padded_actions(self, n_pad: int) -> np.ndarray:
        if n_pad not in self._dense_pad:
            dense = self.actions.dense_matrix()
            if n_pad > dense.shape[1]:
                dense = np.hstack([dense, np.zeros((dense.shape[0], n_pad - dense.shape[1]))])
            self._dense_pad[n_pad] = dense
        return self._dense_pad[n_pad]

    def ingest(self, m: Measurement, visible: MeasurementSet) -> None:
        self.completed += 1
        if self.completed % self.g == 0 and self.L > 1:
            old_L, old_gamma = self.L, self.hyper.gamma
            self.L = max(1, self.L // 2)
            base = default_block_hyper(self.shape.n, self.L, corr=self.corr)
            # each child block inherits the scale of the old block at its left edge
            parents = np.minimum(np.arange(base.M) * self.L // old_L, old_gamma.shape[0] - 1)
            inherited = old_gamma[parents]
            self.hyper = BlockHyper(
                gamma=np.maximum(inherited, self.gamma_floor), B=base.B, L=self.L
            )

    def decide(self, visible: MeasurementSet, rng: np.random.Generator) -> Decision:
        X, y = assemble(visible, self.shape)
        self.hyper, post = bsbl_em(
            X, y, self.sigma2, self.L, self.em_iters,
            init=self.hyper, gamma_floor=self.gamma_floor,
        )
        beta_star = _draw_gaussian(post, rng)  # the EM already solved this posterior
        n_pad = self.hyper.n_pad
        Xp = bayes._pad_design(X, n_pad)
        scores = lambda_plus_scores(
            beta_star, Xp, y, self._padded_actions(n_pad), self.sigma2,
            prior_cov_inv=self.hyper.inv_cov(),
        )
        idx = select_best(self.actions, scores)
        return Decision(self.actions[idx], idx, beta_star=beta_star[: self.shape.n], scores=scores)

    def recover(self, visible: MeasurementSet) -> SparseSignal:
        X, y = assemble(visible, self.shape)
        _, post = bsbl_em(X, y, self.sigma2, L=1, iters=self.em_iters)
        return _support_estimate(self.shape, post.mu[: self.shape.n])


class LaplaceTsPolicy:
    """Thompson sampling under the Laplace prior: Gibbs sample + expected-reward argmax.

    The EM-MAP fit of the history supplies the hyper state (and warm-starts the
    Gibbs chain); the reward's MAP operator uses the variance scales the E-step
    assigns to the current Thompson sample, tau = |beta*|/eta, so the chosen
    action concentrates where the sample puts signal.  With an uninformative
    sample this collapses to pure variance reduction.
    """

    name = "laplace-ts"

    def __init__(
        self,
        shape: GridShape,
        actions: ActionSet,
        sigma2: float,
        eta: float = 1.0,
        sweeps: int = bayes.GIBBS_SWEEPS,
        em_iters: int = bayes.EM_ITERS,
    ):
        self.shape = shape
        self.actions = actions
        self.sigma2 = max(sigma2, MIN_BELIEF_VAR)
        self.eta = eta
        self.sweeps = sweeps
        self.em_iters = em_iters
        self.hyper = LaplaceHyper(tau=np.zeros(shape.n), eta=eta)

    def ingest(self, m: Measurement, visible: MeasurementSet) -> None:
        pass

    def _sample(self, X, y, rng) -> np.ndarray:
        beta_hat = laplace_em_map(X, y, self.eta, self.sigma2, self.em_iters)
        self.hyper = LaplaceHyper(tau=np.abs(beta_hat) / self.eta, eta=self.eta)
        return gibbs_sample_laplace(
            X, y, self.eta, self.sigma2, self.sweeps, rng, init_tau=self.hyper.tau
        )

    def _reward_scores(self, X, y, beta_star) -> np.ndarray:
        return lambda_plus_scores(
            beta_star, X, y, self.actions.dense_matrix(), self.sigma2,
            U_diag=np.sqrt(np.abs(beta_star) / self.eta),
        )

    def decide(self, visible: MeasurementSet, rng: np.random.Generator) -> Decision:
        X, y = assemble(visible, self.shape)
        beta_star = self._sample(X, y, rng)
        scores = self._reward_scores(X, y, beta_star)
        idx = select_best(self.actions, scores)
        return Decision(self.actions[idx], idx, beta_star=beta_star, scores=scores)

    def recover(self, visible: MeasurementSet) -> SparseSignal:
        X, y = assemble(visible, self.shape)
        beta_hat = laplace_em_map(X, y, self.eta, self.sigma2, self.em_iters)
        return _support_estimate(self.shape, beta_hat)


class RsiPolicy:
    """Deterministic mutual-information maximizer over a peeled one-sparse belief.

    The baseline is target-count aware: peeling stops after k confirmations so
    exclusion evidence cannot manufacture extra targets once all are found.
    """

    name = "rsi"

    def __init__(
        self,
        shape: GridShape,
        actions: ActionSet,
        sigma2: float,
        k: int | None = None,
        threshold: float = CONFIRM_THRESHOLD,
        quad_points: int = 1025,
    ):
        self.shape = shape
        self.actions = actions
        self.sigma2 = max(sigma2, MIN_BELIEF_VAR)
        self.quad_points = quad_points
        self.peel = PeelingState.fresh(shape.n, threshold=threshold, max_found=k)

    def ingest(self, m: Measurement, visible: MeasurementSet) -> None:
        self.peel = self.peel.ingest(m, self.sigma2, self.shape)
        self.peel = peel_update(self.peel, self.shape)

    def decide(self, visible: MeasurementSet, rng: np.random.Generator | None = None) -> Decision:
        scores = region_mi_scores(
            self.peel.posterior.weights(), self.actions, self.sigma2, self.quad_points
        )
        idx = select_best(self.actions, scores)
        return Decision(self.actions[idx], idx, scores=scores)

    def recover(self, visible: MeasurementSet) -> SparseSignal:
        support = set(self.peel.found)
        if not self.peel.exhausted:
            w = self.peel.posterior.weights()
            support |= {int(i) for i in np.flatnonzero(w >= self.peel.threshold)}
        values = np.zeros(self.shape.n)
        values[list(support)] = 1.0
        return SparseSignal(values=values, support=frozenset(support), k=len(support))


class LatsiPolicy(LaplaceTsPolicy):
    """Laplace-TS reward blended with the one-sparse mutual information.

    Scores are R+ = I/mean(I) + alpha * lambda+/|mean(lambda+)|; the same peeled
    belief as the mutual-information baseline supplies the information term.
    """

    name = "latsi"

    def __init__(
        self,
        shape: GridShape,
        actions: ActionSet,
        sigma2: float,
        alpha: float = 1.0,
        eta: float = 1.0,
        sweeps: int = bayes.GIBBS_SWEEPS,
        em_iters: int = bayes.EM_ITERS,
        quad_points: int = 1025,
    ):
        super().__init__(shape, actions, sigma2, eta=eta, sweeps=sweeps, em_iters=em_iters)
        if alpha < 0:
            raise InvalidParameterError(f"alpha must be >= 0, got {alpha}")
        self.alpha = alpha
        self.quad_points = quad_points
        self.peel = PeelingState.fresh(shape.n)

    def ingest(self, m: Measurement, visible: MeasurementSet) -> None:
        self.peel = self.peel.ingest(m, self.sigma2, self.shape)
        self.peel = peel_update(self.peel, self.shape)

    def decide(self, visible: MeasurementSet, rng: np.random.Generator) -> Decision:
        X, y = assemble(visible, self.shape)
        beta_star = self._sample(X, y, rng)
        reward = self._reward_scores(X, y, beta_star)
        info_scores = region_mi_scores(
            self.peel.posterior.weights(), self.actions, self.sigma2, self.quad_points
        )
        scores = blend_scores(info_scores, reward, self.alpha)
        idx = select_best(self.actions, scores)
        return Decision(self.actions[idx], idx, beta_star=beta_star, scores=scores)


class PointSweepPolicy:
    """Exhaustive single-cell sweep; concurrent agents take consecutive cells."""

    name = "point"

    def __init__(self, shape: GridShape, actions: ActionSet, sigma2: float, eta: float = 1.0):
        self.shape = shape
        self.actions = actions
        self.sigma2 = max(sigma2, MIN_BELIEF_VAR)
        self.eta = eta
        self.cursor = 0
        if len(actions) < shape.n or any(actions[i].area != 1 for i in range(shape.n)):
            raise InvalidParameterError("point sweep requires the single-cell actions")

    def ingest(self, m: Measurement, visible: MeasurementSet) -> None:
        pass

    def decide(self, visible: MeasurementSet, rng: np.random.Generator | None = None) -> Decision:
        idx = self.cursor % self.shape.n
        self.cursor += 1
        return Decision(self.actions[idx], idx)

    def recover(self, visible: MeasurementSet) -> SparseSignal:
        X, y = assemble(visible, self.shape)
        beta_hat = laplace_em_map(X, y, self.eta, self.sigma2)
        return _support_estimate(self.shape, beta_hat)


class RandomPointPolicy(PointSweepPolicy):
    """Uniform-random single-cell baseline."""

    name = "random"

    def decide(self, visible: MeasurementSet, rng: np.random.Generator = None) -> Decision:
        idx = int(rng.integers(self.shape.n))
        return Decision(self.actions[idx], idx)


def make_policy(
    name: str,
    shape: GridShape,
    actions: ActionSet,
    sigma2: float,
    g: int = 1,
    alpha: float = 1.0,
    eta: float = 1.0,
    k: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Construct a policy by CLI name.  Only the RSI baseline consumes k."""
    if name == "spats":
        return SpatsPolicy(shape, actions, sigma2, g=g, rng=rng)
    if name == "laplace-ts":
        return LaplaceTsPolicy(shape, actions, sigma2, eta=eta)
    if name == "latsi":
        return LatsiPolicy(shape, actions, sigma2, alpha=alpha, eta=eta)
    if name == "rsi":
        return RsiPolicy(shape, actions, sigma2, k=k)
    if name == "point":
        return PointSweepPolicy(shape, actions, sigma2, eta=eta)
    if name == "random":
        return RandomPointPolicy(shape, actions, sigma2, eta=eta)
    raise InvalidParameterError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
