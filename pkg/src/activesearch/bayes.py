"""Posterior machinery for the sensing model y = X beta + eps.

Three belief families share the Gaussian conditional posterior:

* a plain Gaussian prior (conjugate update),
* the Laplace prior realized as a Gaussian scale mixture with exponential
  hyper-priors on the per-entry variances tau_i (Gibbs sampling and an EM
  fixed-point for the MAP), and
* a block-sparse Gaussian prior diag(gamma) (x) B over equal-length blocks,
  fit by EM on (gamma, B).

The expected one-step reward lambda+ of sensing x is the negative expected
squared estimation error after appending (x, y), marginalized over y; it has a
closed form in terms of the one-measurement-extended MAP operator q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import InvalidParameterError, NumericalError

EM_ITERS = 30
EM_TOL = 1e-6
GIBBS_SWEEPS = 50
TAU_GUARD = 1e-12
GAMMA_FLOOR = 1e-10
B_JITTER = 1e-6


@dataclass
class GaussianPosterior:
    """Moments (mu, cov) of a Gaussian belief over beta."""

    mu: np.ndarray
    cov: np.ndarray

    @property
    def n(self) -> int:
        return self.mu.shape[0]


@dataclass
class LaplaceHyper:
    """Per-entry prior variances tau and the Laplace rate eta (sqrt(eta) = 1/b)."""

    tau: np.ndarray
    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidParameterError(f"eta must be > 0, got {self.eta}")
        if np.any(self.tau < 0):
            raise InvalidParameterError("tau must be >= 0 elementwise")


@dataclass
class BlockHyper:
    """Block-sparse prior: scales gamma per block, shared L x L correlation B."""

    gamma: np.ndarray
    B: np.ndarray
    L: int

    def __post_init__(self):
        if self.L < 1:
            raise InvalidParameterError(f"block length must be >= 1, got {self.L}")
        if self.B.shape != (self.L, self.L):
            raise InvalidParameterError(f"B must be {self.L}x{self.L}, got {self.B.shape}")
        if np.any(self.gamma < 0):
            raise InvalidParameterError("gamma must be >= 0 elementwise")

    @property
    def M(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_pad(self) -> int:
        return self.M * self.L

    def cov(self) -> np.ndarray:
        """Prior covariance Sigma0 = diag(gamma) (x) B, size n_pad x n_pad."""
        return np.kron(np.diag(self.gamma), self.B)

    def inv_cov(self) -> np.ndarray:
        """Sigma0^-1 = diag(1/gamma) (x) B^-1 with floored gamma."""
        g = np.maximum(self.gamma, GAMMA_FLOOR)
        try:
            B_inv = sla.inv(self.B)
        except sla.LinAlgError as e:
            raise NumericalError(f"block correlation B is singular: {e}") from e
        return np.kron(np.diag(1.0 / g), B_inv)


def _spd_factor(mat: np.ndarray, what: str):
    try:
        return sla.cho_factor(mat, lower=True, check_finite=False)
    except sla.LinAlgError as e:
        cond = np.linalg.cond(mat)
        raise NumericalError(f"{what} is not positive definite (cond={cond:.3e}): {e}") from e


def _cho_solve(cho, b):
    return sla.cho_solve(cho, b, check_finite=False)


def gaussian_posterior(
    X: np.ndarray,
    y: np.ndarray,
    sigma2: float,
    prior_cov: np.ndarray,
    prior_cov_inv: np.ndarray | None = None,
    gram: tuple[np.ndarray, np.ndarray] | None = None,
    validate: bool = True,
) -> GaussianPosterior:
    """Conjugate Gaussian update: Sigma = (Sigma0^-1 + X'X/s2)^-1, mu = Sigma X'y/s2.

    Computed via the Woodbury form when there are fewer rows than unknowns, so
    near-zero prior variances never get inverted.  A caller with an analytic
    prior inverse (block priors) can pass it to skip the factorization on the
    tall-design path; `gram` = (X'X, X'y) skips those products and
    `validate=False` skips the prior sanity checks (EM loops own their prior).
    Empty X returns the prior.
    """
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")
    n = prior_cov.shape[0]
    if validate:
        if not np.allclose(prior_cov, prior_cov.T, atol=1e-10):
            raise NumericalError("prior covariance is not symmetric")
        if np.any(np.diag(prior_cov) <= 0):
            cond = np.linalg.cond(prior_cov)
            raise NumericalError(f"prior covariance is singular (cond={cond:.3e})")
    m = X.shape[0]
    if m == 0:
        return GaussianPosterior(mu=np.zeros(n), cov=prior_cov.copy())
    if m < n:
        S = prior_cov @ X.T  # n x m
        cap = sigma2 * np.eye(m) + X @ S
        cho = _spd_factor(cap, "prior covariance (capacitance)")
        cov = prior_cov - S @ _cho_solve(cho, S.T)
        mu = S @ _cho_solve(cho, y)
    else:
        if prior_cov_inv is None:
            prior_cho = _spd_factor(prior_cov, "prior covariance")
            prior_cov_inv = _cho_solve(prior_cho, np.eye(n))
        XtX, Xty = gram if gram is not None else (X.T @ X, X.T @ y)
        A = prior_cov_inv + XtX / sigma2
        A_cho = _spd_factor(A, "posterior precision")
        cov = _cho_solve(A_cho, np.eye(n))
        mu = cov @ Xty / sigma2
    cov = 0.5 * (cov + cov.T)
    return GaussianPosterior(mu=mu, cov=cov)


def sample_inverse_gaussian(mean, shape, rng: np.random.Generator):
    """Draw from InverseGaussian(mean, shape) via the transform-with-rejection scheme.

    Accepts scalars or arrays (elementwise parameters); the classic chi-square
    transform followed by the size-biased coin flip (Michael, Schucany & Haas).
    """
    mean = np.asarray(mean, dtype=float)
    shape_p = np.asarray(shape, dtype=float)
    if np.any(mean <= 0) or np.any(shape_p <= 0):
        raise InvalidParameterError("inverse-Gaussian mean and shape must be > 0")
    scalar = mean.ndim == 0 and shape_p.ndim == 0
    mean, shape_p = np.broadcast_arrays(np.atleast_1d(mean), np.atleast_1d(shape_p))
    nu = rng.normal(size=mean.shape)
    w = nu * nu
    # small root of the chi-square transform, written cancellation-free:
    # x1 = m (sqrt(1+z) - 1) / (sqrt(1+z) + 1) with z = 4 lambda / (m w)
    mw = np.maximum(mean * w, 1e-300)
    root = np.sqrt(1.0 + 4.0 * shape_p / mw)
    x1 = mean * (root - 1.0) / (root + 1.0)
    x1 = np.maximum(x1, 1e-300)
    u = rng.uniform(size=mean.shape)
    accept = u <= mean / (mean + x1)
    out = np.where(accept, x1, mean * mean / x1)
    return float(out[0]) if scalar else out


def _sample_conditional_beta(
    X: np.ndarray, y: np.ndarray, sigma2: float, tau: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One exact draw from N(mu(tau), Sigma(tau)) without forming Sigma.

    Uses prior-perturbation sampling: beta0 ~ prior, y0 ~ likelihood at beta0,
    then a single capacitance solve maps (y - y0) back through the posterior.
    """
    n = tau.shape[0]
    beta0 = np.sqrt(tau) * rng.normal(size=n)
    m = X.shape[0]
    if m == 0:
        return beta0
    y0 = X @ beta0 + math.sqrt(sigma2) * rng.normal(size=m)
    S = X * tau[None, :]  # X diag(tau), m x n
    cap = sigma2 * np.eye(m) + S @ X.T
    cho = _spd_factor(cap, "Gibbs capacitance")
    return beta0 + S.T @ _cho_solve(cho, y - y0)


def gibbs_sample_laplace(
    X: np.ndarray,
    y: np.ndarray,
    eta: float,
    sigma2: float,
    sweeps: int = GIBBS_SWEEPS,
    rng: np.random.Generator | None = None,
    init_tau: np.ndarray | None = None,
) -> np.ndarray:
    """Posterior sample of beta under the Laplace prior via the scale-mixture Gibbs chain.

    Alternates beta ~ N(mu(tau), Sigma(tau)) with tau_i^-1 ~ InvGauss(sqrt(eta)/|beta_i|, eta)
    and returns the final beta draw.  Entries with |beta_i| below the guard get
    tau_i pinned to the guard instead of sampling with an infinite mean.
    """
    if sweeps < 1:
        raise InvalidParameterError("sweeps must be >= 1")
    if eta <= 0 or sigma2 <= 0:
        raise InvalidParameterError("eta and sigma2 must be > 0")
    if rng is None:
        raise InvalidParameterError("an explicit rng is required")
    n = X.shape[1]
    tau = np.full(n, 2.0 / eta) if init_tau is None else np.maximum(init_tau, TAU_GUARD)
    beta = np.zeros(n)
    for _ in range(sweeps):
        beta = _sample_conditional_beta(X, y, sigma2, tau, rng)
        small = np.abs(beta) < TAU_GUARD
        safe_beta = np.where(small, 1.0, np.abs(beta))
        inv_tau = sample_inverse_gaussian(math.sqrt(eta) / safe_beta, eta, rng)
        tau = np.where(small, TAU_GUARD, 1.0 / np.maximum(inv_tau, 1e-300))
    return beta


def laplace_em_map(
    X: np.ndarray,
    y: np.ndarray,
    eta: float,
    sigma2: float,
    iters: int = EM_ITERS,
    tol: float = EM_TOL,
) -> np.ndarray:
    """MAP estimate under the Laplace prior by the EM fixed point.

    Iterates tau = |beta|/eta then beta = mu(tau), with the U-form update
    Sigma = U (I + U X'X U / s2)^-1 U, U = diag(tau)^(1/2), so zero variances
    are never inverted.  Converges to the l1-penalized (lasso) MAP.
    """
    if iters < 1:
        raise InvalidParameterError("iters must be >= 1")
    n = X.shape[1]
    m = X.shape[0]
    beta = np.ones(n)  # nonzero start; the all-zero point is a degenerate fixed point
    if m == 0:
        return np.zeros(n)
    for _ in range(iters):
        tau = np.abs(beta) / eta
        u = np.sqrt(tau)
        V = X * u[None, :]  # X U
        w = u * (X.T @ y)
        if m < n:
            cap = sigma2 * np.eye(m) + V @ V.T
            cho = _spd_factor(cap, "EM capacitance")
            beta_new = u * (w - V.T @ _cho_solve(cho, V @ w)) / sigma2
        else:
            A = np.eye(n) + (V.T @ V) / sigma2
            cho = _spd_factor(A, "EM system")
            beta_new = u * _cho_solve(cho, w) / sigma2
        delta = np.max(np.abs(beta_new - beta))
        beta = beta_new
        if delta < tol:
            break
    return beta


def default_block_hyper(n: int, L: int, rng: np.random.Generator | None = None,
                        corr: float | None = None) -> BlockHyper:
    """Unit gamma and a Toeplitz correlation B_ij = r^|i-j| (r ~ U[0.7, 0.99])."""
    M = -(-n // L)  # ceil: zero-pads beta when L does not divide n
    if corr is None:
        corr = float(rng.uniform(0.7, 0.99)) if rng is not None and L > 1 else 0.9
    idx = np.arange(L)
    B = corr ** np.abs(idx[:, None] - idx[None, :])
    return BlockHyper(gamma=np.ones(M), B=B, L=L)


def _pad_design(X: np.ndarray, n_pad: int) -> np.ndarray:
    n = X.shape[1]
    if n == n_pad:
        return X
    return np.hstack([X, np.zeros((X.shape[0], n_pad - n))])


def bsbl_em(
    X: np.ndarray,
    y: np.ndarray,
    sigma2: float,
    L: int,
    iters: int = EM_ITERS,
    init: BlockHyper | None = None,
    tol: float = EM_TOL,
    gamma_floor: float = GAMMA_FLOOR,
) -> tuple[BlockHyper, GaussianPosterior]:
    """Block-sparse EM: alternate the Gaussian posterior with (gamma, B) updates.

    gamma_m = tr(B^-1 (Sigma^m + mu^m mu^m'))/L and B averages the gamma-scaled
    block second moments.  B is symmetrized, jittered, and trace-normalized each
    step (gamma absorbs the scale, so Sigma0 itself is unchanged); gamma is
    floored to keep the prior invertible.  A caller can raise `gamma_floor`
    (e.g. to a fraction of the noise variance) so weak evidence cannot prune a
    block irreversibly.  Returns hyper and posterior over the zero-padded space
    (padded entries are never sensed).
    """
    if iters < 1:
        raise InvalidParameterError("iters must be >= 1")
    hyper = init if init is not None else default_block_hyper(X.shape[1], L)
    if hyper.L != L:
        raise InvalidParameterError(f"init block length {hyper.L} does not match L={L}")
    gamma_floor = max(gamma_floor, GAMMA_FLOOR)
    Xp = _pad_design(X, hyper.n_pad)
    M, Lb = hyper.M, hyper.L
    gamma, B = np.maximum(hyper.gamma, gamma_floor), hyper.B.copy()
    grams = (Xp.T @ Xp, Xp.T @ y) if Xp.shape[0] >= hyper.n_pad else None

    def _estep(g, Bmat):
        h = BlockHyper(gamma=g, B=Bmat, L=Lb)
        inv = h.inv_cov() if Xp.shape[0] >= h.n_pad else None
        return gaussian_posterior(
            Xp, y, sigma2, h.cov(), prior_cov_inv=inv, gram=grams, validate=False
        )

    post = _estep(gamma, B)
    mu_prev = post.mu
    gamma_prev = gamma.copy()
    arange = np.arange(M)
    for _ in range(iters):
        # M-step from the current posterior moments
        mu_blk = post.mu.reshape(M, Lb)
        cov_blk = post.cov.reshape(M, Lb, M, Lb)[arange, :, arange, :]
        moments = cov_blk + mu_blk[:, :, None] * mu_blk[:, None, :]
        B_cho = _spd_factor(B + B_JITTER * np.eye(Lb), "block correlation")
        B_inv = _cho_solve(B_cho, np.eye(Lb))
        gamma = np.maximum(np.einsum("ij,mji->m", B_inv, moments) / Lb, gamma_floor)
        B = (moments / gamma[:, None, None]).mean(axis=0)
        B = 0.5 * (B + B.T) + B_JITTER * np.eye(Lb)
        scale = np.trace(B) / Lb
        B /= scale
        gamma = np.maximum(gamma * scale, gamma_floor)
        # E-step with the refreshed prior
        post = _estep(gamma, B)
        # gamma keeps evolving long after mu settles; stop only when both do
        delta_mu = np.max(np.abs(post.mu - mu_prev))
        delta_g = np.max(np.abs(gamma - gamma_prev)) / max(float(gamma.max()), 1e-30)
        mu_prev = post.mu
        gamma_prev = gamma
        if max(delta_mu, delta_g) < tol:
            break
    return BlockHyper(gamma=gamma, B=B, L=Lb), post


def draw_from_posterior(post: GaussianPosterior, rng: np.random.Generator) -> np.ndarray:
    """One draw from N(mu, cov) by Cholesky, with escalating jitter retries."""
    z = rng.normal(size=post.n)
    scale = max(np.mean(np.diag(post.cov)), 1e-300)
    for jitter in (0.0, 1e-12, 1e-9, 1e-6):
        try:
            C = np.linalg.cholesky(post.cov + jitter * scale * np.eye(post.n))
            return post.mu + C @ z
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("posterior covariance factorization failed after jitter retries")


def sample_block_posterior(
    hyper: BlockHyper,
    X: np.ndarray,
    y: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One exact draw from the block posterior via a Cholesky factor of Sigma_beta."""
    Xp = _pad_design(X, hyper.n_pad)
    inv = hyper.inv_cov() if Xp.shape[0] >= hyper.n_pad else None
    post = gaussian_posterior(Xp, y, sigma2, hyper.cov(), prior_cov_inv=inv)
    return draw_from_posterior(post, rng)


def marginal_loglik(X: np.ndarray, y: np.ndarray, sigma2: float, prior_cov: np.ndarray) -> float:
    """log N(y; 0, sigma2 I + X Sigma0 X') - the type-II likelihood EM ascends."""
    m = X.shape[0]
    if m == 0:
        return 0.0
    C = sigma2 * np.eye(m) + X @ prior_cov @ X.T
    cho = _spd_factor(C, "marginal covariance")
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    return float(-0.5 * (m * math.log(2 * math.pi) + logdet + y @ _cho_solve(cho, y)))


def _map_operator_base(
    X: np.ndarray,
    sigma2: float,
    U_diag: np.ndarray | None,
    prior_cov_inv: np.ndarray | None,
) -> np.ndarray:
    """P such that the extended MAP operator is q = P - P x x' P / (1 + x'Px).

    Laplace form: P = U (s2 I + U X'X U)^-1 U.  Block form: P = (s2 Sigma0^-1 + X'X)^-1.
    Both absorb the candidate row x by one rank-one (Sherman-Morrison) update.
    """
    n = X.shape[1] if U_diag is None else U_diag.shape[0]
    XtX = X.T @ X if X.shape[0] else np.zeros((n, n))
    if U_diag is not None:
        A = sigma2 * np.eye(n) + (U_diag[:, None] * XtX) * U_diag[None, :]
        cho = _spd_factor(A, "reward system (Laplace form)")
        A_inv = _cho_solve(cho, np.eye(n))
        P = (U_diag[:, None] * A_inv) * U_diag[None, :]
    else:
        A = sigma2 * prior_cov_inv + XtX
        cho = _spd_factor(A, "reward system (block form)")
        P = _cho_solve(cho, np.eye(n))
    return 0.5 * (P + P.T)


def lambda_plus_scores(
    beta_star: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    candidates: np.ndarray,
    sigma2: float,
    U_diag: np.ndarray | None = None,
    prior_cov_inv: np.ndarray | None = None,
) -> np.ndarray:
    """Expected reward lambda+ for every candidate sensing row (K x n) at once.

    lambda+ = -|q X'y - b|^2 - |q x|^2 (s2 + (x'b)^2) - 2 (q X'y - b)' q x x'b,
    where q is the MAP operator of the history extended by (x, y).
    """
    if (U_diag is None) == (prior_cov_inv is None):
        raise InvalidParameterError("exactly one of U_diag / prior_cov_inv must be given")
    P = _map_operator_base(X, sigma2, U_diag, prior_cov_inv)
    v = X.T @ y if X.shape[0] else np.zeros(P.shape[0])
    Xa = np.atleast_2d(candidates)
    G = P @ Xa.T  # n x K columns P x
    s = np.einsum("kn,nk->k", Xa, G)
    c = 1.0 + s
    w0 = P @ v
    xPv = Xa @ w0
    q_hist = w0[:, None] - G * (xPv / c)[None, :]  # q X'y per candidate
    qx = G / c[None, :]
    resid = q_hist - beta_star[:, None]
    xtb = Xa @ beta_star
    term1 = -np.einsum("nk,nk->k", resid, resid)
    term2 = -np.einsum("nk,nk->k", qx, qx) * (sigma2 + xtb**2)
    term3 = -2.0 * np.einsum("nk,nk->k", resid, qx) * xtb
    return term1 + term2 + term3


def expected_reward_lambda_plus(
    beta_star: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    x: np.ndarray,
    sigma2: float,
    U_diag: np.ndarray | None = None,
    prior_cov_inv: np.ndarray | None = None,
) -> float:
    """lambda+ of a single candidate action; see lambda_plus_scores."""
    return float(
        lambda_plus_scores(beta_star, X, y, x[None, :], sigma2, U_diag, prior_cov_inv)[0]
    )
