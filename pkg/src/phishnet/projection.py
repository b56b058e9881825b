"""2-D projections of feature matrices: exact t-SNE with a PCA fallback.

PCA runs power iteration with deflation on the covariance matrix, which is
dependency-free and deterministic. t-SNE is the exact O(N^2) formulation:
per-point Gaussian bandwidths found by binary search to match the target
perplexity, symmetrized input affinities, Student-t low-dimensional
affinities, and gradient descent with early exaggeration and the two-phase
momentum schedule. Initialization comes from PCA scaled to a 1e-4 spread,
plus a seeded jitter an order of magnitude smaller, so runs are reproducible
per seed while seeds still differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError

_EPS = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_until: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 0:
            raise DataError("perplexity must be positive")
        if self.iterations < 250:
            raise DataError("need at least 250 iterations")


@dataclass
class Projection:
    coordinates: np.ndarray            # (N, 2)
    kl_history: list[float] = field(default_factory=list)


def _power_iteration(cov: np.ndarray, orthogonal_to: np.ndarray | None,
                     tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    d = cov.shape[0]
    v = 1.0 + np.linspace(0.0, 1e-3, d)  # deterministic, not axis-aligned
    v /= np.linalg.norm(v)
    if orthogonal_to is not None:
        v -= (v @ orthogonal_to) * orthogonal_to
        norm = np.linalg.norm(v)
        if norm < 1e-30:
            v = np.zeros(d)
            v[int(np.argmin(np.abs(orthogonal_to)))] = 1.0
            v -= (v @ orthogonal_to) * orthogonal_to
            norm = np.linalg.norm(v)
        v /= norm
    for _ in range(max_iter):
        w = cov @ v
        if orthogonal_to is not None:
            w -= (w @ orthogonal_to) * orthogonal_to
        norm = np.linalg.norm(w)
        if norm < 1e-30:
            return v  # eigenvalue ~0: direction is arbitrary but fixed
        w /= norm
        if np.linalg.norm(w - v) < tol:
            return w
        v = w
    return v


def pca_2d(x: np.ndarray) -> np.ndarray:
    """Project rows onto the top two principal components of the centered data."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise DataError("PCA needs an (N>=2, D>=2) matrix")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    if np.trace(cov) <= 0.0:
        raise NumericError("zero-variance data has no principal components")
    v1 = _power_iteration(cov, orthogonal_to=None)
    lam1 = float(v1 @ cov @ v1)
    deflated = cov - lam1 * np.outer(v1, v1)
    v2 = _power_iteration(deflated, orthogonal_to=v1)
    return centered @ np.column_stack([v1, v2])


def _squared_distances(x: np.ndarray) -> np.ndarray:
    norms = np.sum(x * x, axis=1)
    d2 = norms[:, None] + norms[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _conditional_affinities(d2: np.ndarray, perplexity: float,
                            tol: float = 1e-5, max_iter: int = 50) -> np.ndarray:
    """Row-stochastic P with per-point bandwidths matched to the perplexity.

    The search is on beta = 1/(2 sigma^2) in log-entropy space; a row that
    cannot reach the target (identical points) raises instead of silently
    returning a degenerate distribution.
    """
    n = d2.shape[0]
    target = np.log(perplexity)
    p = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        d = d2[i][mask[i]]
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        diff = np.inf
        row = None
        for _ in range(max_iter):
            expd = np.exp(-d * beta)
            sum_p = expd.sum()
            if sum_p <= 0.0 or not np.isfinite(sum_p):
                entropy = 0.0
            else:
                entropy = float(np.log(sum_p) + beta * (d @ expd) / sum_p)
            diff = entropy - target
            if abs(diff) < tol:
                row = expd / sum_p
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        if row is None:
            if abs(diff) > 1e-3:
                raise NumericError(
                    f"bandwidth search cannot reach perplexity {perplexity:.2f} "
                    f"for point {i} (degenerate distances)"
                )
            expd = np.exp(-d * beta)
            row = expd / expd.sum()
        p[i][mask[i]] = row
    return p


def achieved_log_perplexity(p_conditional: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of each conditional row: diagnostics for tests."""
    logs = np.where(p_conditional > 0, np.log(np.maximum(p_conditional, _EPS)), 0.0)
    return -np.sum(p_conditional * logs, axis=1)


def tsne_2d(x: np.ndarray, config: TsneConfig = TsneConfig()) -> Projection:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("t-SNE input must be a matrix")
    n = x.shape[0]
    if n < 12:
        raise DataError(f"need at least 12 rows, got {n}")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite values in t-SNE input")
    perplexity = min(config.perplexity, (n - 1) / 3.0)

    d2 = _squared_distances(x)
    cond = _conditional_affinities(d2, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, _EPS)

    rng = np.random.default_rng(config.seed)
    y = pca_2d(x)
    spread = y.std()
    if spread > 0:
        y = y / spread * 1e-4
    y = y + rng.normal(0.0, 1e-6, size=y.shape)

    velocity = np.zeros_like(y)
    kl_history: list[float] = []
    off_diag = ~np.eye(n, dtype=bool)
    for t in range(1, config.iterations + 1):
        num = 1.0 / (1.0 + _squared_distances(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), _EPS)

        kl = float(np.sum(p[off_diag] * np.log(p[off_diag] / q[off_diag])))
        kl_history.append(kl)

        p_eff = p * config.early_exaggeration if t <= config.exaggeration_until else p
        w = (p_eff - q) * num
        grad = 4.0 * (np.diag(w.sum(axis=1)) - w) @ y
        momentum = config.momentum_early if t <= config.exaggeration_until else config.momentum_late
        velocity = momentum * velocity - config.learning_rate * grad
        y = y + velocity
        y = y - y.mean(axis=0)

    if not np.all(np.isfinite(y)):
        raise NumericError("t-SNE diverged to non-finite coordinates")
    return Projection(coordinates=y, kl_history=kl_history)
