"""Pooled maximum-likelihood estimators for the simultaneous logit model.

Covers the static cross-sectional model, the dynamic model with lagged
outcomes as regressors, the closed-form cell-count estimator of the
simultaneity parameter, its mapping to a correlation, and clustered
sandwich standard errors.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .panel import Panel
from .results import FitResult

__all__ = [
    "DegenerateCellError",
    "rho_from_cells",
    "rho_to_correlation",
    "fit_ss_mle",
    "fit_static_ss",
    "fit_dynamic_ss",
    "clustered_vcov",
]

MAX_ITER = 500
GRAD_TOL = 1e-8
SEPARATION_BOUND = 25.0


class DegenerateCellError(ValueError):
    """A cell probability of zero makes the log odds ratio undefined."""


def rho_from_cells(p11, p10, p01, p00, smoothing: float = 0.0) -> float:
    """Log odds ratio log p11 + log p00 - log p01 - log p10.

    ``smoothing`` adds a Laplace-style constant to every cell before
    normalizing (off by default: zero cells raise instead of returning
    infinities).
    """
    cells = np.array([p11, p10, p01, p00], dtype=float) + smoothing
    if np.any(cells < 0):
        raise ValueError("cell probabilities must be nonnegative")
    if not np.isclose(cells.sum(), 1.0 + 4 * smoothing, atol=1e-6):
        raise ValueError("cell probabilities must sum to 1")
    if np.any(cells == 0):
        raise DegenerateCellError("zero cell; pass smoothing > 0 for a fallback")
    p11, p10, p01, p00 = cells / cells.sum()
    return float(np.log(p11) + np.log(p00) - np.log(p01) - np.log(p10))


def rho_to_correlation(rho: float) -> float:
    """Outcome correlation implied by rho when both marginals are 1/2.

    Setting both index terms to -rho/2 makes the two marginals exactly 1/2;
    the resulting symmetric cell table has correlation tanh(rho/4).  The
    closed form is verified against the cell construction in the test suite.
    """
    return float(np.tanh(float(rho) / 4.0))


# ---------------------------------------------------------------------------
# pooled MLE core


def _split(theta, k1, k2):
    return theta[:k1], theta[k1:k1 + k2], theta[-1]


def _cell_quantities(theta, y1, y2, X1, X2):
    b1, b2, rho = _split(theta, X1.shape[1], X2.shape[1])
    z1 = X1 @ b1
    z2 = X2 @ b2
    logits = np.stack([np.zeros_like(z1), z2, z1, z1 + z2 + rho], axis=1)
    lse = logsumexp(logits, axis=1)
    ll = y1 * z1 + y2 * z2 + (y1 * y2) * rho - lse
    lp = logits - lse[:, None]
    p01, p10, p11 = np.exp(lp[:, 1]), np.exp(lp[:, 2]), np.exp(lp[:, 3])
    return ll, p10 + p11, p01 + p11, p11


def loglik_ss(theta, y1, y2, X1, X2) -> float:
    ll, *_ = _cell_quantities(theta, y1, y2, X1, X2)
    return float(ll.sum())


def score_matrix_ss(theta, y1, y2, X1, X2) -> np.ndarray:
    """Per-observation score contributions, shape (n, p)."""
    _, p1, p2, p11 = _cell_quantities(theta, y1, y2, X1, X2)
    r1 = (y1 - p1)[:, None] * X1
    r2 = (y2 - p2)[:, None] * X2
    rr = (y1 * y2 - p11)[:, None]
    return np.concatenate([r1, r2, rr], axis=1)


def hessian_ss(theta, y1, y2, X1, X2) -> np.ndarray:
    """Hessian of the log likelihood (negative definite for this model)."""
    _, p1, p2, p11 = _cell_quantities(theta, y1, y2, X1, X2)
    k1, k2 = X1.shape[1], X2.shape[1]
    p = k1 + k2 + 1
    H = np.zeros((p, p))
    w11 = p1 * (1 - p1)
    w22 = p2 * (1 - p2)
    w12 = p11 - p1 * p2
    H[:k1, :k1] = -(X1 * w11[:, None]).T @ X1
    H[k1:k1 + k2, k1:k1 + k2] = -(X2 * w22[:, None]).T @ X2
    H[:k1, k1:k1 + k2] = -(X1 * w12[:, None]).T @ X2
    H[k1:k1 + k2, :k1] = H[:k1, k1:k1 + k2].T
    H[:k1, -1] = -(X1 * (p11 * (1 - p1))[:, None]).sum(axis=0)
    H[k1:k1 + k2, -1] = -(X2 * (p11 * (1 - p2))[:, None]).sum(axis=0)
    H[-1, :k1] = H[:k1, -1]
    H[-1, k1:k1 + k2] = H[k1:k1 + k2, -1]
    H[-1, -1] = -(p11 * (1 - p11)).sum()
    return H


def _check_design(X, label):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{label} must be two-dimensional")
    if X.shape[1] > 0 and np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError(f"{label} is rank deficient")
    return X


def fit_ss_mle(y1, y2, X1, X2, names=None, cluster_ids=None,
               start=None) -> FitResult:
    """Maximize the pooled simultaneous-logit likelihood.

    Quasi-Newton with analytic gradients; converged when the scaled
    gradient infinity norm drops below 1e-8.  When ``cluster_ids`` is
    given the reported covariance is the clustered sandwich.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape[0] < 1:
        raise ValueError("need at least one observation")
    X1 = _check_design(X1, "X1")
    X2 = _check_design(X2, "X2")
    k1, k2 = X1.shape[1], X2.shape[1]
    p = k1 + k2 + 1
    if names is None:
        names = tuple([f"b1_{j}" for j in range(k1)]
                      + [f"b2_{j}" for j in range(k2)] + ["rho"])
    names = tuple(names)
    if len(names) != p:
        raise ValueError("names length does not match parameter count")
    n = y1.shape[0]
    theta0 = np.zeros(p) if start is None else np.asarray(start, dtype=float)

    def neg_ll(theta):
        return -loglik_ss(theta, y1, y2, X1, X2) / n

    def neg_grad(theta):
        return -score_matrix_ss(theta, y1, y2, X1, X2).sum(axis=0) / n

    res = minimize(neg_ll, theta0, jac=neg_grad, method="BFGS",
                   options={"gtol": GRAD_TOL, "maxiter": MAX_ITER})
    theta = res.x
    H = hessian_ss(theta, y1, y2, X1, X2)
    scores = score_matrix_ss(theta, y1, y2, X1, X2)
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        cov = np.full((p, p), np.nan)
    grad_norm = float(np.abs(scores.sum(axis=0)).max()) / n
    fit = FitResult(
        names=names,
        estimates=theta,
        cov=cov,
        loglik=float(-res.fun * n),
        converged=bool(res.success or grad_norm <= 1e-6),
        iterations=int(res.nit),
        n_obs=n,
        quasi_separated=bool(np.any(np.abs(theta) > SEPARATION_BOUND)),
        diagnostics={"grad_inf_norm": grad_norm},
        scores=scores,
        hessian=H,
    )
    if cluster_ids is not None:
        fit.cov = clustered_vcov(fit, cluster_ids)
    return fit


def clustered_vcov(fit: FitResult, cluster_ids) -> np.ndarray:
    """Sandwich covariance with scores summed within clusters."""
    if fit.scores is None or fit.hessian is None:
        raise ValueError("fit does not carry per-observation scores")
    H = fit.hessian
    try:
        bread = np.linalg.inv(H)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError("singular Hessian") from err
    cluster_ids = np.asarray(cluster_ids)
    _, inverse = np.unique(cluster_ids, return_inverse=True)
    p = fit.scores.shape[1]
    summed = np.zeros((inverse.max() + 1, p))
    np.add.at(summed, inverse, fit.scores)
    meat = summed.T @ summed
    return bread @ meat @ bread


# ---------------------------------------------------------------------------
# panel-level drivers


def _stack_with_lags(panel: Panel, add_intercept: bool):
    """Row-stack transitions 1..T with lagged outcomes as regressors."""
    n, T, k = panel.n, panel.T, panel.k
    rows1, rows2 = [], []
    y1 = panel.y1.astype(float)
    y2 = panel.y2.astype(float)
    for t in range(1, T + 1):
        lag1, lag2 = y1[:, t - 1], y2[:, t - 1]
        cols1 = [] if k == 0 else [panel.x1[:, t - 1, :]]
        cols2 = [] if k == 0 else [panel.x2[:, t - 1, :]]
        if add_intercept:
            cols1.insert(0, np.ones((n, 1)))
            cols2.insert(0, np.ones((n, 1)))
        cols1.append(np.stack([lag1, lag2], axis=1))
        cols2.append(np.stack([lag1, lag2], axis=1))
        rows1.append(np.concatenate(cols1, axis=1))
        rows2.append(np.concatenate(cols2, axis=1))
    X1 = np.concatenate(rows1, axis=0)
    X2 = np.concatenate(rows2, axis=0)
    resp1 = np.concatenate([y1[:, t] for t in range(1, T + 1)])
    resp2 = np.concatenate([y2[:, t] for t in range(1, T + 1)])
    clusters = np.tile(np.arange(n), T)
    return resp1, resp2, X1, X2, clusters


def fit_static_ss(y1, y2, X1=None, X2=None, cluster_ids=None) -> FitResult:
    """Static cross-sectional fit; with no covariates an intercept-only model."""
    y1 = np.asarray(y1, dtype=float)
    n = y1.shape[0]
    if X1 is None:
        X1 = np.ones((n, 1))
        X2 = np.ones((n, 1))
        names = ("c1", "c2", "rho")
    else:
        names = None
    return fit_ss_mle(y1, y2, X1, X2, names=names, cluster_ids=cluster_ids)


def fit_dynamic_ss(panel: Panel, add_intercept: bool = False) -> FitResult:
    """Dynamic pooled fit treating both lags as regressors.

    Standard errors are clustered at the household level.
    """
    if panel.T < 1:
        raise ValueError("panel must contain at least one transition")
    y1, y2, X1, X2, clusters = _stack_with_lags(panel, add_intercept)
    k = panel.k
    names1 = (["c1"] if add_intercept else []) \
        + [f"b1_{j}" for j in range(k)] + ["gamma11", "gamma12"]
    names2 = (["c2"] if add_intercept else []) \
        + [f"b2_{j}" for j in range(k)] + ["gamma21", "gamma22"]
    names = tuple(names1 + names2 + ["rho"])
    return fit_ss_mle(y1, y2, X1, X2, names=names, cluster_ids=clusters)
