"""Weighted-data estimators and root functions.

An estimator maps a :class:`~sdboot.dataset.WeightedSample` to a 1-D
estimate vector. Each one agrees with its unweighted counterpart applied to
the row-replicated data, which is what lets a nominal size-``n`` resample be
processed at the cost of its ``b`` distinct rows.

Roots have the common signature ``root(ws, est, ref) -> float`` once bound
through :data:`ROOTS`; ``ws`` is the sample ``est`` was computed from.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import expit

from .dataset import WeightedSample
from .exceptions import (
    ConvergenceError,
    DegenerateSampleError,
    InvalidConfigurationError,
    SeparationError,
    SingularDesignError,
)

__all__ = [
    "ESTIMATORS",
    "ROOTS",
    "weighted_mean",
    "weighted_median",
    "weighted_ols",
    "weighted_logistic",
    "root_sqrt_n_diff",
    "root_f_statistic",
    "root_wald_logistic",
    "logistic_information",
]

CONDITION_LIMIT = 1e12
LOGISTIC_TOL = 1e-8
LOGISTIC_MAX_ITER = 50
DIVERGENCE_LIMIT = 1e6
STEP_TOL = 1e-3
MACHINE_STEP = 1e-13


def _total_weight(ws: WeightedSample) -> int:
    total = int(ws.weights.sum())
    if total <= 0:
        raise DegenerateSampleError("all weights are zero")
    return total


def _split(x):
    # Veltkamp split: x == hi + lo with both halves carrying <= 26 significant bits
    c = 134217729.0 * x
    hi = c - (c - x)
    return hi, x - hi


def exact_weighted_sum(weights, values) -> float:
    """Correctly rounded ``sum(w_i * x_i)`` for integer weights below 2**52."""
    w = np.asarray(weights, dtype=np.int64)
    x = np.asarray(values, dtype=float)
    w_hi = (w >> 26) << 26
    w_lo = (w - w_hi).astype(float)
    w_hi = w_hi.astype(float)
    x_hi, x_lo = _split(x)
    # every partial product is exact, fsum rounds the total once
    return math.fsum(
        np.concatenate([x_hi * w_hi, x_hi * w_lo, x_lo * w_hi, x_lo * w_lo]).tolist()
    )


def weighted_mean(ws: WeightedSample) -> np.ndarray:
    """Weighted mean, bit-identical to ``fsum`` over the expanded sample / n."""
    total = _total_weight(ws)
    return np.array([exact_weighted_sum(ws.weights, ws.y) / total])


def weighted_median(ws: WeightedSample) -> np.ndarray:
    """Lower median of the weight-expanded sample.

    For an expanded count ``N`` this is the ``ceil(N/2)``-th order statistic,
    the same value the inverse-ecdf quantile gives at 1/2.
    """
    total = _total_weight(ws)
    order = np.argsort(ws.y, kind="stable")
    cum = np.cumsum(ws.weights[order])
    k = np.searchsorted(cum, (total + 1) // 2)
    return np.array([ws.y[order[k]]])


def _design(ws: WeightedSample) -> np.ndarray:
    if ws.X is None:
        raise InvalidConfigurationError("regression estimators need a regressor matrix X")
    return ws.X


def _solve_gram(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(G, compute_uv=False)
    if s[-1] <= 0 or s[0] / s[-1] > CONDITION_LIMIT:
        cond = math.inf if s[-1] <= 0 else s[0] / s[-1]
        raise SingularDesignError(f"weighted Gram matrix is singular (condition {cond:.3g})")
    return np.linalg.solve(G, rhs)


def weighted_ols(ws: WeightedSample) -> np.ndarray:
    """Solve ``(X'WX) beta = X'Wy``; no intercept column is added."""
    X = _design(ws)
    _total_weight(ws)
    Xw = X * ws.weights[:, None]
    return _solve_gram(Xw.T @ X, Xw.T @ ws.y)


def _loglik(X, y, w, beta):
    eta = X @ beta
    # log(1 + e^eta) computed stably
    return float(np.dot(w, y * eta - (np.maximum(eta, 0) + np.log1p(np.exp(-np.abs(eta))))))


def _polish(X, y, w, beta, step, rounds: int = 3):
    # a small score can still leave a sizeable error along flat directions;
    # full Newton steps converge quadratically from here
    for _ in range(rounds):
        if np.max(np.abs(step)) <= MACHINE_STEP * (1.0 + np.max(np.abs(beta))):
            break
        beta = beta + step
        p = expit(X @ beta)
        info = (X * (w * p * (1.0 - p))[:, None]).T @ X
        try:
            step = _solve_gram(info, X.T @ (w * (y - p)))
        except SingularDesignError:
            break
    return beta


def weighted_logistic(
    ws: WeightedSample,
    tol: float = LOGISTIC_TOL,
    max_iter: int = LOGISTIC_MAX_ITER,
    divergence: float = DIVERGENCE_LIMIT,
) -> np.ndarray:
    """Logit-link MLE by Newton-Raphson from zero.

    Converges when the max-norm of the weighted score drops below ``tol``
    times the score's natural scale ``max(1, sum_i w_i max_j |x_ij|)``
    (summation rounding puts a floor under the score), or when the Newton
    step is negligible at machine precision. A Newton step that lowers the log-likelihood is halved until it does not.

    Raises
    ------
    SingularDesignError
        ``X'WX`` itself is (numerically) singular.
    SeparationError
        The likelihood has no finite maximiser: the coefficients exceed
        ``divergence``, the fitted probabilities saturate, or the score
        vanishes while the Newton step does not.
    ConvergenceError
        ``max_iter`` iterations without meeting ``tol``; carries the score
        trace.
    """
    X = _design(ws)
    _total_weight(ws)
    y, w = ws.y, ws.weights.astype(float)
    Xw = X * w[:, None]
    _solve_gram(Xw.T @ X, np.zeros(X.shape[1]))
    threshold = tol * max(1.0, float(np.dot(w, np.max(np.abs(X), axis=1))))
    beta = np.zeros(X.shape[1])
    ll = _loglik(X, y, w, beta)
    trace = []
    for it in range(max_iter + 1):
        p = expit(X @ beta)
        score = X.T @ (w * (y - p))
        smax = float(np.max(np.abs(score)))
        trace.append(smax)
        info = (X * (w * p * (1.0 - p))[:, None]).T @ X
        try:
            step = _solve_gram(info, score)
        except SingularDesignError:
            # the design is fine, so the curvature vanished: fitted p hit 0 or 1
            raise SeparationError("fitted probabilities saturated at 0 or 1") from None
        size = float(np.max(np.abs(step)))
        scale = 1.0 + float(np.max(np.abs(beta)))
        if smax < threshold:
            # on separated data the score decays geometrically but the step does not
            if size > STEP_TOL * scale:
                raise SeparationError("score vanished without the Newton step shrinking")
            return _polish(X, y, w, beta, step)
        if size <= MACHINE_STEP * scale:
            return beta
        if it == max_iter:
            break
        for _ in range(60):
            cand = beta + step
            cand_ll = _loglik(X, y, w, cand)
            if cand_ll >= ll:
                break
            step = step / 2
        beta, ll = cand, cand_ll
        if np.linalg.norm(beta) > divergence:
            raise SeparationError(f"coefficients diverged (|beta| > {divergence:g})")
    raise ConvergenceError(f"Newton-Raphson did not converge in {max_iter} iterations", trace)


def root_sqrt_n_diff(est, ref, n: int) -> float:
    """``sqrt(n) * (est - ref)`` for scalar estimates."""
    est = np.ravel(est)
    ref = np.ravel(ref)
    if est.shape != (1,) or ref.shape != (1,):
        raise InvalidConfigurationError("sqrt-n root needs scalar estimates")
    return float(math.sqrt(n) * (est[0] - ref[0]))


def root_f_statistic(ws: WeightedSample, est, ref, d: int, nominal_n: int) -> float:
    """F-type root with weighted cross-products.

    Numerator ``(est-ref)' X'WX (est-ref) / d``; denominator the weighted
    residual sum of squares over ``nominal_n - d - 1``.
    """
    if nominal_n <= d + 1:
        raise InvalidConfigurationError(f"F root needs n > d + 1 (n={nominal_n}, d={d})")
    X = _design(ws)
    delta = np.ravel(est) - np.ravel(ref)
    Xd = X @ delta
    num = float(np.dot(ws.weights, Xd * Xd)) / d
    if num == 0.0:
        return 0.0
    resid = ws.y - X @ np.ravel(est)
    rss = float(np.dot(ws.weights, resid * resid))
    if rss <= 0.0:
        raise DegenerateSampleError("weighted residual sum of squares is zero")
    return num / (rss / (nominal_n - d - 1))


def logistic_information(ws: WeightedSample, beta) -> np.ndarray:
    """``sum_i w_i p_i (1 - p_i) x_i x_i'`` at ``beta``."""
    X = _design(ws)
    p = expit(X @ np.ravel(beta))
    return (X * (ws.weights * p * (1.0 - p))[:, None]).T @ X


def root_wald_logistic(ws: WeightedSample, est, ref) -> float:
    """Quadratic form ``(est-ref)' I(est) (est-ref)`` with the weighted
    logistic information evaluated at ``est``."""
    delta = np.ravel(est) - np.ravel(ref)
    info = logistic_information(ws, est)
    return float(max(delta @ info @ delta, 0.0))


Estimator = Callable[[WeightedSample], np.ndarray]
Root = Callable[[WeightedSample, np.ndarray, np.ndarray], float]

ESTIMATORS: dict[str, Estimator] = {
    "mean": weighted_mean,
    "median": weighted_median,
    "ols": weighted_ols,
    "logistic": weighted_logistic,
}

ROOTS: dict[str, Root] = {
    "sqrt_n_diff": lambda ws, est, ref: root_sqrt_n_diff(est, ref, ws.nominal_n),
    "f_statistic": lambda ws, est, ref: root_f_statistic(
        ws, est, ref, np.ravel(est).shape[0], ws.nominal_n
    ),
    "wald_logistic": root_wald_logistic,
}
