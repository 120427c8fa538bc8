"""Pure numpy IRLS kernel, the fallback when the C extension is absent.

Mirrors the algorithm in ``_speedups.pyx`` step for step so the two
backends agree to floating-point noise (see tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np

CONVERGED_SCORE = 0
CONVERGED_STALL = 1
MAX_ITER = 2
SINGULAR = 3
DIVERGED = 4

BACKEND = "python"


def _stable_expit(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _bernoulli_loglik(y, eta, w):
    # y*eta - softplus(eta), weighted; logaddexp is stable for |eta| large
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def irls(X, y, offset, weights, max_iter=100, score_tol=1e-8, ll_tol=1e-10,
         divergence_bound=1e3):
    """Iteratively reweighted least squares for a Bernoulli GLM with logit link.

    Supports fractional responses (quasi-binomial), a fixed linear offset
    and prior weights.  Returns ``(beta, status, n_iter, max_score)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n, p = X.shape
    beta = np.zeros(p)

    eta = offset + X @ beta
    ll = _bernoulli_loglik(y, eta, weights)
    stalls = 0
    max_score = np.inf

    for it in range(1, max_iter + 1):
        mu = _stable_expit(eta)
        resid = weights * (y - mu)
        score = X.T @ resid
        max_score = float(np.max(np.abs(score))) if p else 0.0
        if max_score < score_tol:
            return beta, CONVERGED_SCORE, it - 1, max_score
        if stalls >= 2:
            return beta, CONVERGED_STALL, it - 1, max_score

        w = weights * mu * (1.0 - mu)
        H = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            return beta, SINGULAR, it - 1, max_score

        # step halving keeps the quasi-likelihood non-decreasing
        new_beta = beta + step
        new_eta = offset + X @ new_beta
        new_ll = _bernoulli_loglik(y, new_eta, weights)
        halvings = 0
        while new_ll < ll - 1e-12 * (abs(ll) + 1.0) and halvings < 20:
            step *= 0.5
            new_beta = beta + step
            new_eta = offset + X @ new_beta
            new_ll = _bernoulli_loglik(y, new_eta, weights)
            halvings += 1

        beta, eta = new_beta, new_eta
        if float(np.max(np.abs(beta))) > divergence_bound:
            return beta, DIVERGED, it, max_score
        if abs(new_ll - ll) < ll_tol * (abs(new_ll) + 1.0):
            stalls += 1
        else:
            stalls = 0
        ll = new_ll

    mu = _stable_expit(eta)
    max_score = float(np.max(np.abs(X.T @ (weights * (y - mu))))) if p else 0.0
    if max_score < score_tol:
        return beta, CONVERGED_SCORE, max_iter, max_score
    return beta, MAX_ITER, max_iter, max_score
