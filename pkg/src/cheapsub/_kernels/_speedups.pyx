# cython: boundscheck=False, wraparound=False, cdivision=True
"""C implementation of the IRLS logistic kernel.

Same contract and status codes as ``_pyfallback.irls``.  The solver uses
a hand-rolled Cholesky factorization of the p x p normal equations; p is
small (a handful of regression terms) while n runs into the tens of
thousands on replicate fits, so the O(n*p^2) accumulation dominates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p

cnp.import_array()

cdef int _CONVERGED_SCORE = 0
cdef int _CONVERGED_STALL = 1
cdef int _MAX_ITER = 2
cdef int _SINGULAR = 3
cdef int _DIVERGED = 4

CONVERGED_SCORE = _CONVERGED_SCORE
CONVERGED_STALL = _CONVERGED_STALL
MAX_ITER = _MAX_ITER
SINGULAR = _SINGULAR
DIVERGED = _DIVERGED

BACKEND = "c"


cdef inline double _expit(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _softplus(double x) nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef double _loglik(double[::1] y, double[::1] eta, double[::1] w, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += w[i] * (y[i] * eta[i] - _softplus(eta[i]))
    return s


cdef int _cholesky_solve(double[:, ::1] H, double[::1] g, double[::1] out,
                         Py_ssize_t p) nogil:
    """Solve H @ out = g for symmetric positive definite H, in place.

    Returns 0 on success, -1 if a pivot is not positive.
    """
    cdef Py_ssize_t i, j, k
    cdef double s
    # factor H = L L^T (lower triangle of H is overwritten with L)
    for j in range(p):
        s = H[j, j]
        for k in range(j):
            s -= H[j, k] * H[j, k]
        if s <= 0.0:
            return -1
        H[j, j] = s ** 0.5
        for i in range(j + 1, p):
            s = H[i, j]
            for k in range(j):
                s -= H[i, k] * H[j, k]
            H[i, j] = s / H[j, j]
    # forward substitution L z = g
    for i in range(p):
        s = g[i]
        for k in range(i):
            s -= H[i, k] * out[k]
        out[i] = s / H[i, i]
    # back substitution L^T x = z
    for i in range(p - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, p):
            s -= H[k, i] * out[k]
        out[i] = s / H[i, i]
    return 0


def irls(X, y, offset, weights, int max_iter=100, double score_tol=1e-8,
         double ll_tol=1e-10, double divergence_bound=1e3):
    """Drop-in replacement for the numpy kernel; see _pyfallback.irls."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] off = np.ascontiguousarray(offset, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t p = Xv.shape[1]

    beta_arr = np.zeros(p)
    cdef double[::1] beta = beta_arr
    cdef double[::1] eta = np.empty(n)
    cdef double[::1] score = np.empty(p)
    cdef double[::1] step = np.empty(p)
    cdef double[:, ::1] H = np.empty((p, p))
    cdef double[::1] new_beta = np.empty(p)

    cdef Py_ssize_t i, j, k, it
    cdef int stalls = 0, halvings, status
    cdef double ll, new_ll, mu, r, wi, max_score, s, bmax

    with nogil:
        for i in range(n):
            eta[i] = off[i]
        ll = _loglik(yv, eta, wv, n)
        max_score = 0.0

        for it in range(1, max_iter + 1):
            # score and weighted Hessian accumulated in one pass
            for j in range(p):
                score[j] = 0.0
                for k in range(p):
                    H[j, k] = 0.0
            for i in range(n):
                mu = _expit(eta[i])
                r = wv[i] * (yv[i] - mu)
                wi = wv[i] * mu * (1.0 - mu)
                for j in range(p):
                    score[j] += Xv[i, j] * r
                    for k in range(j + 1):
                        H[j, k] += wi * Xv[i, j] * Xv[i, k]
            for j in range(p):
                for k in range(j + 1, p):
                    H[j, k] = H[k, j]
            max_score = 0.0
            for j in range(p):
                if fabs(score[j]) > max_score:
                    max_score = fabs(score[j])
            if max_score < score_tol:
                status = _CONVERGED_SCORE
                with gil:
                    return beta_arr, status, it - 1, max_score
            if stalls >= 2:
                status = _CONVERGED_STALL
                with gil:
                    return beta_arr, status, it - 1, max_score

            if _cholesky_solve(H, score, step, p) != 0:
                status = _SINGULAR
                with gil:
                    return beta_arr, status, it - 1, max_score

            # step halving keeps the quasi-likelihood non-decreasing
            halvings = 0
            while True:
                for j in range(p):
                    new_beta[j] = beta[j] + step[j]
                for i in range(n):
                    s = off[i]
                    for j in range(p):
                        s += Xv[i, j] * new_beta[j]
                    eta[i] = s
                new_ll = _loglik(yv, eta, wv, n)
                if new_ll >= ll - 1e-12 * (fabs(ll) + 1.0) or halvings >= 20:
                    break
                for j in range(p):
                    step[j] *= 0.5
                halvings += 1

            bmax = 0.0
            for j in range(p):
                beta[j] = new_beta[j]
                if fabs(beta[j]) > bmax:
                    bmax = fabs(beta[j])
            if bmax > divergence_bound:
                status = _DIVERGED
                with gil:
                    return beta_arr, status, it, max_score
            if fabs(new_ll - ll) < ll_tol * (fabs(new_ll) + 1.0):
                stalls += 1
            else:
                stalls = 0
            ll = new_ll

        # final score at exit from the iteration cap
        for j in range(p):
            score[j] = 0.0
        for i in range(n):
            mu = _expit(eta[i])
            r = wv[i] * (yv[i] - mu)
            for j in range(p):
                score[j] += Xv[i, j] * r
        max_score = 0.0
        for j in range(p):
            if fabs(score[j]) > max_score:
                max_score = fabs(score[j])

    if max_score < score_tol:
        return beta_arr, CONVERGED_SCORE, max_iter, max_score
    return beta_arr, MAX_ITER, max_iter, max_score
