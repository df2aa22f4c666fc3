# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``taxosvm._pycore`` holds the numpy equivalents."""


def cd_epoch(const double[:, ::1] Kb, const double[::1] y, double[::1] alpha,
             double[::1] grad, const long long[::1] perm, double C):
    """One pass of dual coordinate descent over ``perm``.

    ``Kb`` is the Gram matrix of the bias-augmented inputs and ``grad`` the
    dual gradient ``y_i (sum_j alpha_j y_j Kb_ij) - 1``; both ``alpha`` and
    ``grad`` are updated in place.
    """
    cdef Py_ssize_t n = Kb.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double q, a_old, a_new, dy
    for t in range(perm.shape[0]):
        i = perm[t]
        q = Kb[i, i]
        if q <= 0.0:
            continue
        a_old = alpha[i]
        a_new = a_old - grad[i] / q
        if a_new < 0.0:
            a_new = 0.0
        elif a_new > C:
            a_new = C
        if a_new != a_old:
            alpha[i] = a_new
            dy = (a_new - a_old) * y[i]
            for j in range(n):
                grad[j] += dy * y[j] * Kb[i, j]


def best_split(const double[:, ::1] X, const long long[:, ::1] order_t,
               const long long[::1] y, const double[::1] weight,
               const long long[::1] features, int n_classes, double parent_score):
    """Best Gini split of the weighted node over the candidate ``features``.

    ``order_t[f]`` lists all rows sorted by feature ``f``; rows with zero
    weight are outside the node.  The split score is
    ``sum(cL**2)/nL + sum(cR**2)/nR``, which grows as weighted Gini impurity
    falls.  Returns ``(feature, threshold, score)`` or ``(-1, 0.0, parent_score)``
    when no candidate beats ``parent_score`` by a relative 1e-12.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k, t, r, fi, f
    cdef double[::1] total = _zeros(n_classes)
    cdef double[::1] left = _zeros(n_classes)
    cdef double n_total = 0.0, n_left, sq_left, sq_right, score, prev, v, c
    cdef double best = parent_score + 1e-12 * (parent_score if parent_score > 1.0 else 1.0)
    cdef long long best_f = -1
    cdef double best_thr = 0.0
    cdef bint started

    for r in range(n):
        if weight[r] > 0.0:
            total[y[r]] += weight[r]
            n_total += weight[r]

    for fi in range(features.shape[0]):
        f = features[fi]
        for k in range(n_classes):
            left[k] = 0.0
        n_left = 0.0
        started = False
        prev = 0.0
        for t in range(n):
            r = order_t[f, t]
            if weight[r] <= 0.0:
                continue
            v = X[r, f]
            if started and v > prev:
                sq_left = 0.0
                sq_right = 0.0
                for k in range(n_classes):
                    c = left[k]
                    sq_left += c * c
                    c = total[k] - left[k]
                    sq_right += c * c
                score = sq_left / n_left + sq_right / (n_total - n_left)
                if score > best:
                    best = score
                    best_f = f
                    best_thr = 0.5 * (prev + v)
            left[y[r]] += weight[r]
            n_left += weight[r]
            prev = v
            started = True
    if best_f < 0:
        return -1, 0.0, parent_score
    return best_f, best_thr, best


cdef double[::1] _zeros(Py_ssize_t n):
    import numpy as np
    return np.zeros(n, dtype=np.float64)
