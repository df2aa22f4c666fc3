"""Numpy implementations of the kernels in ``_core.pyx``, used when the extension is absent."""

import numpy as np


def cd_epoch(Kb, y, alpha, grad, perm, C):
    for i in perm:
        q = Kb[i, i]
        if q <= 0.0:
            continue
        a_old = alpha[i]
        a_new = min(max(a_old - grad[i] / q, 0.0), C)
        if a_new != a_old:
            alpha[i] = a_new
            grad += ((a_new - a_old) * y[i]) * (y * Kb[i])


def best_split(X, order_t, y, weight, features, n_classes, parent_score):
    best = parent_score + 1e-12 * max(parent_score, 1.0)
    best_f, best_thr = -1, 0.0
    for f in features:
        o = order_t[f]
        o = o[weight[o] > 0.0]
        if o.size < 2:
            continue
        vals = X[o, f]
        ys = y[o]
        counts = np.zeros((o.size, n_classes))
        counts[np.arange(o.size), ys] = weight[o]
        left = np.cumsum(counts, axis=0)[:-1]
        cut = np.flatnonzero(vals[1:] > vals[:-1])
        if cut.size == 0:
            continue
        left = left[cut]
        total = counts.sum(axis=0)
        n_left = left.sum(axis=1)
        n_total = total.sum()
        right = total - left
        score = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / (n_total - n_left)
        k = int(np.argmax(score))
        if score[k] > best:
            best = float(score[k])
            best_f = int(f)
            best_thr = 0.5 * (vals[cut[k]] + vals[cut[k] + 1])
    if best_f < 0:
        return -1, 0.0, parent_score
    return best_f, best_thr, best
