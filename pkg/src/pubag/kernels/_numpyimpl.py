"""Pure-numpy/scipy fallback for the compiled kernels.

Mirrors the signatures and semantics of ``_numbaimpl``; coordinate updates
use the same splitmix64 permutation stream, so both backends traverse the
same update order for a given seed. Vectorized where the algorithm allows
(logistic Newton, scoring); the coordinate-descent loops are plain Python
and are only meant to keep the package fully functional without a JIT.
"""

import numpy as np
import scipy.sparse as sp

_MASK = (1 << 64) - 1


def _splitmix_next(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def splitmix_sequence(seed, count):
    out = np.empty(count, dtype=np.uint64)
    state = int(seed)
    for i in range(count):
        state, z = _splitmix_next(state)
        out[i] = z
    return out


def _shuffle(perm, state):
    for i in range(len(perm) - 1, 0, -1):
        state, z = _splitmix_next(state)
        j = z % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return state


def permutation_rounds(n, rounds, seed):
    out = np.empty((rounds, n), dtype=np.int64)
    state = int(seed)
    for r in range(rounds):
        perm = np.arange(n)
        state = _shuffle(perm, state)
        out[r] = perm
    return out


def _csr(indptr, indices, values, n_features):
    n_rows = len(indptr) - 1
    return sp.csr_matrix((values, indices, indptr), shape=(n_rows, n_features))


def _infer_width(indices):
    return int(indices.max()) + 1 if len(indices) else 1


def linear_scores(indptr, indices, values, rows, w_head, bias):
    x = _csr(indptr, indices, values, len(w_head))
    return np.asarray(x[rows] @ w_head) + bias


def _cross_kernel(xa, sqa, xb, sqb, kernel_id, sigma):
    g = np.asarray((xa @ xb.T).todense()) if sp.issparse(xa @ xb.T) else np.asarray(xa @ xb.T)
    if kernel_id == 0:
        return g
    dist2 = np.maximum(sqa[:, None] + sqb[None, :] - 2.0 * g, 0.0)
    return np.exp(-dist2 / (2.0 * sigma * sigma))


def expansion_scores(s_indptr, s_indices, s_values, s_rows, coef,
                     kernel_id, sigma, q_indptr, q_indices, q_values, q_rows):
    width = max(_infer_width(s_indices), _infer_width(q_indices))
    xs = _csr(s_indptr, s_indices, s_values, width)[s_rows]
    xq = _csr(q_indptr, q_indices, q_values, width)[q_rows]
    sqs = np.asarray(xs.multiply(xs).sum(axis=1)).ravel()
    out = np.empty(len(q_rows))
    chunk = max(1, int(4e6) // max(1, len(s_rows)))
    for lo in range(0, len(q_rows), chunk):
        part = xq[lo:lo + chunk]
        sqq = np.asarray(part.multiply(part).sum(axis=1)).ravel()
        g = _cross_kernel(part, sqq, xs, sqs, kernel_id, sigma)
        out[lo:lo + chunk] = g @ coef
    return out


def _projected_gradient(g, alpha, cost):
    pg = g.copy()
    at_lower = alpha <= 0.0
    at_upper = alpha >= cost
    pg[at_lower] = np.minimum(g[at_lower], 0.0)
    pg[at_upper] = np.maximum(g[at_upper], 0.0)
    return pg


def svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha):
    d_aug = len(w)
    x = _csr(indptr, indices, values, d_aug - 1)
    margins = np.asarray(x[rows] @ w[:-1]) + w[-1]
    g = y * margins - 1.0
    return float(np.abs(_projected_gradient(g, alpha, cost)).max(initial=0.0))


def svm_linear_cd(indptr, indices, values, rows, y, cost, n_features,
                  tol, max_epochs, seed):
    n = len(rows)
    d_aug = n_features + 1
    w = np.zeros(d_aug)
    alpha = np.zeros(n)
    starts = indptr[rows]
    ends = indptr[rows + 1]
    cols = [indices[starts[i]:ends[i]] for i in range(n)]
    vals = [values[starts[i]:ends[i]] for i in range(n)]
    qdiag = np.array([v @ v + 1.0 for v in vals])
    perm = np.arange(n)
    state = int(seed)
    epochs = 0
    converged = False
    for _ in range(max_epochs):
        state = _shuffle(perm, state)
        max_pg = 0.0
        for i in perm:
            c_i, v_i = cols[i], vals[i]
            g = y[i] * (w[c_i] @ v_i + w[-1]) - 1.0
            a = alpha[i]
            ci = cost[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= ci:
                pg = max(g, 0.0)
            else:
                pg = g
            apg = abs(pg)
            if apg > max_pg:
                max_pg = apg
            if apg > 1e-12:
                na = min(max(a - g / qdiag[i], 0.0), ci)
                da = na - a
                if da != 0.0:
                    alpha[i] = na
                    w[c_i] += (y[i] * da) * v_i
                    w[-1] += y[i] * da
        epochs += 1
        if max_pg <= tol:
            if svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha) <= tol:
                converged = True
                break
    violation = svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha)
    return w, alpha, epochs, violation, converged


def _gram_plus_one(indptr, indices, values, rows, kernel_id, sigma):
    width = _infer_width(indices)
    x = _csr(indptr, indices, values, width)[rows]
    sq = np.asarray(x.multiply(x).sum(axis=1)).ravel()
    g = np.asarray((x @ x.T).todense())
    if kernel_id == 1:
        dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * g, 0.0)
        g = np.exp(-dist2 / (2.0 * sigma * sigma))
    return g + 1.0


def svm_kernel_cd(indptr, indices, values, rows, y, cost, kernel_id, sigma,
                  tol, max_epochs, seed, gram_limit):
    n = len(rows)
    gram = _gram_plus_one(indptr, indices, values, rows, kernel_id, sigma)
    qdiag = np.diag(gram).copy()
    alpha = np.zeros(n)
    margins = np.zeros(n)
    perm = np.arange(n)
    state = int(seed)
    epochs = 0
    converged = False
    for _ in range(max_epochs):
        state = _shuffle(perm, state)
        max_pg = 0.0
        for i in perm:
            g = y[i] * margins[i] - 1.0
            a = alpha[i]
            ci = cost[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= ci:
                pg = max(g, 0.0)
            else:
                pg = g
            apg = abs(pg)
            if apg > max_pg:
                max_pg = apg
            if apg > 1e-12:
                na = min(max(a - g / qdiag[i], 0.0), ci)
                da = na - a
                if da != 0.0:
                    alpha[i] = na
                    margins += (y[i] * da) * gram[i]
        epochs += 1
        if max_pg <= tol:
            margins = (alpha * y) @ gram
            if float(np.abs(_projected_gradient(y * margins - 1.0, alpha, cost)).max()) <= tol:
                converged = True
                break
    margins = (alpha * y) @ gram
    violation = float(np.abs(_projected_gradient(y * margins - 1.0, alpha, cost)).max())
    return alpha, epochs, violation, converged


def svm_kernel_violation(indptr, indices, values, rows, y, cost, alpha,
                         kernel_id, sigma):
    gram = _gram_plus_one(indptr, indices, values, rows, kernel_id, sigma)
    margins = (alpha * y) @ gram
    return float(np.abs(_projected_gradient(y * margins - 1.0, alpha, cost)).max())


def logit_newton(indptr, indices, values, rows, y, cost, inv_c, n_features,
                 tol, max_iter):
    n = len(rows)
    d = n_features + 1
    x = _csr(indptr, indices, values, n_features)[rows]
    w = np.zeros(d)
    margins = np.zeros(n)

    def loss_at(margins_, w_):
        return float(cost @ np.logaddexp(0.0, -margins_) + 0.5 * inv_c * (w_ @ w_))

    loss = loss_at(margins, w)
    trace = [loss]
    iters = 0
    converged = False
    ginf = 0.0

    def gradient(margins_, w_):
        sig = np.empty(n)
        posm = margins_ >= 0
        e = np.exp(-margins_[posm])
        sig[posm] = e / (1.0 + e)
        sig[~posm] = 1.0 / (1.0 + np.exp(margins_[~posm]))
        r = -cost * sig * y
        g = np.empty(d)
        g[:-1] = x.T @ r + inv_c * w_[:-1]
        g[-1] = r.sum() + inv_c * w_[-1]
        return g, sig

    for _ in range(max_iter):
        g, sig = gradient(margins, w)
        ginf = float(np.abs(g).max())
        if ginf <= tol:
            converged = True
            break
        dcoef = cost * sig * (1.0 - sig)
        hh = np.asarray((x.multiply(dcoef[:, None]).T @ x).todense())
        hb = x.T @ dcoef
        h = np.zeros((d, d))
        h[:-1, :-1] = hh
        h[:-1, -1] = hb
        h[-1, :-1] = hb
        h[-1, -1] = dcoef.sum()
        h[np.diag_indices(d)] += inv_c
        direction = np.linalg.solve(h, g)
        gtd = float(g @ direction)
        dmarg = y * (np.asarray(x @ direction[:-1]) + direction[-1])
        step = 1.0
        accepted = False
        for _ls in range(60):
            w_new = w - step * direction
            margins_new = margins - step * dmarg
            new_loss = loss_at(margins_new, w_new)
            if new_loss <= loss - 1e-4 * step * gtd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, margins, loss = w_new, margins_new, new_loss
        iters += 1
        trace.append(loss)
    if not converged:
        g, _ = gradient(margins, w)
        ginf = float(np.abs(g).max())
        converged = ginf <= tol
    return w, iters, ginf, converged, np.array(trace)
