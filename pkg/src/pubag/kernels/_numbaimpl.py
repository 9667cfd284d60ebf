"""Numba-compiled numeric kernels.

All kernels work on raw CSR triples (``indptr``, ``indices``, ``values``)
plus an explicit ``rows`` selection, so callers never copy row data. The
in-kernel PRNG is splitmix64 driving a Fisher-Yates shuffle; the pure-numpy
backend implements the identical stream, so both backends visit coordinates
in the same order for the same seed.
"""

import numpy as np
from numba import njit

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _splitmix_next(state):
    state = state + _SM_GAMMA
    z = state
    z = (z ^ (z >> _S30)) * _SM_MUL1
    z = (z ^ (z >> _S27)) * _SM_MUL2
    z = z ^ (z >> _S31)
    return state, z


@njit(**_JIT)
def splitmix_sequence(seed, count):
    out = np.empty(count, dtype=np.uint64)
    state = seed
    for i in range(count):
        state, z = _splitmix_next(state)
        out[i] = z
    return out


@njit(**_JIT)
def _shuffle(perm, state):
    # Fisher-Yates; modulo bias is ~n/2^64 and irrelevant at our sizes.
    for i in range(perm.shape[0] - 1, 0, -1):
        state, z = _splitmix_next(state)
        j = np.int64(z % np.uint64(i + 1))
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t
    return state


@njit(**_JIT)
def permutation_rounds(n, rounds, seed):
    out = np.empty((rounds, n), dtype=np.int64)
    state = seed
    for r in range(rounds):
        perm = np.arange(n)
        state = _shuffle(perm, state)
        out[r] = perm
    return out


@njit(**_JIT)
def _row_dot(indptr, indices, values, r1, r2):
    a = indptr[r1]
    ea = indptr[r1 + 1]
    b = indptr[r2]
    eb = indptr[r2 + 1]
    s = 0.0
    while a < ea and b < eb:
        ia = indices[a]
        ib = indices[b]
        if ia == ib:
            s += values[a] * values[b]
            a += 1
            b += 1
        elif ia < ib:
            a += 1
        else:
            b += 1
    return s


@njit(**_JIT)
def _row_sqnorm(indptr, values, r):
    s = 0.0
    for t in range(indptr[r], indptr[r + 1]):
        s += values[t] * values[t]
    return s


@njit(**_JIT)
def _kernel_value(indptr, indices, values, r1, r2, sq1, sq2, kernel_id, inv_two_sigma_sq):
    d = _row_dot(indptr, indices, values, r1, r2)
    if kernel_id == 0:
        return d
    dist2 = sq1 + sq2 - 2.0 * d
    if dist2 < 0.0:
        dist2 = 0.0
    return np.exp(-dist2 * inv_two_sigma_sq)


@njit(**_JIT)
def linear_scores(indptr, indices, values, rows, w_head, bias):
    n = rows.shape[0]
    out = np.empty(n)
    for q in range(n):
        r = rows[q]
        s = bias
        for t in range(indptr[r], indptr[r + 1]):
            s += w_head[indices[t]] * values[t]
        out[q] = s
    return out


@njit(**_JIT)
def expansion_scores(s_indptr, s_indices, s_values, s_rows, coef,
                     kernel_id, sigma, q_indptr, q_indices, q_values, q_rows):
    ns = s_rows.shape[0]
    nq = q_rows.shape[0]
    inv2 = 0.0
    if kernel_id == 1:
        inv2 = 1.0 / (2.0 * sigma * sigma)
    sq_s = np.empty(ns)
    for i in range(ns):
        sq_s[i] = _row_sqnorm(s_indptr, s_values, s_rows[i])
    out = np.zeros(nq)
    for q in range(nq):
        rq = q_rows[q]
        sqq = _row_sqnorm(q_indptr, q_values, rq)
        acc = 0.0
        for i in range(ns):
            ri = s_rows[i]
            a = s_indptr[ri]
            ea = s_indptr[ri + 1]
            b = q_indptr[rq]
            eb = q_indptr[rq + 1]
            d = 0.0
            while a < ea and b < eb:
                ia = s_indices[a]
                ib = q_indices[b]
                if ia == ib:
                    d += s_values[a] * q_values[b]
                    a += 1
                    b += 1
                elif ia < ib:
                    a += 1
                else:
                    b += 1
            if kernel_id == 0:
                acc += coef[i] * d
            else:
                dist2 = sq_s[i] + sqq - 2.0 * d
                if dist2 < 0.0:
                    dist2 = 0.0
                acc += coef[i] * np.exp(-dist2 * inv2)
        out[q] = acc
    return out


@njit(**_JIT)
def svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha):
    """Max projected-gradient magnitude of the dual at a fixed (w, alpha)."""
    n = rows.shape[0]
    d_bias = w.shape[0] - 1
    worst = 0.0
    for i in range(n):
        r = rows[i]
        s = w[d_bias]
        for t in range(indptr[r], indptr[r + 1]):
            s += w[indices[t]] * values[t]
        g = y[i] * s - 1.0
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= cost[i]:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) > worst:
            worst = abs(pg)
    return worst


@njit(**_JIT)
def svm_linear_cd(indptr, indices, values, rows, y, cost, n_features,
                  tol, max_epochs, seed):
    """Dual coordinate descent for the asymmetric-cost linear SVM.

    The bias is an implicit constant feature of value 1 (last weight), so the
    dual is box-constrained only. Terminates when an epoch's worst projected
    gradient, re-verified at the final iterate, is within ``tol``.
    """
    n = rows.shape[0]
    d_aug = n_features + 1
    w = np.zeros(d_aug)
    alpha = np.zeros(n)
    qdiag = np.empty(n)
    for i in range(n):
        qdiag[i] = _row_sqnorm(indptr, values, rows[i]) + 1.0
    perm = np.arange(n)
    state = seed
    epochs = 0
    converged = False
    for _ in range(max_epochs):
        state = _shuffle(perm, state)
        max_pg = 0.0
        for k in range(n):
            i = perm[k]
            r = rows[i]
            s = w[d_aug - 1]
            for t in range(indptr[r], indptr[r + 1]):
                s += w[indices[t]] * values[t]
            g = y[i] * s - 1.0
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
                na = a - g / qdiag[i]
                if na < 0.0:
                    na = 0.0
                elif na > ci:
                    na = ci
                da = na - a
                if da != 0.0:
                    alpha[i] = na
                    step = y[i] * da
                    for t in range(indptr[r], indptr[r + 1]):
                        w[indices[t]] += step * values[t]
                    w[d_aug - 1] += step
        epochs += 1
        if max_pg <= tol:
            if svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha) <= tol:
                converged = True
                break
    violation = svm_linear_violation(indptr, indices, values, rows, y, cost, w, alpha)
    return w, alpha, epochs, violation, converged


@njit(**_JIT)
def _kernel_margins(indptr, indices, values, rows, y, alpha, sqn,
                    kernel_id, inv2, use_gram, gram, margins):
    # margins[j] = sum_i alpha_i y_i (k(i,j) + 1), recomputed from scratch.
    n = rows.shape[0]
    for j in range(n):
        margins[j] = 0.0
    for i in range(n):
        ai = alpha[i]
        if ai == 0.0:
            continue
        c = ai * y[i]
        if use_gram:
            for j in range(n):
                margins[j] += c * gram[i, j]
        else:
            for j in range(n):
                kv = _kernel_value(indptr, indices, values, rows[i], rows[j],
                                   sqn[i], sqn[j], kernel_id, inv2)
                margins[j] += c * (kv + 1.0)


@njit(**_JIT)
def _kernel_violation(y, cost, alpha, margins):
    n = alpha.shape[0]
    worst = 0.0
    for i in range(n):
        g = y[i] * margins[i] - 1.0
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= cost[i]:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) > worst:
            worst = abs(pg)
    return worst


@njit(**_JIT)
def svm_kernel_cd(indptr, indices, values, rows, y, cost, kernel_id, sigma,
                  tol, max_epochs, seed, gram_limit):
    """Dual coordinate descent in the kernel expansion.

    Uses the bias-augmented kernel k(x,x') + 1, equivalent to the constant
    feature of the linear fast path. The full Gram matrix is cached when
    n <= gram_limit; otherwise kernel rows are recomputed per update.
    """
    n = rows.shape[0]
    inv2 = 0.0
    if kernel_id == 1:
        inv2 = 1.0 / (2.0 * sigma * sigma)
    sqn = np.empty(n)
    for i in range(n):
        sqn[i] = _row_sqnorm(indptr, values, rows[i])
    use_gram = n <= gram_limit
    if use_gram:
        gram = np.empty((n, n))
        for i in range(n):
            gram[i, i] = (sqn[i] if kernel_id == 0 else 1.0) + 1.0
            for j in range(i + 1, n):
                kv = _kernel_value(indptr, indices, values, rows[i], rows[j],
                                   sqn[i], sqn[j], kernel_id, inv2)
                gram[i, j] = kv + 1.0
                gram[j, i] = kv + 1.0
    else:
        gram = np.empty((0, 0))
    qdiag = np.empty(n)
    for i in range(n):
        qdiag[i] = (sqn[i] if kernel_id == 0 else 1.0) + 1.0
    alpha = np.zeros(n)
    margins = np.zeros(n)
    perm = np.arange(n)
    state = seed
    epochs = 0
    converged = False
    for _ in range(max_epochs):
        state = _shuffle(perm, state)
        max_pg = 0.0
        for k in range(n):
            i = perm[k]
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
                na = a - g / qdiag[i]
                if na < 0.0:
                    na = 0.0
                elif na > ci:
                    na = ci
                da = na - a
                if da != 0.0:
                    alpha[i] = na
                    c = y[i] * da
                    if use_gram:
                        for j in range(n):
                            margins[j] += c * gram[i, j]
                    else:
                        for j in range(n):
                            kv = _kernel_value(indptr, indices, values,
                                               rows[i], rows[j], sqn[i], sqn[j],
                                               kernel_id, inv2)
                            margins[j] += c * (kv + 1.0)
        epochs += 1
        if max_pg <= tol:
            _kernel_margins(indptr, indices, values, rows, y, alpha, sqn,
                            kernel_id, inv2, use_gram, gram, margins)
            if _kernel_violation(y, cost, alpha, margins) <= tol:
                converged = True
                break
    _kernel_margins(indptr, indices, values, rows, y, alpha, sqn,
                    kernel_id, inv2, use_gram, gram, margins)
    violation = _kernel_violation(y, cost, alpha, margins)
    return alpha, epochs, violation, converged


@njit(**_JIT)
def svm_kernel_violation(indptr, indices, values, rows, y, cost, alpha,
                         kernel_id, sigma):
    n = rows.shape[0]
    inv2 = 0.0
    if kernel_id == 1:
        inv2 = 1.0 / (2.0 * sigma * sigma)
    sqn = np.empty(n)
    for i in range(n):
        sqn[i] = _row_sqnorm(indptr, values, rows[i])
    margins = np.zeros(n)
    gram = np.empty((0, 0))
    _kernel_margins(indptr, indices, values, rows, y, alpha, sqn,
                    kernel_id, inv2, False, gram, margins)
    return _kernel_violation(y, cost, alpha, margins)


@njit(**_JIT)
def _sigmoid_neg(z):
    # 1 / (1 + exp(z)), computed without overflow.
    if z >= 0.0:
        e = np.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + np.exp(z))


@njit(**_JIT)
def _softplus_neg(z):
    # log(1 + exp(-z)), computed without overflow.
    if z > 0.0:
        return np.log1p(np.exp(-z))
    return -z + np.log1p(np.exp(z))


@njit(**_JIT)
def _logit_loss(margins, cost, w, inv_c):
    n = margins.shape[0]
    s = 0.0
    for i in range(n):
        s += cost[i] * _softplus_neg(margins[i])
    reg = 0.0
    for a in range(w.shape[0]):
        reg += w[a] * w[a]
    return s + 0.5 * inv_c * reg


@njit(**_JIT)
def logit_newton(indptr, indices, values, rows, y, cost, inv_c, n_features,
                 tol, max_iter):
    """Damped Newton for class-weighted L2-regularized logistic regression.

    Bias handled as the augmented constant feature (regularized). Stops when
    the gradient infinity norm is within ``tol``. Line search is Armijo
    backtracking, so the recorded loss trace is non-increasing.
    """
    n = rows.shape[0]
    d = n_features + 1
    w = np.zeros(d)
    margins = np.zeros(n)  # y_i * f(x_i)
    g = np.empty(d)
    h = np.empty((d, d))
    loss = _logit_loss(margins, cost, w, inv_c)
    loss_trace = np.empty(max_iter + 1)
    loss_trace[0] = loss
    iters = 0
    converged = False
    ginf = 0.0
    for _ in range(max_iter):
        for a in range(d):
            g[a] = inv_c * w[a]
        for i in range(n):
            r = rows[i]
            s = _sigmoid_neg(margins[i])
            c = -cost[i] * s * y[i]
            for t in range(indptr[r], indptr[r + 1]):
                g[indices[t]] += c * values[t]
            g[d - 1] += c
        ginf = 0.0
        for a in range(d):
            if abs(g[a]) > ginf:
                ginf = abs(g[a])
        if ginf <= tol:
            converged = True
            break
        for a in range(d):
            for b in range(d):
                h[a, b] = 0.0
            h[a, a] = inv_c
        for i in range(n):
            r = rows[i]
            s = _sigmoid_neg(margins[i])
            dcoef = cost[i] * s * (1.0 - s)
            lo = indptr[r]
            hi = indptr[r + 1]
            for t1 in range(lo, hi):
                c1 = dcoef * values[t1]
                a1 = indices[t1]
                for t2 in range(lo, hi):
                    h[a1, indices[t2]] += c1 * values[t2]
                h[a1, d - 1] += c1
            for t2 in range(lo, hi):
                h[d - 1, indices[t2]] += dcoef * values[t2]
            h[d - 1, d - 1] += dcoef
        direction = np.linalg.solve(h, g)
        gtd = 0.0
        for a in range(d):
            gtd += g[a] * direction[a]
        # Directional change of each margin for cheap line-search re-evaluation.
        dmarg = np.empty(n)
        for i in range(n):
            r = rows[i]
            s = direction[d - 1]
            for t in range(indptr[r], indptr[r + 1]):
                s += direction[indices[t]] * values[t]
            dmarg[i] = y[i] * s
        step = 1.0
        accepted = False
        w_new = np.empty(d)
        margins_new = np.empty(n)
        new_loss = loss
        for _ls in range(60):
            for a in range(d):
                w_new[a] = w[a] - step * direction[a]
            for i in range(n):
                margins_new[i] = margins[i] - step * dmarg[i]
            new_loss = _logit_loss(margins_new, cost, w_new, inv_c)
            if new_loss <= loss - 1e-4 * step * gtd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        for a in range(d):
            w[a] = w_new[a]
        for i in range(n):
            margins[i] = margins_new[i]
        loss = new_loss
        iters += 1
        loss_trace[iters] = loss
    if not converged:
        # Refresh the gradient norm at the returned iterate.
        for a in range(d):
            g[a] = inv_c * w[a]
        for i in range(n):
            r = rows[i]
            s = _sigmoid_neg(margins[i])
            c = -cost[i] * s * y[i]
            for t in range(indptr[r], indptr[r + 1]):
                g[indices[t]] += c * values[t]
            g[d - 1] += c
        ginf = 0.0
        for a in range(d):
            if abs(g[a]) > ginf:
                ginf = abs(g[a])
        converged = ginf <= tol
    return w, iters, ginf, converged, loss_trace[:iters + 1].copy()
