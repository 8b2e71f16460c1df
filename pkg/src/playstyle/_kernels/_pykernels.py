"""Pure-Python/numpy implementations of the hot loops.

Used when the compiled extension is unavailable, and as the reference the
extension is tested against. Squared distances are accumulated one column
at a time, in column order, so they round identically to the C loops.
"""

import math

import numpy as np

NAME = "python"


def nearest_centroid(X, C):
    """Index of the closest centroid per row (ties -> lowest index) and its squared distance."""
    n, d = X.shape
    d2 = np.zeros((n, C.shape[0]))
    for j in range(d):
        diff = X[:, j, None] - C[None, :, j]
        d2 += diff * diff
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(n), labels]


def dpmeans_sweep(X, order, C, lam2):
    """One DP-means assignment pass over ``X`` in ``order``.

    Points farther than ``lam2`` (squared) from every centroid open a new
    centroid at themselves. Returns labels and the grown centroid array.
    """
    n, d = X.shape
    cap = C.shape[0] + n
    cent = np.empty((cap, d))
    k = C.shape[0]
    cent[:k] = C
    labels = np.empty(n, dtype=np.int64)
    for idx in order:
        x = X[idx]
        d2 = np.zeros(k)
        for j in range(d):
            t = x[j] - cent[:k, j]
            d2 += t * t
        c = int(np.argmin(d2))
        if d2[c] > lam2:
            cent[k] = x
            labels[idx] = k
            k += 1
        else:
            labels[idx] = c
    return labels, cent[:k].copy()


def _sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def sga_epochs(X, y, theta, orders, lr):
    """Per-sample logistic-regression ascent, theta <- theta + lr * (y - h) * x."""
    theta = np.array(theta, dtype=np.float64)
    rows = [X[i] for i in range(X.shape[0])]
    for order in orders:
        for i in order:
            x = rows[i]
            h = _sigmoid(float(theta @ x))
            theta += (lr * (y[i] - h)) * x
    return theta


TAU = 1e-12
SHRINK_EVERY = 1000


def _kernel_row(Xa, x):
    """``Xa @ x`` summed in feature order, matching the compiled loop bit for bit."""
    out = np.zeros(Xa.shape[0])
    for k in range(Xa.shape[1]):
        out = out + Xa[:, k] * x[k]
    return out


def _sq_norm(w):
    total = 0.0
    for v in w:
        total = total + v * v
    return total


def smo_reconstruct(X, y, alpha):
    """Exact ``w`` and gradient ``G = y * (X @ w) - 1`` from the duals."""
    w = X.T @ (alpha * y)
    return w, y * (X @ w) - 1.0


def smo_bias(y, alpha, G, C):
    """Bias of ``w @ x + b`` from the two violation thresholds.

    With ``F = y * G = w @ x - y``, ``b_up`` is the smallest F among duals
    that may increase and ``b_low`` the largest among those that may
    decrease. The midpoint keeps every sample within half the gap of its
    KKT condition.
    """
    F = y * G
    up, low, _, _ = _violations(y, G, alpha, C)
    b_up = F[up].min() if up.any() else None
    b_low = F[low].max() if low.any() else None
    if b_up is None:
        b_up = b_low
    if b_low is None:
        b_low = b_up
    return -0.5 * float(b_up + b_low)


def _violations(ya, Ga, aa, C):
    up = np.where(ya > 0, aa < C, aa > 0.0)
    low = np.where(ya > 0, aa > 0.0, aa < C)
    return up, low, -ya * Ga, ya * Ga


def _pair_update(ai, aj, yi, yj, gi, gj, quad, C):
    if quad <= 0.0:
        quad = TAU
    if yi != yj:
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0.0:
            if aj < 0.0:
                aj, ai = 0.0, diff
        elif ai < 0.0:
            ai, aj = 0.0, -diff
        if diff > 0.0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        delta = (gi - gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0.0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0.0:
            ai, aj = 0.0, total
    return ai, aj


def smo(X, y, C, tol, eps, max_passes, start_order, record_trace, alpha0=None):
    """Pairwise dual ascent for the linear soft-margin SVM.

    The first index is the maximal KKT violator, the second maximizes the
    second-order gain against it. Scans follow ``start_order`` and ties go
    to the earliest index in it. The gradient ``G = Qa - 1`` is updated
    from the two kernel rows of the chosen pair, over active rows only.
    Bounded duals that cannot violate are shrunk out of the active
    set every 1000 steps, and the full gradient is rebuilt from ``alpha``
    before optimality is declared.

    Stops when the violation gap over all samples is below ``2 * tol``
    (every sample then meets its KKT condition within ``tol``) or after
    ``max_passes * n`` steps. ``eps`` is unused here and kept for
    signature parity.

    Returns ``(alpha, bias, w, passes, converged, trace, n_steps)`` where
    ``passes`` counts blocks of n steps and the decision is ``w @ x + bias``.
    """
    n = X.shape[0]
    y = np.asarray(y, dtype=np.float64)
    order = np.asarray(start_order, dtype=np.int64)
    alpha = np.zeros(n) if alpha0 is None else np.array(alpha0, dtype=np.float64)
    qd = np.einsum("ij,ij->i", X, X)
    gap_tol = 2.0 * tol
    w, G = smo_reconstruct(X, y, alpha)
    sum_alpha = float(alpha.sum())
    active = order.copy()
    Xa, ya = X[active], y[active]
    unshrunk = False
    counter = min(n, SHRINK_EVERY)
    steps, max_steps = 0, int(max_passes) * n
    trace = []
    converged = False

    def select():
        Ga, aa = G[active], alpha[active]
        up, low, v_up, v_low = _violations(ya, Ga, aa, C)
        if not up.any() or not low.any():
            return None
        ii = int(np.argmax(np.where(up, v_up, -np.inf)))
        g_max = v_up[ii]
        g_max2 = v_low[low].max()
        if g_max + g_max2 < gap_tol:
            return None
        i = int(active[ii])
        k_i = _kernel_row(Xa, X[i])
        grad_diff = g_max + v_low
        ok = low & (grad_diff > 0.0)
        if not ok.any():
            return None
        quad = qd[i] + qd[active] - 2.0 * k_i
        quad = np.where(quad > 0.0, quad, TAU)
        obj = np.where(ok, -(grad_diff * grad_diff) / quad, np.inf)
        jj = int(np.argmin(obj))
        return i, int(active[jj]), float(quad[jj]), k_i

    while steps < max_steps:
        counter -= 1
        if counter == 0:
            counter = min(n, SHRINK_EVERY)
            Ga, aa = G[active], alpha[active]
            up, low, v_up, v_low = _violations(ya, Ga, aa, C)
            g1 = v_up[up].max() if up.any() else -np.inf
            g2 = v_low[low].max() if low.any() else -np.inf
            if not unshrunk and g1 + g2 <= 10.0 * gap_tol:
                unshrunk = True
                w, G = smo_reconstruct(X, y, alpha)
                active = order.copy()
                Ga, aa = G[active], alpha[active]
                ya = y[active]
            a_act = alpha[active]
            at_c, at_0 = a_act >= C, a_act <= 0.0
            y_act = y[active]
            shrink = (at_c & (((y_act > 0) & (-Ga > g1)) | ((y_act < 0) & (-Ga > g2)))) | (
                at_0 & (((y_act > 0) & (Ga > g2)) | ((y_act < 0) & (Ga > g1)))
            )
            active = active[~shrink]
            Xa, ya = X[active], y[active]
        pick = select()
        if pick is None:
            w, G = smo_reconstruct(X, y, alpha)
            active = order.copy()
            Xa, ya = X[active], y[active]
            pick = select()
            if pick is None:
                converged = True
                break
            counter = 1
        i, j, quad, k_i = pick
        ai, aj = _pair_update(alpha[i], alpha[j], y[i], y[j], G[i], G[j], quad, C)
        di, dj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        ci, cj = di * y[i], dj * y[j]
        w = w + (ci * X[i] + cj * X[j])
        G[active] += ya * (ci * k_i + cj * _kernel_row(Xa, X[j]))
        sum_alpha += di + dj
        steps += 1
        if record_trace:
            trace.append(sum_alpha - 0.5 * _sq_norm(w))

    w, G = smo_reconstruct(X, y, alpha)
    bias = smo_bias(y, alpha, G, C)
    passes = -(-steps // n)
    return alpha, bias, w, passes, converged, np.array(trace, dtype=np.float64), steps
