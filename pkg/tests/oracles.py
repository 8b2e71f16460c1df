"""Slow, independent reference implementations used as test oracles."""

import numpy as np


def project_box_hyperplane(v, y, C):
    """Exact Euclidean projection of v onto {0 <= a <= C, a @ y = 0}, y in {-1, +1}.

    g(mu) = y @ clip(v - mu * y, 0, C) is piecewise linear and non-increasing
    in mu, so its root lies between the two breakpoints where g changes sign
    and linear interpolation there is exact.
    """
    bps = np.concatenate([v * y, (v - C) * y])
    g = (np.clip(v[None, :] - bps[:, None] * y[None, :], 0.0, C) * y).sum(1)
    right = g <= 0.0
    m1 = bps[right].min()
    g1 = g[right][np.argmin(bps[right])]
    left = ~right
    if g1 == 0.0 or not left.any():
        mu = m1
    else:
        m0 = bps[left].max()
        g0 = g[left][np.argmax(bps[left])]
        mu = m0 + (m1 - m0) * g0 / (g0 - g1)
    return np.clip(v - mu * y, 0.0, C)


def svm_dual_qp(X, y, C, iters=100000, tol=1e-13):
    """Soft-margin linear SVM dual by accelerated projected gradient ascent.

    Momentum restarts whenever the dual objective drops. Returns
    (alpha, w, b); the bias is the mean of y - w @ x over margin support
    vectors, or the midpoint of the feasible interval when none lies
    strictly inside the box.
    """
    y = np.asarray(y, dtype=np.float64)
    Q = (X @ X.T) * np.outer(y, y)
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)

    def dual(a):
        return a.sum() - 0.5 * a @ Q @ a

    a = np.zeros(len(y))
    z, t, best = a.copy(), 1.0, 0.0
    for _ in range(iters):
        a_new = project_box_hyperplane(z + (1.0 - Q @ z) / L, y, C)
        if np.abs(a_new - a).max() < tol * max(1.0, C):
            a = a_new
            break
        val = dual(a_new)
        if val < best:
            # restart momentum from the last iterate
            z, t = a.copy(), 1.0
            continue
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = a_new + ((t - 1) / t_new) * (a_new - a)
        a, t, best = a_new, t_new, val
    w = X.T @ (a * y)
    f = X @ w
    margin = (a > 1e-7 * C) & (a < C * (1 - 1e-7))
    if margin.any():
        b = float(np.mean(y[margin] - f[margin]))
    else:
        # y*(f+b) >= 1 where a = 0, <= 1 where a = C
        lower, upper = [-np.inf], [np.inf]
        for fi, yi, ai in zip(f, y, a):
            need_ge = ai <= 1e-7 * C
            if (yi > 0) == need_ge:
                lower.append(yi - fi)
            else:
                upper.append(yi - fi)
        lo, hi = max(lower), min(upper)
        b = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else (lo if np.isfinite(lo) else hi)
    return a, w, b


def kkt_max_violation(X, y, alpha, w, b, C):
    m = y * (X @ w + b)
    lower = np.where(alpha < C, np.maximum(1 - m, 0), 0)
    upper = np.where(alpha > 0, np.maximum(m - 1, 0), 0)
    return float(np.maximum(lower, upper).max())


def finite_diff_grad(f, theta, h=1e-6):
    g = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def gauss_logpdf_bruteforce(x, mu, S):
    d = len(mu)
    diff = x - mu
    return -0.5 * (diff @ np.linalg.inv(S) @ diff + np.log(np.linalg.det(S)) + d * np.log(2 * np.pi))


def adjusted_rand(a, b):
    """Adjusted Rand index from the contingency table."""
    from math import comb

    a, b = np.asarray(a), np.asarray(b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_ij = sum(comb(int(v), 2) for v in table.ravel())
    sum_a = sum(comb(int(v), 2) for v in table.sum(1))
    sum_b = sum(comb(int(v), 2) for v in table.sum(0))
    expected = sum_a * sum_b / comb(len(a), 2)
    top = 0.5 * (sum_a + sum_b)
    if top == expected:
        return 1.0
    return (sum_ij - expected) / (top - expected)
