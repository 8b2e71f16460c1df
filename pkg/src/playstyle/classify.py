"""Win/loss predictors: logistic regression, Gaussian discriminant analysis and a linear SVM.

All training functions take a float feature matrix ``X`` (one row per
match) and 0/1 labels ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError

LOG_EPS = 1e-12
# count features have |x|^2 around 50, so larger constant steps leave theta
# jittering well away from the optimum
DEFAULT_LEARNING_RATE = 0.005
DEFAULT_EPOCHS = 30
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)


class ModelKind(str, Enum):
    LR = "lr"
    GDA = "gda"
    SVM = "svm"


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValidationError(f"X has shape {X.shape}, y has shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    if y.size == 0 or y.min() == y.max():
        raise ValidationError("training data must contain both labels")
    return X, y.astype(np.int64)


def _rows(X, dim):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != dim:
        raise ValidationError(f"expected {dim} features, got {X2.shape[1]}")
    return X2, single


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


# ---------------------------------------------------------------------------
# logistic regression


@dataclass(frozen=True, eq=False)
class LrModel:
    """Weights for every feature followed by the intercept."""

    theta: np.ndarray
    epochs_run: int
    final_log_likelihood: float
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    @property
    def n_features(self) -> int:
        return self.theta.shape[0] - 1


def add_intercept(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))


def log_likelihood(theta, X1, y) -> float:
    """Bernoulli log-likelihood of labels ``y`` for intercept-augmented rows ``X1``."""
    h = np.clip(sigmoid(X1 @ theta), LOG_EPS, 1.0 - LOG_EPS)
    return float(np.sum(y * np.log(h) + (1 - y) * np.log(1.0 - h)))


def log_likelihood_gradient(theta, X1, y) -> np.ndarray:
    """Sum over samples of (y - h(x)) x; for one sample this is the ascent step direction."""
    X1 = np.atleast_2d(X1)
    return X1.T @ (np.atleast_1d(y) - sigmoid(X1 @ theta))


def lr_train(
    X, y, learning_rate: float = DEFAULT_LEARNING_RATE, epochs: int = DEFAULT_EPOCHS, seed: int = 0
) -> LrModel:
    """Stochastic gradient ascent on the log-likelihood from theta = 0.

    Each epoch visits the samples in a fresh seeded order and applies
    ``theta += learning_rate * (y - h(x)) * x`` per sample.
    """
    X, y = _check_xy(X, y)
    if not learning_rate > 0:
        raise ValidationError("learning_rate must be positive")
    X1 = add_intercept(X)
    rng = np.random.default_rng(seed)
    orders = np.array([rng.permutation(X.shape[0]) for _ in range(epochs)], dtype=np.int64)
    orders = orders.reshape(epochs, X.shape[0])
    theta = _kernels.sga_epochs(X1, y.astype(np.float64), np.zeros(X1.shape[1]), orders, float(learning_rate))
    if not np.all(np.isfinite(theta)):
        raise NumericalError("logistic regression weights diverged")
    return LrModel(theta, epochs, log_likelihood(theta, X1, y), float(learning_rate), int(seed))


def lr_log_likelihood(model: LrModel, X, y) -> float:
    X2, _ = _rows(X, model.n_features)
    return log_likelihood(model.theta, add_intercept(X2), np.asarray(y))


def lr_predict_proba(model: LrModel, X):
    """Probability that team 1 wins; scalar for a single row."""
    X2, single = _rows(X, model.n_features)
    p = sigmoid(X2 @ model.theta[:-1] + model.theta[-1])
    return float(p[0]) if single else p


def lr_predict(model: LrModel, X):
    return (np.asarray(lr_predict_proba(model, X)) >= 0.5).astype(np.int64)


# ---------------------------------------------------------------------------
# Gaussian discriminant analysis


@dataclass(frozen=True, eq=False)
class GdaModel:
    phi: float
    mu0: np.ndarray
    mu1: np.ndarray
    sigma: np.ndarray
    ridge: float = 0.0

    @property
    def n_features(self) -> int:
        return self.mu0.shape[0]

    @property
    def sigma_used(self) -> np.ndarray:
        """Shared covariance with the ridge added, as used for prediction."""
        return self.sigma + self.ridge * np.eye(self.n_features)


def gda_moments(X, y):
    """Closed-form maximum-likelihood estimates (phi, mu0, mu1, pooled sigma / m)."""
    X, y = _check_xy(X, y)
    m = X.shape[0]
    phi = float(y.sum()) / m
    mu0 = X[y == 0].mean(axis=0)
    mu1 = X[y == 1].mean(axis=0)
    centered = X - np.where(y[:, None] == 1, mu1, mu0)
    sigma = (centered.T @ centered) / m
    sigma = 0.5 * (sigma + sigma.T)
    return phi, mu0, mu1, sigma


def _factorizable(S: np.ndarray) -> bool:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return False
    diag = np.diag(L)
    # numerically singular matrices can factor with vanishing pivots
    return diag.min() > 0 and (diag.min() / diag.max()) ** 2 > 1e-12


def gda_fit(X, y, ridge: float = 1e-6) -> GdaModel:
    """Shared-covariance GDA by direct MLE.

    If the covariance does not factor cleanly, ``ridge * I`` is added and
    the ridge doubled until it does; the applied amount is recorded.
    """
    phi, mu0, mu1, sigma = gda_moments(X, y)
    d = sigma.shape[0]
    applied = 0.0
    if not _factorizable(sigma):
        if not ridge > 0:
            raise NumericalError("covariance is singular and ridge is not positive")
        applied = ridge
        while not _factorizable(sigma + applied * np.eye(d)):
            applied *= 2.0
            if applied > 1e12:
                raise NumericalError("covariance could not be regularized")
    return GdaModel(phi, mu0, mu1, sigma, applied)


def _gauss_logpdf(X, mu, L):
    """log N(x; mu, L L^T) for each row of X."""
    diff = np.linalg.solve(L, (X - mu).T)
    maha = (diff * diff).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return -0.5 * (maha + logdet + mu.shape[0] * math.log(2 * math.pi))


def gda_log_likelihood(model: GdaModel, X, y) -> float:
    """Joint log-likelihood sum_i log p(x_i, y_i) under the model."""
    X2, _ = _rows(X, model.n_features)
    y = np.asarray(y)
    L = np.linalg.cholesky(model.sigma_used)
    lp0 = _gauss_logpdf(X2, model.mu0, L) + math.log(1.0 - model.phi)
    lp1 = _gauss_logpdf(X2, model.mu1, L) + math.log(model.phi)
    return float(np.where(y == 1, lp1, lp0).sum())


def gda_predict_proba(model: GdaModel, X):
    """Posterior probability of label 1 via Bayes' rule."""
    X2, single = _rows(X, model.n_features)
    L = np.linalg.cholesky(model.sigma_used)
    log_odds = (
        _gauss_logpdf(X2, model.mu1, L)
        - _gauss_logpdf(X2, model.mu0, L)
        + math.log(model.phi)
        - math.log(1.0 - model.phi)
    )
    p = sigmoid(log_odds)
    return float(p[0]) if single else p


def gda_predict(model: GdaModel, X):
    """Labels and posteriors; label 1 when the posterior is at least one half."""
    p = gda_predict_proba(model, X)
    return (np.asarray(p) >= 0.5).astype(np.int64), p


# ---------------------------------------------------------------------------
# support vector machine


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Soft-margin linear SVM in dual form.

    ``alphas`` and ``support_y`` (in {-1, +1}) are stored for the support
    vectors only; ``support`` holds their training-row indices.
    """

    alphas: np.ndarray
    support: np.ndarray
    support_vectors: np.ndarray
    support_y: np.ndarray
    bias: float
    C: float
    tol: float = 1e-3
    converged: bool = True
    max_kkt_violation: float = 0.0
    passes: int = 0
    dual_trace: tuple[float, ...] = ()

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def w(self) -> np.ndarray:
        """Primal weight vector; the linear kernel collapses the support expansion."""
        return (self.alphas * self.support_y) @ self.support_vectors


def kkt_violation(alpha, margins, C) -> np.ndarray:
    """Per-sample amount by which y*f(x) breaks the dual optimality conditions."""
    lower = np.where(alpha < C, np.maximum(1.0 - margins, 0.0), 0.0)
    upper = np.where(alpha > 0.0, np.maximum(margins - 1.0, 0.0), 0.0)
    return np.maximum(lower, upper)


def svm_train(
    X,
    y,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 200,
    seed: int = 0,
    eps: float = 1e-10,
    record_trace: bool = False,
    alpha0=None,
) -> SvmModel:
    """SMO on the C-soft-margin dual with a linear kernel.

    Labels are mapped to -1/+1 and ``seed`` fixes the scan order that breaks
    ties in pair selection. The solver stops once no pair violates the
    optimality conditions by more than ``2 * tol``, which leaves every
    training sample within ``tol`` of its KKT condition. One pass is n pair
    updates; after ``max_passes`` of them the model is returned with
    ``converged=False``. ``max_kkt_violation`` is measured on the training
    set either way.

    ``alpha0`` warm-starts the duals; it must be feasible for this C.
    """
    X, y = _check_xy(X, y)
    if not C > 0:
        raise ValidationError("C must be positive")
    ys = np.where(y == 1, 1.0, -1.0)
    if alpha0 is not None:
        alpha0 = np.asarray(alpha0, dtype=np.float64)
        if (
            alpha0.shape != ys.shape
            or alpha0.min() < 0.0
            or alpha0.max() > C
            or abs(float(alpha0 @ ys)) > 1e-8 * max(1.0, float(alpha0.sum()))
        ):
            raise ValidationError("alpha0 is not a feasible starting point for this C")
    start_order = np.random.default_rng(seed).permutation(X.shape[0]).astype(np.int64)
    alpha, b, w, passes, converged, trace, _ = _kernels.smo(
        X, ys, float(C), float(tol), float(eps), int(max_passes), start_order,
        bool(record_trace), alpha0,
    )
    sv = np.flatnonzero(alpha > 0.0)
    margins = ys * (X @ w + b)
    viol = float(kkt_violation(alpha, margins, C).max())
    return SvmModel(
        alpha[sv].copy(),
        sv,
        X[sv].copy(),
        ys[sv].copy(),
        float(b),
        float(C),
        float(tol),
        bool(converged),
        viol,
        int(passes),
        tuple(float(v) for v in trace),
    )


def svm_decision(model: SvmModel, X):
    """sum_i alpha_i y_i <x_i, x> + b over the support vectors."""
    X2, single = _rows(X, model.n_features)
    f = (X2 @ model.support_vectors.T) @ (model.alphas * model.support_y) + model.bias
    return float(f[0]) if single else f


def svm_predict(model: SvmModel, X):
    return (np.asarray(svm_decision(model, X)) >= 0.0).astype(np.int64)


def _full_alphas(model: SvmModel, n: int) -> np.ndarray:
    a = np.zeros(n)
    a[model.support] = model.alphas
    return a


def _select_C(X, y, grid, val_fraction, seed, **train_kw):
    """Validation search over ``grid``; returns (C, duals over all rows of X).

    The grid is fitted in increasing order, each fit warm-started from the
    previous duals (feasible because the box only grows). The returned
    duals are the winner's, with zeros on the validation rows, so they
    also seed the final fit on all of X.
    """
    X, y = _check_xy(X, y)
    grid = sorted(float(c) for c in grid)
    if not grid or grid[0] <= 0:
        raise ValidationError("C grid must be non-empty and positive")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(X.shape[0])
    n_val = max(1, int(round(val_fraction * X.shape[0])))
    val, fit_idx = perm[:n_val], perm[n_val:]
    if np.unique(y[fit_idx]).size < 2:
        return grid[0], None
    best_c, best_acc, best_alpha = None, -1.0, None
    warm = None
    for c in grid:
        model = svm_train(X[fit_idx], y[fit_idx], C=c, seed=seed, alpha0=warm, **train_kw)
        warm = _full_alphas(model, fit_idx.size)
        acc = float(np.mean(svm_predict(model, X[val]) == y[val]))
        if acc > best_acc:
            best_c, best_acc = c, acc
            best_alpha = np.zeros(X.shape[0])
            best_alpha[fit_idx] = warm
    return best_c, best_alpha


def svm_select_C(
    X, y, grid=DEFAULT_C_GRID, val_fraction: float = 0.1, seed: int = 0, **train_kw
) -> float:
    """C with the best accuracy on a seeded validation split; ties go to the smaller C."""
    return _select_C(X, y, grid, val_fraction, seed, **train_kw)[0]


# ---------------------------------------------------------------------------
# uniform entry points


def train(kind: ModelKind | str, X, y, seed: int = 0, **options):
    """Train any of the three predictors; SVM picks C by validation unless ``C`` is given."""
    kind = ModelKind(kind)
    if kind is ModelKind.LR:
        return lr_train(X, y, seed=seed, **options)
    if kind is ModelKind.GDA:
        return gda_fit(X, y, **options)
    options = dict(options)
    C = options.pop("C", None)
    grid = options.pop("C_grid", DEFAULT_C_GRID)
    if C is None:
        C, warm = _select_C(X, y, grid, 0.1, seed, **options)
        return svm_train(X, y, C=C, seed=seed, alpha0=warm, **options)
    return svm_train(X, y, C=C, seed=seed, **options)


def predict(model, X) -> np.ndarray:
    if isinstance(model, LrModel):
        return np.atleast_1d(lr_predict(model, X))
    if isinstance(model, GdaModel):
        return np.atleast_1d(gda_predict(model, X)[0])
    if isinstance(model, SvmModel):
        return np.atleast_1d(svm_predict(model, X))
    raise TypeError(f"not a predictor: {type(model).__name__}")


def model_kind(model) -> ModelKind:
    for cls, kind in ((LrModel, ModelKind.LR), (GdaModel, ModelKind.GDA), (SvmModel, ModelKind.SVM)):
        if isinstance(model, cls):
            return kind
    raise TypeError(f"not a predictor: {type(model).__name__}")
