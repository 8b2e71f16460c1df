"""Play-style clustering: Lloyd's k-means, DP-means, CV model selection and PCA."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ValidationError
from .preprocess import StatMatrix, as_array

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 300
DEFAULT_TRIALS = 20
DEFAULT_K_RTOL = 0.01
DEFAULT_K_GRID = tuple(range(5, 25))
DEFAULT_LAMBDA_GRID = tuple(round(2.5 + 0.1 * i, 1) for i in range(20))


class Algorithm(str, Enum):
    KMEANS = "kmeans"
    DPMEANS = "dpmeans"


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Learned centroids plus how they were obtained.

    ``param`` is k for k-means and the threshold distance lambda for DP-means.
    ``objective_trace`` holds the objective after initialization (k-means only)
    and after every centroid update.
    """

    centroids: np.ndarray
    algorithm: Algorithm
    param: float
    final_objective: float
    seed: int
    iterations: int
    converged: bool = True
    objective_trace: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValidationError("a cluster model needs at least one centroid row")
        if not np.all(np.isfinite(self.centroids)):
            raise ValidationError("centroids must be finite")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def same_as(self, other: "ClusterModel") -> bool:
        """Bitwise equality of every field."""
        return (
            self.centroids.shape == other.centroids.shape
            and self.centroids.tobytes() == other.centroids.tobytes()
            and self.algorithm == other.algorithm
            and self.param == other.param
            and self.final_objective == other.final_objective
            and self.seed == other.seed
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.objective_trace == other.objective_trace
        )

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "param": self.param,
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "final_objective": self.final_objective,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ClusterModel":
        algorithm = Algorithm(obj["algorithm"])
        param = obj["param"]
        return cls(
            centroids=np.array(obj["centroids"], dtype=np.float64),
            algorithm=algorithm,
            param=int(param) if algorithm is Algorithm.KMEANS else float(param),
            final_objective=float(obj["final_objective"]),
            seed=int(obj["seed"]),
            iterations=int(obj["iterations"]),
            converged=bool(obj.get("converged", True)),
            objective_trace=tuple(float(v) for v in obj.get("objective_trace", ())),
        )


@dataclass(frozen=True, eq=False)
class Assignment:
    labels: np.ndarray

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class CvCurve:
    grid: tuple
    mean_scores: tuple[float, ...]
    chosen: float
    fold_scores: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True, eq=False)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class FitConfig:
    """What to fit: k-means with ``param`` = k, or DP-means with ``param`` = lambda."""

    algorithm: Algorithm
    param: float
    max_iter: int = DEFAULT_MAX_ITER
    init: str = "kmeans++"


# ---------------------------------------------------------------------------
# objectives


def _check_dims(X: np.ndarray, centroids: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != centroids.shape[1]:
        raise ValidationError(
            f"data has {X.shape[-1]} columns but centroids have {centroids.shape[1]}"
        )


def assign(m, centroids) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid labels (ties go to the lowest index) and squared distances."""
    X = as_array(m)
    C = np.ascontiguousarray(centroids, dtype=np.float64)
    _check_dims(X, C)
    return _kernels.nearest_centroid(X, C)


def distortion(m, model: ClusterModel | np.ndarray) -> float:
    """Within-cluster sum of squared distances, each point at its nearest centroid."""
    centroids = model.centroids if isinstance(model, ClusterModel) else model
    return float(assign(m, centroids)[1].sum())


def dp_objective(m, model: ClusterModel, lam: float | None = None) -> float:
    """Distortion plus a lambda**2 penalty for every cluster beyond the first."""
    if lam is None:
        if model.algorithm is not Algorithm.DPMEANS:
            raise ValidationError("dp_objective needs a DP-means model or an explicit lambda")
        lam = model.param
    return distortion(m, model) + (model.k - 1) * lam * lam


def _cluster_means(X, labels, k, previous):
    counts = np.bincount(labels, minlength=k)
    sums = np.empty((k, X.shape[1]))
    for j in range(X.shape[1]):
        sums[:, j] = np.bincount(labels, weights=X[:, j], minlength=k)
    means = previous.copy()
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled, None]
    return means


def _reseed_empty(X, labels, C, d2):
    """Move each empty centroid (lowest index first) onto the point farthest
    from its nearest centroid; a point is used at most once."""
    counts = np.bincount(labels, minlength=C.shape[0])
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return C
    C = C.copy()
    d2 = d2.copy()
    for c in empty:
        far = int(np.argmax(d2))
        C[c] = X[far]
        d2[far] = -1.0
    return C


# ---------------------------------------------------------------------------
# k-means


def _init_centroids(X, k, rng, method):
    n = X.shape[0]
    if method == "random":
        return X[rng.choice(n, size=k, replace=False)].copy()
    if method != "kmeans++":
        raise ValidationError(f"unknown init method {method!r}")
    chosen = [int(rng.integers(n))]
    d2 = _kernels.nearest_centroid(X, X[chosen])[1]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, _kernels.nearest_centroid(X, X[[nxt]])[1])
    return X[chosen].copy()


def kmeans_fit(
    m, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER, init: str = "kmeans++"
) -> tuple[ClusterModel, Assignment]:
    """Lloyd's algorithm from observations drawn as initial centroids.

    ``init="random"`` draws k distinct observations uniformly;
    ``"kmeans++"`` draws them one at a time with probability proportional
    to squared distance from those already drawn. Iterates until the
    assignment stops changing or ``max_iter`` updates. A cluster left
    empty is reseeded at the point farthest from its nearest centroid.
    """
    X = as_array(m)
    n = X.shape[0]
    if n == 0:
        raise ValidationError("cannot cluster an empty matrix")
    if not 1 <= k <= n:
        raise ValidationError(f"k must be between 1 and n={n}, got {k}")
    rng = np.random.default_rng(seed)
    C = _init_centroids(X, k, rng, init)
    labels, d2 = _kernels.nearest_centroid(X, C)
    trace = [float(d2.sum())]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        C = _reseed_empty(X, labels, _cluster_means(X, labels, k, C), d2)
        new_labels, d2 = _kernels.nearest_centroid(X, C)
        trace.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    model = ClusterModel(C, Algorithm.KMEANS, int(k), trace[-1], int(seed), it, converged, tuple(trace))
    return model, Assignment(labels)


# ---------------------------------------------------------------------------
# DP-means


def dpmeans_fit(
    m, lam: float, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[ClusterModel, Assignment]:
    """DP-means: k-means that opens a new cluster for any point farther than ``lam``.

    Starts from a single random observation. Every outer iteration visits
    the points in a fresh random order; a point whose squared distance to
    every current centroid exceeds ``lam**2`` becomes a new centroid (and
    its cluster's first member). Clusters left empty after a pass are
    dropped, then centroids move to their cluster means. Stops when the
    memberships repeat or after ``max_iter`` passes.
    """
    X = as_array(m)
    n = X.shape[0]
    if n == 0:
        raise ValidationError("cannot cluster an empty matrix")
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    lam2 = float(lam) * float(lam)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    C = X[first : first + 1].copy()
    prev = None
    trace = []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        order = rng.permutation(n).astype(np.int64)
        labels, C = _kernels.dpmeans_sweep(X, order, C, lam2)
        counts = np.bincount(labels, minlength=C.shape[0])
        if np.any(counts == 0):
            keep = np.flatnonzero(counts)
            remap = np.full(C.shape[0], -1, dtype=np.int64)
            remap[keep] = np.arange(keep.size)
            labels = remap[labels]
            C = C[keep]
        C = _cluster_means(X, labels, C.shape[0], C)
        d2 = _kernels.nearest_centroid(X, C)[1]
        trace.append(float(d2.sum()) + (C.shape[0] - 1) * lam2)
        if prev is not None and np.array_equal(labels, prev):
            converged = True
            break
        prev = labels
    model = ClusterModel(C, Algorithm.DPMEANS, float(lam), trace[-1], int(seed), it, converged, tuple(trace))
    return model, Assignment(labels)


# ---------------------------------------------------------------------------
# restarts and model selection


def fit(m, config: FitConfig, seed: int) -> tuple[ClusterModel, Assignment]:
    if config.algorithm is Algorithm.KMEANS:
        return kmeans_fit(m, int(config.param), seed, config.max_iter, config.init)
    return dpmeans_fit(m, float(config.param), seed, config.max_iter)


def best_of_trials(
    m, config: FitConfig, n_trials: int = DEFAULT_TRIALS, base_seed: int = 0
) -> tuple[ClusterModel, Assignment]:
    """Fit with seeds ``base_seed .. base_seed + n_trials - 1``; keep the lowest objective.

    Ties go to the earliest seed.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be at least 1")
    best = None
    for t in range(n_trials):
        model, labels = fit(m, config, base_seed + t)
        log.debug("trial seed=%d objective=%.6g k=%d", base_seed + t, model.final_objective, model.k)
        if best is None or model.final_objective < best[0].final_objective:
            best = (model, labels)
    return best


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Shuffle 0..n-1 with ``seed`` and cut into near-equal contiguous folds."""
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    if n < folds:
        raise ValidationError(f"cannot make {folds} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def select_local_optimum(scores: Sequence[float], rtol: float = 0.0) -> int:
    """Index of the first interior local minimum of ``scores``, else the global argmin.

    Point i qualifies when ``scores[i] <= scores[i - 1]`` and
    ``scores[i] <= scores[i + 1] + rtol * |scores[i]|``: with ``rtol > 0`` a
    right neighbour that improves by less than that relative amount does not
    count as an improvement. ``rtol=0`` is the plain local-minimum rule.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValidationError("no scores to select from")
    for i in range(1, s.size - 1):
        if s[i] <= s[i - 1] and s[i] <= s[i + 1] + rtol * abs(s[i]):
            return i
    return int(np.argmin(s))


def _cv_curve(X, grid, folds, seed, score_fn, config_fn, n_trials, rtol):
    if len(grid) == 0:
        raise ValidationError("parameter grid is empty")
    parts = fold_indices(X.shape[0], folds, seed)
    fold_scores = []
    for g, value in enumerate(grid):
        per_fold = []
        for f in range(folds):
            train = np.concatenate([parts[i] for i in range(folds) if i != f])
            held = parts[f]
            cfg = config_fn(value, train.size)
            model, _ = best_of_trials(X[train], cfg, n_trials, seed + 1 + f * n_trials)
            per_fold.append(score_fn(X[held], model, value))
        fold_scores.append(tuple(per_fold))
    means = tuple(float(np.mean(s)) for s in fold_scores)
    chosen = grid[select_local_optimum(means, rtol)]
    return CvCurve(tuple(grid), means, chosen, tuple(fold_scores))


def cv_select_k(
    m,
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    folds: int = 10,
    seed: int = 0,
    n_trials: int = DEFAULT_TRIALS,
    rtol: float = DEFAULT_K_RTOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init: str = "kmeans++",
) -> CvCurve:
    """Cross-validated k-means distortion over ``k_grid``.

    For every k and fold, k-means (best of ``n_trials`` seeds) is fit on the other
    folds and the held-out fold is scored by its distortion against the
    learned centroids. The chosen k is the first local optimum of the
    fold-averaged curve, see :func:`select_local_optimum`.

    Held-out distortion keeps creeping down past the true k (extra
    centroids still shave noise), so by default a step that improves the
    curve by less than 1% does not count as an improvement.
    """
    X = as_array(m)

    def config(k, n_train):
        if k > n_train:
            raise ValidationError(f"k={k} exceeds training fold size {n_train}")
        return FitConfig(Algorithm.KMEANS, int(k), max_iter, init)

    def score(held, model, k):
        return distortion(held, model)

    return _cv_curve(X, list(k_grid), folds, seed, score, config, n_trials, rtol)


def cv_select_lambda(
    m,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    folds: int = 10,
    seed: int = 0,
    n_trials: int = DEFAULT_TRIALS,
    rtol: float = 0.0,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CvCurve:
    """Cross-validated DP-means objective over ``lambda_grid``.

    Held-out points are assigned to the nearest learned centroid (no new
    clusters are opened at scoring time) and scored with the trained k.
    """
    X = as_array(m)

    def config(lam, n_train):
        return FitConfig(Algorithm.DPMEANS, float(lam), max_iter)

    def score(held, model, lam):
        return dp_objective(held, model)

    return _cv_curve(X, list(lambda_grid), folds, seed, score, config, n_trials, rtol)


# ---------------------------------------------------------------------------
# PCA


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca_fit(m, n_components: int = 3) -> PcaProjection:
    """Principal axes from the eigendecomposition of the sample covariance.

    Each component is flipped so its largest-magnitude entry is positive.
    """
    X = as_array(m)
    n, d = X.shape
    if n_components > d or n_components < 1:
        raise ValidationError(f"n_components must be in 1..{d}, got {n_components}")
    if n < 2:
        raise ValidationError("PCA needs at least 2 rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    components = _sign_fix(evecs[:, order].T)
    explained = np.maximum(evals[order], 0.0)
    return PcaProjection(mean, np.ascontiguousarray(components), explained)


def pca_transform(p: PcaProjection, m) -> np.ndarray:
    X = as_array(m)
    if X.ndim != 2 or X.shape[1] != p.mean.shape[0]:
        raise ValidationError(
            f"data has {X.shape[-1]} columns, projection expects {p.mean.shape[0]}"
        )
    return (X - p.mean) @ p.components.T


def pca_inverse_transform(p: PcaProjection, scores: np.ndarray) -> np.ndarray:
    return scores @ p.components + p.mean
