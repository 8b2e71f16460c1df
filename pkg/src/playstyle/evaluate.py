"""Repeated hold-out evaluation and paired comparison against a baseline encoding."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import classify
from .classify import ModelKind
from .errors import PlaystyleError, ValidationError
from .features import StyleSource

log = logging.getLogger(__name__)

MAX_REDRAWS = 10


def holdout_indices(n: int, test_fraction: float = 0.1, seed: int = 0, y=None):
    """Seeded shuffle, then the first ``test_fraction`` of rows become the test set.

    When labels ``y`` are given and the training part lacks one of them,
    the split is redrawn (up to 10 times) with derived seeds.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must be strictly between 0 and 1")
    if n < 2:
        raise ValidationError("need at least 2 samples to split")
    n_test = min(max(int(round(test_fraction * n)), 1), n - 1)
    for attempt in range(MAX_REDRAWS):
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        perm = rng.permutation(n)
        test, train = perm[:n_test], perm[n_test:]
        if y is None or np.unique(np.asarray(y)[train]).size == 2:
            return train, test
    raise ValidationError(f"no split with both labels in training after {MAX_REDRAWS} draws")


def holdout_split(samples: Sequence, test_fraction: float = 0.1, seed: int = 0):
    """Split a sample list into (train, test) lists."""
    train, test = holdout_indices(len(samples), test_fraction, seed)
    return [samples[i] for i in train], [samples[i] for i in test]


def accuracy(predict_fn: Callable, X, y) -> float:
    """Fraction of rows whose predicted label equals ``y``."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValidationError("accuracy of an empty sample set is undefined")
    pred = np.asarray(predict_fn(X)).reshape(-1)
    return float(np.mean(pred == y))


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    train_acc: float
    test_acc: float
    wall_time: float


@dataclass(frozen=True)
class TrialSummary:
    model_kind: ModelKind
    feature_source: StyleSource
    trials: tuple[TrialResult, ...]

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(t.seed for t in self.trials)

    @property
    def mean_train_acc(self) -> float:
        return float(np.mean([t.train_acc for t in self.trials]))

    @property
    def mean_test_acc(self) -> float:
        return float(np.mean([t.test_acc for t in self.trials]))

    @property
    def mean_wall_time(self) -> float:
        return float(np.mean([t.wall_time for t in self.trials]))


def run_trials(
    X,
    y,
    model_kind: ModelKind | str,
    feature_source: StyleSource | str,
    n_trials: int = 20,
    base_seed: int = 0,
    test_fraction: float = 0.1,
    **train_options,
) -> TrialSummary:
    """Re-split with seed ``base_seed + i``, retrain and score, for each trial i.

    Only training is timed. Any failure aborts with the trial index.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be at least 1")
    kind, source = ModelKind(model_kind), StyleSource(feature_source)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    results = []
    for i in range(n_trials):
        seed = base_seed + i
        try:
            train, test = holdout_indices(len(y), test_fraction, seed, y)
            t0 = time.perf_counter()
            model = classify.train(kind, X[train], y[train], seed=seed, **train_options)
            elapsed = time.perf_counter() - t0
            predict = lambda rows: classify.predict(model, rows)  # noqa: E731
            results.append(
                TrialResult(
                    i,
                    seed,
                    accuracy(predict, X[train], y[train]),
                    accuracy(predict, X[test], y[test]),
                    elapsed,
                )
            )
        except PlaystyleError as exc:
            raise type(exc)(f"trial {i} (seed {seed}) failed: {exc}") from exc
        log.info(
            "%s/%s trial %d: train %.4f test %.4f (%.2fs)",
            kind.value, source.value, i, results[-1].train_acc, results[-1].test_acc, elapsed,
        )
    return TrialSummary(kind, source, tuple(results))


@dataclass(frozen=True)
class ComparisonReport:
    seeds: tuple[int, ...]
    differences: tuple[float, ...]
    mean_difference: float
    wins: int
    losses: int
    ties: int

    def to_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "differences": list(self.differences),
            "mean_difference": self.mean_difference,
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
        }


def baseline_compare(ours: TrialSummary, baseline: TrialSummary) -> ComparisonReport:
    """Paired per-seed test-accuracy differences (ours minus baseline)."""
    if ours.seeds != baseline.seeds:
        raise ValidationError("summaries were not run over the same trial seeds")
    diffs = tuple(a.test_acc - b.test_acc for a, b in zip(ours.trials, baseline.trials))
    return ComparisonReport(
        ours.seeds,
        diffs,
        float(np.mean(diffs)),
        sum(d > 0 for d in diffs),
        sum(d < 0 for d in diffs),
        sum(d == 0 for d in diffs),
    )
