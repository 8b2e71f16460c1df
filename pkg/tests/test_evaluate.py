import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from playstyle import evaluate
from playstyle.classify import ModelKind
from playstyle.errors import ValidationError
from playstyle.evaluate import TrialResult, TrialSummary
from playstyle.features import StyleSource


@given(st.integers(2, 500), st.floats(0.01, 0.99), st.integers(0, 2**20))
def test_split_partition(n, frac, seed):
    train, test = evaluate.holdout_indices(n, frac, seed)
    assert len(train) > 0 and len(test) > 0
    assert sorted(np.concatenate([train, test]).tolist()) == list(range(n))


def test_split_examples():
    train, test = evaluate.holdout_split(list(range(10)), 0.1, seed=3)
    assert (len(train), len(test)) == (9, 1)
    assert evaluate.holdout_split(list(range(10)), 0.1, seed=3) == (train, test)
    for bad in (0.0, 1.0):
        with pytest.raises(ValidationError):
            evaluate.holdout_indices(10, bad)
    with pytest.raises(ValidationError):
        evaluate.holdout_indices(1, 0.5)


def test_split_redraws_for_labels():
    y = np.array([0] * 9 + [1])
    for seed in range(20):
        train, _ = evaluate.holdout_indices(10, 0.1, seed, y)
        assert set(y[train]) == {0, 1}
    with pytest.raises(ValidationError):
        evaluate.holdout_indices(2, 0.5, 0, np.array([0, 1]))


def test_accuracy():
    y = np.array([0, 1] * 10)
    assert evaluate.accuracy(lambda X: np.ones(len(X)), np.zeros((20, 1)), y) == 0.5
    assert evaluate.accuracy(lambda X: y, np.zeros((20, 1)), y) == 1.0
    pred = np.array([0, 1, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0])
    manual = sum(int(p == t) for p, t in zip(pred, y)) / 20
    assert evaluate.accuracy(lambda X: pred, np.zeros((20, 1)), y) == manual
    with pytest.raises(ValidationError):
        evaluate.accuracy(lambda X: X, np.zeros((0, 1)), np.array([]))


def planted(n=1500, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X @ np.array([1.5, -1.0, 0.5, 0.0]) + 0.5 * rng.normal(size=n) > 0).astype(int)
    return X, y


@pytest.mark.parametrize("kind", ["lr", "gda", "svm"])
def test_trials_beat_chance(kind):
    X, y = planted()
    summary = evaluate.run_trials(X, y, kind, "kmeans", n_trials=3, C=1.0) if kind == "svm" else (
        evaluate.run_trials(X, y, kind, "kmeans", n_trials=3)
    )
    assert summary.n_trials == 3 and summary.seeds == (0, 1, 2)
    assert summary.mean_test_acc >= 0.6
    assert summary.mean_test_acc == pytest.approx(np.mean([t.test_acc for t in summary.trials]), abs=1e-12)
    for t in summary.trials:
        assert 0 <= t.train_acc <= 1 and 0 <= t.test_acc <= 1 and t.wall_time >= 0


def test_single_trial_is_one_split():
    from playstyle import classify

    X, y = planted(300)
    summary = evaluate.run_trials(X, y, "gda", "dpmeans", n_trials=1, base_seed=9)
    train, test = evaluate.holdout_indices(len(y), 0.1, 9, y)
    model = classify.gda_fit(X[train], y[train])
    assert summary.trials[0].test_acc == np.mean(classify.predict(model, X[test]) == y[test])


def test_trials_reproducible():
    X, y = planted(400)
    a = evaluate.run_trials(X, y, "lr", "kmeans", n_trials=3, base_seed=5)
    b = evaluate.run_trials(X, y, "lr", "kmeans", n_trials=3, base_seed=5)
    assert [(t.train_acc, t.test_acc) for t in a.trials] == [(t.train_acc, t.test_acc) for t in b.trials]


def test_failed_trial_names_index():
    X = np.zeros((20, 2))
    y = np.array([0, 1] * 10)
    with pytest.raises(ValidationError) as err:
        evaluate.run_trials(X, y, "svm", "kmeans", n_trials=2, C=-1.0)
    assert "trial 0" in str(err.value)


def summary(accs, seeds=None, source=StyleSource.KMEANS):
    seeds = seeds or range(len(accs))
    return TrialSummary(
        ModelKind.LR, source, tuple(TrialResult(i, s, 0.9, a, 0.0) for i, (s, a) in enumerate(zip(seeds, accs)))
    )


def test_compare():
    same = summary([0.6, 0.7])
    assert evaluate.baseline_compare(same, same).mean_difference == 0.0
    ours, base = summary([0.75, 0.70]), summary([0.55, 0.60], source=StyleSource.OFFICIAL)
    rep = evaluate.baseline_compare(ours, base)
    assert rep.mean_difference == pytest.approx(0.15, abs=1e-12)
    assert (rep.wins, rep.losses, rep.ties) == (2, 0, 0)
    assert evaluate.baseline_compare(base, ours).mean_difference == -rep.mean_difference
    with pytest.raises(ValidationError):
        evaluate.baseline_compare(ours, summary([0.5, 0.5], seeds=[3, 4]))
    assert rep.to_dict()["seeds"] == [0, 1]
