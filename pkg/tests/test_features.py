import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from playstyle import cluster, features, synth
from playstyle.cluster import Algorithm, ClusterModel
from playstyle.errors import UnknownCharacterError, ValidationError
from playstyle.features import CompositionSample, StyleMap, StyleSource
from playstyle.ingest import N_STATS, MatchRecord, PlayerStatRecord, Winner, link_corpus
from playstyle.preprocess import build_stat_matrix, min_max_normalize

TEAM1 = tuple(f"a{i}" for i in range(5))
TEAM2 = tuple(f"b{i}" for i in range(5))


def match(winner=Winner.TEAM1, choices=None):
    return MatchRecord("m1", TEAM1, TEAM2, winner, choices)


def style(assign, k):
    return StyleMap(dict(assign), k, StyleSource.KMEANS)


def test_worked_example():
    s = style([(p, 0) for p in TEAM1] + [(p, 7) for p in TEAM2], 8)
    sample = features.encode_match(match(), s)
    assert sample.x == (5, 0, 0, 0, 0, 0, 0, 0) + (0, 0, 0, 0, 0, 0, 0, 5)
    assert sample.y == 1
    assert features.encode_match(match(Winner.TEAM2), s) == CompositionSample(sample.x, 0)


def test_unmapped_player():
    s = style([(p, 0) for p in TEAM1], 2)
    with pytest.raises(ValidationError) as err:
        features.encode_corpus([match()], s)
    assert "m1" in str(err.value)


def test_style_map_range_checked():
    with pytest.raises(ValidationError):
        StyleMap({"x": 3}, 3, StyleSource.KMEANS)


@given(
    st.lists(st.integers(0, 4), min_size=10, max_size=10),
    st.sampled_from(list(Winner)),
)
def test_symmetry_and_conservation(styles, winner):
    s = style(zip(TEAM1 + TEAM2, styles), 5)
    m = match(winner)
    a = features.encode_match(m, s)
    b = features.encode_match(m.swapped(), s)
    features.check_sample(a)
    assert b.x == a.x[5:] + a.x[:5]
    assert b.y == 1 - a.y


def test_style_map_from_model():
    centroids = np.array([[0.0] * N_STATS, [1.0] * N_STATS, [0.5] * N_STATS, [0.25] * N_STATS])
    model = ClusterModel(centroids, Algorithm.KMEANS, 4, 0.0, 0, 0)
    ranges = np.column_stack([np.zeros(N_STATS), np.full(N_STATS, 10.0)])
    players = [
        PlayerStatRecord("on3", (2.5,) * N_STATS),
        PlayerStatRecord("tie", (7.5,) * N_STATS),
    ]
    model_tie = ClusterModel(
        np.array([[0.0] * N_STATS, [0.5] * N_STATS, [0.2] * N_STATS, [1.0] * N_STATS, [1.0] * N_STATS]),
        Algorithm.KMEANS, 5, 0.0, 0, 0,
    )
    assert features.build_style_map(model, ranges, players).mapping["on3"] == 3
    # 0.75 is equidistant from 0.5 (index 1) and 1.0 (indices 3, 4)
    assert features.build_style_map(model_tie, ranges, players).mapping["tie"] == 1


def test_style_map_reproduces_training_assignment(small_corpus):
    m = min_max_normalize(build_stat_matrix(small_corpus.players))
    model, assignment = cluster.kmeans_fit(m, 4, seed=1)
    smap = features.build_style_map(model, m.normalization, small_corpus.players)
    assert [smap.mapping[p.player_id] for p in small_corpus.players] == assignment.labels.tolist()
    assert smap.source is StyleSource.KMEANS


def test_official_classes():
    choices = {p: f"c{i}" for i, p in enumerate(TEAM1 + TEAM2)}
    table = {f"c{i}": 0 for i in range(10)}
    [smap] = features.official_style_map([match(choices=choices)], table)
    sample = features.encode_match(match(choices=choices), smap)
    assert sample.x == (5, 0, 0, 0, 0, 0) * 2
    del table["c3"]
    with pytest.raises(UnknownCharacterError) as err:
        features.official_style_map([match(choices=choices)], table)
    assert err.value.missing == ["c3"]


def test_official_needs_choices():
    with pytest.raises(ValidationError):
        features.official_style_map([match()], {})


def test_full_synthetic_encoding():
    spec = synth.SynthSpec(n_archetypes=3, n_players=400, n_matches=5000, seed=8)
    c = synth.generate(spec)
    assert len(c.class_table) == 120
    corpus = link_corpus(c.players, c.matches)
    smap = StyleMap(c.label_of, 3, StyleSource.KMEANS)
    samples = features.encode_corpus(corpus, smap)
    assert len(samples) == 5000
    for s in samples:
        features.check_sample(s)
    official = features.encode_corpus(corpus, features.official_style_map(c.matches, c.class_table))
    assert len(official) == 5000 and all(s.k == 6 for s in official)
    X, y = features.samples_to_arrays(samples)
    assert X.shape == (5000, 6) and X.dtype == np.float64 and y.dtype == np.int64


def test_small_corpora():
    s = style([(p, 0) for p in TEAM1 + TEAM2], 1)
    assert len(features.encode_corpus([match()], s)) == 1
    assert features.encode_corpus([], s) == []
    with pytest.raises(ValidationError):
        features.encode_corpus([match()], [s, s])
    assert features.column_names(2) == ["t1_s0", "t1_s1", "t2_s0", "t2_s1"]


def test_check_sample_rejects():
    with pytest.raises(ValidationError):
        features.check_sample(CompositionSample((4, 0, 5, 0), 1))
    with pytest.raises(ValidationError):
        features.check_sample(CompositionSample((5, 0, 5, 0), 2))
