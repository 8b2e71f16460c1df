"""Team-composition features: per-team style counts, concatenated, plus the win label."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .cluster import ClusterModel, assign
from .errors import UnknownCharacterError, ValidationError
from .ingest import TEAM_SIZE, Corpus, MatchRecord, PlayerStatRecord, Winner
from .preprocess import apply_normalization, build_stat_matrix

N_OFFICIAL_CLASSES = 6


class StyleSource(str, Enum):
    KMEANS = "kmeans"
    DPMEANS = "dpmeans"
    OFFICIAL = "official"


@dataclass(frozen=True)
class StyleMap:
    mapping: Mapping[str, int]
    k: int
    source: StyleSource

    def __post_init__(self):
        bad = [pid for pid, s in self.mapping.items() if not 0 <= s < self.k]
        if bad:
            raise ValidationError(f"style index out of range for players: {', '.join(sorted(bad))}")


@dataclass(frozen=True)
class CompositionSample:
    x: tuple[int, ...]
    y: int

    @property
    def k(self) -> int:
        return len(self.x) // 2


def build_style_map(
    model: ClusterModel, ranges, players: Sequence[PlayerStatRecord]
) -> StyleMap:
    """Normalize each player with the training ranges and take the nearest centroid."""
    m = apply_normalization(build_stat_matrix(players), ranges)
    labels, _ = assign(m, model.centroids)
    source = StyleSource(model.algorithm.value)
    return StyleMap(
        {p.player_id: int(l) for p, l in zip(players, labels)}, model.k, source
    )


def official_style_map(
    matches: Sequence[MatchRecord], class_table: Mapping[str, int]
) -> list[StyleMap]:
    """Per-match styles from the official class of the character each player picked."""
    missing: set[str] = set()
    out = []
    for m in matches:
        if m.character_choices is None:
            raise ValidationError(f"match {m.match_id!r} has no character choices")
        mapping = {}
        for pid in m.players:
            char = m.character_choices.get(pid)
            if char is None:
                raise ValidationError(f"match {m.match_id!r}: no character for player {pid!r}")
            if char not in class_table:
                missing.add(char)
                continue
            mapping[pid] = int(class_table[char])
        out.append(StyleMap(mapping, N_OFFICIAL_CLASSES, StyleSource.OFFICIAL))
    if missing:
        raise UnknownCharacterError(missing)
    return out


def encode_match(match: MatchRecord, style: StyleMap, k: int | None = None) -> CompositionSample:
    k = style.k if k is None else k
    counts = [0] * (2 * k)
    for offset, team in ((0, match.team1), (k, match.team2)):
        for pid in team:
            s = style.mapping.get(pid)
            if s is None:
                raise ValidationError(f"match {match.match_id!r}: player {pid!r} has no style")
            if not 0 <= s < k:
                raise ValidationError(f"match {match.match_id!r}: style {s} out of range for k={k}")
            counts[offset + s] += 1
    return CompositionSample(tuple(counts), 1 if match.winner is Winner.TEAM1 else 0)


def encode_corpus(
    corpus: Corpus | Sequence[MatchRecord],
    style: StyleMap | Sequence[StyleMap],
    k: int | None = None,
) -> list[CompositionSample]:
    """Encode every match in order.

    ``style`` is either one map for all matches or one map per match (the
    official-class encoding).
    """
    matches = corpus.matches if isinstance(corpus, Corpus) else corpus
    per_match = not isinstance(style, StyleMap)
    if per_match and len(style) != len(matches):
        raise ValidationError("need exactly one style map per match")
    out = []
    for i, m in enumerate(matches):
        s = style[i] if per_match else style
        try:
            out.append(encode_match(m, s, k))
        except ValidationError as exc:
            raise ValidationError(f"encoding failed at match {m.match_id!r}: {exc}") from exc
    return out


def samples_to_arrays(samples: Sequence[CompositionSample]) -> tuple[np.ndarray, np.ndarray]:
    """Float feature matrix and integer label vector."""
    if not samples:
        return np.empty((0, 0)), np.empty(0, dtype=np.int64)
    X = np.array([s.x for s in samples], dtype=np.float64)
    y = np.array([s.y for s in samples], dtype=np.int64)
    return X, y


def column_names(k: int) -> list[str]:
    return [f"t1_s{i}" for i in range(k)] + [f"t2_s{i}" for i in range(k)]


def check_sample(sample: CompositionSample) -> None:
    k = sample.k
    if sum(sample.x[:k]) != TEAM_SIZE or sum(sample.x[k:]) != TEAM_SIZE:
        raise ValidationError("each team's counts must sum to 5")
    if sample.y not in (0, 1):
        raise ValidationError("label must be 0 or 1")
