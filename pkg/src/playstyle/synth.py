"""Seeded synthetic corpora with planted play-style archetypes and outcomes.

Players are drawn around archetype means with spherical noise; match
winners are drawn from a logistic model on the true team compositions,
so the Bayes-optimal accuracy is known exactly. Official character
classes are assigned independently of archetypes, which makes them
uninformative about outcomes by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .ingest import N_STATS, TEAM_SIZE, MatchRecord, PlayerStatRecord, Winner

MIN_SEPARATION = 4.0
N_OFFICIAL_CLASSES = 6


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Generator settings.

    ``within_spread`` is the root-mean-square distance of a player from its
    archetype mean (per-stat standard deviation ``within_spread / sqrt(d)``).
    Archetype means are drawn in [0.1, 0.9]^d, pairwise at least
    ``separation * within_spread`` apart, unless given explicitly.
    ``outcome_weights`` has one entry per (team, archetype) count feature;
    team 1 wins with probability ``sigmoid(weights @ counts + intercept)``.
    """

    n_archetypes: int = 8
    stat_dim: int = N_STATS
    within_spread: float = 0.1
    separation: float = 5.0
    n_players: int = 2000
    n_matches: int = 10000
    outcome_weights: np.ndarray | None = None
    intercept: float = 0.0
    archetype_means: np.ndarray | None = None
    archetype_probs: np.ndarray | None = None
    column_scales: np.ndarray | None = None
    n_characters: int = 120
    seed: int = 0

    def __post_init__(self):
        A, d = self.n_archetypes, self.stat_dim
        if A < 1 or d < 1:
            raise ValidationError("need at least one archetype and one stat")
        if self.within_spread < 0:
            raise ValidationError("within_spread must be >= 0")
        if self.separation < MIN_SEPARATION:
            raise ValidationError(f"separation must be at least {MIN_SEPARATION} x spread")
        if self.outcome_weights is not None:
            w = np.asarray(self.outcome_weights, dtype=np.float64)
            if w.shape != (2 * A,) or not np.all(np.isfinite(w)):
                raise ValidationError(f"outcome_weights must be {2 * A} finite values")
        if not math.isfinite(self.intercept):
            raise ValidationError("intercept must be finite")
        if self.archetype_means is not None:
            mu = np.asarray(self.archetype_means, dtype=np.float64)
            if mu.shape != (A, d) or mu.min() < 0 or mu.max() > 1:
                raise ValidationError(f"archetype_means must be {A}x{d} with entries in [0, 1]")
        if self.archetype_probs is not None:
            p = np.asarray(self.archetype_probs, dtype=np.float64)
            if p.shape != (A,) or p.min() < 0 or not np.isclose(p.sum(), 1.0):
                raise ValidationError("archetype_probs must be a probability vector")

    @property
    def weights(self) -> np.ndarray:
        if self.outcome_weights is None:
            return np.zeros(2 * self.n_archetypes)
        return np.asarray(self.outcome_weights, dtype=np.float64)

    @property
    def probs(self) -> np.ndarray:
        if self.archetype_probs is None:
            return np.full(self.n_archetypes, 1.0 / self.n_archetypes)
        return np.asarray(self.archetype_probs, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SynthCorpus:
    spec: SynthSpec
    players: list[PlayerStatRecord]
    matches: list[MatchRecord]
    labels: np.ndarray
    archetype_means: np.ndarray
    win_probabilities: np.ndarray
    class_table: dict[str, int] = field(default_factory=dict)

    @property
    def label_of(self) -> dict[str, int]:
        return {p.player_id: int(l) for p, l in zip(self.players, self.labels)}


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def draw_archetype_means(spec: SynthSpec, rng, max_attempts: int = 2000) -> np.ndarray:
    """Archetype means honouring the separation constraint (by rejection)."""
    A, d = spec.n_archetypes, spec.stat_dim
    need = spec.separation * spec.within_spread
    if spec.archetype_means is not None:
        mu = np.asarray(spec.archetype_means, dtype=np.float64)
    else:
        mu = None
        for _ in range(max_attempts):
            cand = rng.uniform(0.1, 0.9, size=(A, d))
            if A == 1 or _min_pairwise(cand) >= need:
                mu = cand
                break
        if mu is None:
            raise ValidationError(
                f"could not place {A} archetypes {need:g} apart in {d} dimensions"
            )
    if A > 1 and _min_pairwise(mu) < need:
        raise ValidationError(f"archetype means are closer than {need:g}")
    return mu


def _min_pairwise(mu):
    diff = mu[:, None, :] - mu[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    return dist[np.triu_indices(mu.shape[0], 1)].min()


def player_id(i: int) -> str:
    return f"p{i:06d}"


def character_id(i: int) -> str:
    return f"c{i:03d}"


def gen_players(spec: SynthSpec, rng=None, means=None):
    """Players scattered around their archetype means.

    Returns ``(records, labels, means)``. Raw stats are clipped at zero and
    multiplied by ``column_scales`` when given.
    """
    if spec.stat_dim != N_STATS:
        raise ValidationError(f"player records carry {N_STATS} stats, spec has {spec.stat_dim}")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    mu = draw_archetype_means(spec, rng) if means is None else means
    labels = rng.choice(spec.n_archetypes, size=spec.n_players, p=spec.probs)
    sd = spec.within_spread / math.sqrt(spec.stat_dim)
    noise = rng.normal(0.0, 1.0, size=(spec.n_players, spec.stat_dim)) * sd
    values = np.maximum(mu[labels] + noise, 0.0)
    if spec.column_scales is not None:
        values = values * np.asarray(spec.column_scales, dtype=np.float64)
    players = [
        PlayerStatRecord(player_id(i), tuple(float(v) for v in row))
        for i, row in enumerate(values)
    ]
    return players, labels.astype(np.int64), mu


def composition_counts(labels_team1, labels_team2, n_archetypes: int) -> np.ndarray:
    return np.concatenate(
        [
            np.bincount(labels_team1, minlength=n_archetypes),
            np.bincount(labels_team2, minlength=n_archetypes),
        ]
    )


def gen_matches(spec: SynthSpec, players, labels, rng=None):
    """Matches of 10 distinct players with logistic-model winners.

    Returns ``(matches, win_probabilities, class_table)``. Every player also
    picks a character uniformly at random; the class table maps the
    ``n_characters`` characters to official classes at random.
    """
    n = len(players)
    if n < 2 * TEAM_SIZE:
        raise ValidationError(f"need at least {2 * TEAM_SIZE} players, got {n}")
    rng = np.random.default_rng([spec.seed, 1]) if rng is None else rng
    labels = np.asarray(labels)
    w, b, A = spec.weights, spec.intercept, spec.n_archetypes
    class_of = rng.integers(N_OFFICIAL_CLASSES, size=spec.n_characters)
    class_table = {character_id(c): int(k) for c, k in enumerate(class_of)}
    ids = [p.player_id for p in players]
    matches, probs = [], np.empty(spec.n_matches)
    for m in range(spec.n_matches):
        pick = rng.choice(n, size=2 * TEAM_SIZE, replace=False)
        chars = rng.integers(spec.n_characters, size=2 * TEAM_SIZE)
        x = composition_counts(labels[pick[:TEAM_SIZE]], labels[pick[TEAM_SIZE:]], A)
        p = float(_sigmoid(w @ x + b))
        probs[m] = p
        winner = Winner.TEAM1 if rng.random() < p else Winner.TEAM2
        matches.append(
            MatchRecord(
                f"m{m:07d}",
                tuple(ids[i] for i in pick[:TEAM_SIZE]),
                tuple(ids[i] for i in pick[TEAM_SIZE:]),
                winner,
                {ids[i]: character_id(c) for i, c in zip(pick, chars)},
            )
        )
    return matches, probs, class_table


def win_probabilities(spec: SynthSpec, matches, label_of: dict[str, int]) -> np.ndarray:
    """True team-1 win probability of each match under the generating model."""
    A = spec.n_archetypes
    X = np.array(
        [
            composition_counts(
                np.array([label_of[p] for p in m.team1]),
                np.array([label_of[p] for p in m.team2]),
                A,
            )
            for m in matches
        ],
        dtype=np.float64,
    ).reshape(len(matches), 2 * A)
    return _sigmoid(X @ spec.weights + spec.intercept)


def bayes_rate(spec: SynthSpec, matches, label_of: dict[str, int]) -> float:
    """Accuracy of the Bayes-optimal predictor: mean of max(p, 1 - p)."""
    p = win_probabilities(spec, matches, label_of)
    return float(np.mean(np.maximum(p, 1.0 - p)))


def generate(spec: SynthSpec) -> SynthCorpus:
    """Whole corpus from one generator stream seeded by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    players, labels, mu = gen_players(spec, rng)
    matches, probs, table = gen_matches(spec, players, labels, rng)
    return SynthCorpus(spec, players, matches, labels, mu, probs, table)


def strength_weights(strengths, scale: float = 1.0) -> np.ndarray:
    """Antisymmetric outcome weights: team 1 counts get +s, team 2 counts get -s."""
    s = np.asarray(strengths, dtype=np.float64) * scale
    return np.concatenate([s, -s])


def expected_bayes_rate(
    strengths, archetype_probs=None, scale: float = 1.0, n_samples: int = 20000, seed: int = 0
) -> float:
    """Monte-Carlo Bayes rate of antisymmetric weights over random compositions."""
    s = np.asarray(strengths, dtype=np.float64)
    A = s.size
    p = np.full(A, 1.0 / A) if archetype_probs is None else np.asarray(archetype_probs)
    rng = np.random.default_rng(seed)
    c1 = rng.multinomial(TEAM_SIZE, p, size=n_samples)
    c2 = rng.multinomial(TEAM_SIZE, p, size=n_samples)
    z = scale * ((c1 - c2) @ s)
    q = _sigmoid(z)
    return float(np.mean(np.maximum(q, 1.0 - q)))


def calibrate_scale(strengths, target: float, archetype_probs=None, seed: int = 0) -> float:
    """Scale for ``strength_weights`` whose expected Bayes rate hits ``target``."""
    if not 0.5 < target < 1.0:
        raise ValidationError("target Bayes rate must be in (0.5, 1)")
    lo, hi = 0.0, 1.0
    while expected_bayes_rate(strengths, archetype_probs, hi, seed=seed) < target:
        hi *= 2.0
        if hi > 1e6:
            raise ValidationError("target Bayes rate is unreachable with these strengths")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if expected_bayes_rate(strengths, archetype_probs, mid, seed=seed) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def planted_spec(
    n_archetypes: int = 8,
    n_players: int = 2000,
    n_matches: int = 10000,
    within_spread: float = 0.1,
    separation: float = 5.0,
    target_bayes_rate: float | None = 0.7,
    column_scales=None,
    seed: int = 0,
) -> SynthSpec:
    """Spec with random archetype strengths scaled to a target Bayes rate."""
    rng = np.random.default_rng([seed, 7])
    strengths = rng.normal(size=n_archetypes)
    strengths -= strengths.mean()
    if target_bayes_rate is None:
        weights = None
    else:
        weights = strength_weights(strengths, calibrate_scale(strengths, target_bayes_rate))
    return SynthSpec(
        n_archetypes=n_archetypes,
        within_spread=within_spread,
        separation=separation,
        n_players=n_players,
        n_matches=n_matches,
        outcome_weights=weights,
        column_scales=column_scales,
        seed=seed,
    )


def lambda_window(X: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Range of DP-means thresholds that can only produce the planted partition.

    Lower end: the largest within-archetype diameter, so no point can open a
    cluster next to its own archetype. Upper end: a lower bound on the
    distance from any point to the convex hull of another archetype (gap
    between projections onto the line joining the two means), so every
    archetype's first visited point opens a cluster. The window is empty
    when ``lo >= hi``.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    groups = [X[labels == a] for a in np.unique(labels)]
    lo = 0.0
    for g in groups:
        sq = (g * g).sum(1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * g @ g.T
        lo = max(lo, math.sqrt(max(d2.max(), 0.0)))
    hi = math.inf
    means = [g.mean(0) for g in groups]
    for a, ga in enumerate(groups):
        for b, gb in enumerate(groups):
            if a == b:
                continue
            u = means[b] - means[a]
            u /= np.linalg.norm(u)
            hi = min(hi, (gb @ u).min() - (ga @ u).max())
    return lo, hi


def with_seed(spec: SynthSpec, seed: int) -> SynthSpec:
    return replace(spec, seed=seed)
