"""Player-statistics and match-history records, and their JSONL file formats.

Players file (one JSON object per line)::

    {"player_id": "p0001",
     "stats": {"games_played": 120.0, "wins": 64.0, ..., "first_bloods": 9.0},
     "character_usage": {"c017": 12}}            # optional

``stats`` must contain exactly the 21 keys of :data:`STAT_NAMES`.

Matches file::

    {"match_id": "m00001",
     "team1": ["p0001", ...5 ids], "team2": [...5 ids],
     "winner": "team1",                           # or "team2"
     "character_choices": {"p0001": "c017", ...}} # optional

The stat names are a stand-in schema: only the ordering has to be
consistent for clustering, so the list below is versioned rather than
tied to any particular game API.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, Sequence

from .errors import DanglingReferenceError, SchemaError, ValidationError

__all__ = [
    "STAT_NAMES", "N_STATS", "TEAM_SIZE", "Winner", "PlayerStatRecord", "MatchRecord",
    "Corpus", "parse_player_stats", "parse_matches", "link_corpus", "write_player_stats",
    "write_matches", "load_corpus",
]

SCHEMA_VERSION = 1
TEAM_SIZE = 5

STAT_NAMES: tuple[str, ...] = (
    "games_played",
    "wins",
    "kills",
    "deaths",
    "assists",
    "largest_killing_spree",
    "largest_multi_kill",
    "physical_damage_dealt",
    "magic_damage_dealt",
    "true_damage_dealt",
    "damage_taken",
    "healing_done",
    "gold_earned",
    "gold_spent",
    "minions_killed",
    "neutral_minions_killed",
    "turrets_killed",
    "crowd_control_time",
    "wards_placed",
    "time_spent_dead",
    "first_bloods",
)
N_STATS = len(STAT_NAMES)


class Winner(str, Enum):
    TEAM1 = "team1"
    TEAM2 = "team2"


@dataclass(frozen=True)
class PlayerStatRecord:
    player_id: str
    stats: tuple[float, ...]
    character_usage: dict[str, int] | None = None

    def __post_init__(self):
        if not isinstance(self.player_id, str) or not self.player_id:
            raise ValidationError("player_id must be a nonempty string")
        if len(self.stats) != N_STATS:
            raise SchemaError(
                f"player {self.player_id!r} has {len(self.stats)} stats, expected {N_STATS}"
            )
        for name, value in zip(STAT_NAMES, self.stats):
            if not math.isfinite(value) or value < 0:
                raise ValidationError(
                    f"player {self.player_id!r}: stat {name} = {value!r} is not a finite value >= 0"
                )


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    team1: tuple[str, ...]
    team2: tuple[str, ...]
    winner: Winner
    character_choices: dict[str, str] | None = None

    def __post_init__(self):
        if not isinstance(self.match_id, str) or not self.match_id:
            raise ValidationError("match_id must be a nonempty string")
        for name, team in (("team1", self.team1), ("team2", self.team2)):
            if len(team) != TEAM_SIZE:
                raise SchemaError(
                    f"match {self.match_id!r}: {name} has {len(team)} players, expected {TEAM_SIZE}"
                )
        everyone = self.team1 + self.team2
        if len(set(everyone)) != len(everyone):
            dupes = sorted({p for p in everyone if everyone.count(p) > 1})
            raise ValidationError(
                f"match {self.match_id!r}: players appear more than once: {', '.join(dupes)}"
            )
        if not isinstance(self.winner, Winner):
            raise SchemaError(f"match {self.match_id!r}: winner must be team1 or team2")

    @property
    def players(self) -> tuple[str, ...]:
        return self.team1 + self.team2

    def swapped(self) -> "MatchRecord":
        """Same match seen from the other side."""
        other = Winner.TEAM2 if self.winner is Winner.TEAM1 else Winner.TEAM1
        return MatchRecord(self.match_id, self.team2, self.team1, other, self.character_choices)


@dataclass(frozen=True)
class Corpus:
    players: tuple[PlayerStatRecord, ...]
    matches: tuple[MatchRecord, ...]

    def player_index(self) -> dict[str, int]:
        return {p.player_id: i for i, p in enumerate(self.players)}


# ---------------------------------------------------------------------------
# parsing


def _lines(stream: IO[str] | Iterable[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if line:
            yield lineno, line


def _load(line: str, lineno: int, source) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON ({exc.msg})", line=lineno, source=source) from None
    if not isinstance(obj, dict):
        raise SchemaError("record must be a JSON object", line=lineno, source=source)
    return obj


def player_from_dict(obj: dict) -> PlayerStatRecord:
    pid = obj.get("player_id")
    stats = obj.get("stats")
    if not isinstance(stats, dict):
        raise SchemaError(f"player {pid!r}: 'stats' must be an object of {N_STATS} named values")
    missing = [n for n in STAT_NAMES if n not in stats]
    extra = sorted(set(stats) - set(STAT_NAMES))
    if missing or extra:
        detail = []
        if missing:
            detail.append("missing " + ", ".join(missing))
        if extra:
            detail.append("unexpected " + ", ".join(extra))
        raise SchemaError(
            f"player {pid!r} has {len(stats)} stats, expected {N_STATS} ({'; '.join(detail)})"
        )
    values = []
    for name in STAT_NAMES:
        v = stats[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"player {pid!r}: stat {name} is not a number")
        values.append(float(v))
    usage = obj.get("character_usage")
    if usage is not None:
        if not isinstance(usage, dict):
            raise SchemaError(f"player {pid!r}: character_usage must be an object")
        usage = {str(k): int(v) for k, v in usage.items()}
    return PlayerStatRecord(pid, tuple(values), usage)


def match_from_dict(obj: dict) -> MatchRecord:
    mid = obj.get("match_id")
    team1, team2 = obj.get("team1"), obj.get("team2")
    if not isinstance(team1, list) or not isinstance(team2, list):
        raise SchemaError(f"match {mid!r}: team1 and team2 must be lists of player ids")
    try:
        winner = Winner(obj.get("winner"))
    except ValueError:
        raise SchemaError(f"match {mid!r}: winner must be 'team1' or 'team2'") from None
    choices = obj.get("character_choices")
    if choices is not None:
        if not isinstance(choices, dict):
            raise SchemaError(f"match {mid!r}: character_choices must be an object")
        choices = {str(k): str(v) for k, v in choices.items()}
    return MatchRecord(mid, tuple(map(str, team1)), tuple(map(str, team2)), winner, choices)


def parse_player_stats(stream: IO[str] | Iterable[str], source=None) -> list[PlayerStatRecord]:
    """Parse a players JSONL stream, validating every record.

    Errors carry the offending line number. Duplicate player ids are rejected.
    """
    out: list[PlayerStatRecord] = []
    seen: set[str] = set()
    for lineno, line in _lines(stream):
        obj = _load(line, lineno, source)
        try:
            rec = player_from_dict(obj)
        except ValidationError as exc:
            raise type(exc)(str(exc), line=lineno, source=source) from None
        if rec.player_id in seen:
            raise ValidationError(
                f"duplicate player_id {rec.player_id!r}", line=lineno, source=source
            )
        seen.add(rec.player_id)
        out.append(rec)
    return out


def parse_matches(stream: IO[str] | Iterable[str], source=None) -> list[MatchRecord]:
    out: list[MatchRecord] = []
    for lineno, line in _lines(stream):
        obj = _load(line, lineno, source)
        try:
            out.append(match_from_dict(obj))
        except ValidationError as exc:
            raise type(exc)(str(exc), line=lineno, source=source) from None
    return out


def link_corpus(
    players: Sequence[PlayerStatRecord], matches: Sequence[MatchRecord]
) -> Corpus:
    """Bundle players and matches, checking every match participant exists."""
    known = {p.player_id for p in players}
    if len(known) != len(players):
        raise ValidationError("duplicate player ids in player list")
    missing = set()
    for m in matches:
        missing.update(pid for pid in m.players if pid not in known)
    if missing:
        raise DanglingReferenceError(missing)
    return Corpus(tuple(players), tuple(matches))


# ---------------------------------------------------------------------------
# serialization


def player_to_dict(rec: PlayerStatRecord) -> dict:
    obj = {"player_id": rec.player_id, "stats": dict(zip(STAT_NAMES, rec.stats))}
    if rec.character_usage is not None:
        obj["character_usage"] = dict(rec.character_usage)
    return obj


def match_to_dict(rec: MatchRecord) -> dict:
    obj = {
        "match_id": rec.match_id,
        "team1": list(rec.team1),
        "team2": list(rec.team2),
        "winner": rec.winner.value,
    }
    if rec.character_choices is not None:
        obj["character_choices"] = dict(rec.character_choices)
    return obj


def write_player_stats(records: Iterable[PlayerStatRecord], stream: IO[str]) -> None:
    for rec in records:
        stream.write(json.dumps(player_to_dict(rec), separators=(",", ":")) + "\n")


def write_matches(records: Iterable[MatchRecord], stream: IO[str]) -> None:
    for rec in records:
        stream.write(json.dumps(match_to_dict(rec), separators=(",", ":")) + "\n")


def load_corpus(players_path, matches_path) -> Corpus:
    with open(players_path, encoding="utf-8") as fh:
        players = parse_player_stats(fh, source=players_path)
    with open(matches_path, encoding="utf-8") as fh:
        matches = parse_matches(fh, source=matches_path)
    return link_corpus(players, matches)
