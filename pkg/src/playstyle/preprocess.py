"""Turn player records into a min-max normalized observation matrix."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .ingest import STAT_NAMES, PlayerStatRecord


@dataclass(frozen=True, eq=False)
class StatMatrix:
    """n x d observations with column names, row ids and optional ranges.

    ``normalization`` is a ``(d, 2)`` array of per-column ``(min, max)``
    when the values have been scaled into [0, 1], else ``None``.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    row_ids: tuple[str, ...]
    normalization: np.ndarray | None = None

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValidationError("values must be a 2-D array")
        if v.shape[1] != len(self.column_names) or v.shape[0] != len(self.row_ids):
            raise ValidationError(
                f"shape {v.shape} does not match {len(self.row_ids)} rows x "
                f"{len(self.column_names)} columns"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def is_normalized(self) -> bool:
        return self.normalization is not None


def as_array(m) -> np.ndarray:
    """Observation values as a C-contiguous float64 array."""
    values = m.values if isinstance(m, StatMatrix) else m
    return np.ascontiguousarray(values, dtype=np.float64)


def build_stat_matrix(players: Sequence[PlayerStatRecord]) -> StatMatrix:
    if not players:
        raise ValidationError("cannot build a stat matrix from an empty player list")
    values = np.array([p.stats for p in players], dtype=np.float64)
    return StatMatrix(values, STAT_NAMES, tuple(p.player_id for p in players))


def _scale(values: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    lo, hi = ranges[:, 0], ranges[:, 1]
    span = hi - lo
    constant = span <= 0
    out = (values - lo) / np.where(constant, 1.0, span)
    out[:, constant] = 0.0
    return np.clip(out, 0.0, 1.0)


def min_max_normalize(m: StatMatrix) -> StatMatrix:
    """Map every column onto [0, 1] using its observed min and max.

    Constant columns become all zeros.
    """
    if m.is_normalized:
        raise ValidationError("matrix is already normalized")
    v = m.values
    if not np.all(np.isfinite(v)):
        raise ValidationError("stat matrix contains non-finite values")
    ranges = np.column_stack([v.min(axis=0), v.max(axis=0)])
    return replace(m, values=_scale(v, ranges), normalization=ranges)


def apply_normalization(m: StatMatrix, ranges) -> StatMatrix:
    """Normalize with externally supplied (e.g. training) ranges, clamping to [0, 1]."""
    ranges = np.asarray(ranges, dtype=np.float64)
    if ranges.shape != (m.shape[1], 2):
        raise ValidationError(
            f"ranges have shape {ranges.shape}, expected ({m.shape[1]}, 2)"
        )
    return replace(m, values=_scale(m.values, ranges), normalization=ranges)
