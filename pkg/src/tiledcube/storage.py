"""Server storage cost of tiled cubemap versus per-viewport offset-cubemap.

Offset-cubemap keeps one full encode per (viewport, bandwidth profile) pair;
the tiled scheme keeps each tile once per quality level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from tiledcube.rd_model import RateTable


@dataclass(frozen=True)
class StorageScenario:
    duration_s: float
    offset_bitrates_bps: Sequence[float] = (2e6, 4e6, 10e6)
    n_viewports: int = 30
    ladder_levels: int = 6

    def __post_init__(self):
        object.__setattr__(self, "offset_bitrates_bps", tuple(float(b) for b in self.offset_bitrates_bps))
        if self.n_viewports < 1 or self.ladder_levels < 1 or not self.offset_bitrates_bps:
            raise ValueError("viewport, profile and level counts must be at least 1")
        if any(not b > 0 for b in self.offset_bitrates_bps):
            raise ValueError("offset bitrates must be positive")
        if not self.duration_s > 0:
            raise ValueError("duration must be positive")

    @property
    def n_profiles(self) -> int:
        return len(self.offset_bitrates_bps)

    @property
    def offset_versions(self) -> int:
        return self.n_viewports * self.n_profiles


def storage_offset_cubemap(s: StorageScenario) -> float:
    """Bytes for every viewport encoded once per bandwidth profile."""
    return s.n_viewports * math.fsum(b * s.duration_s / 8.0 for b in s.offset_bitrates_bps)


def storage_tiled_cubemap(table: RateTable, duration_s: float | None = None) -> float:
    """Bytes for every (chunk, tile, level) entry of the table.

    When ``duration_s`` differs from the span the table covers, the total is
    scaled linearly to it.
    """
    total = math.fsum(rate * table.chunk_duration_s / 8.0 for _, rate in table.items())
    if duration_s is None or not len(table):
        return total
    covered = len(table.chunks) * table.chunk_duration_s
    return total * duration_s / covered


def storage_savings_percent(offset_bytes: float, tiled_bytes: float) -> float:
    """How much larger offset-cubemap storage is, as a percentage of tiled storage."""
    if tiled_bytes == 0:
        raise ZeroDivisionError("tiled storage is zero")
    return 100.0 * (offset_bytes - tiled_bytes) / tiled_bytes


def mb_per_min(n_bytes: float, duration_s: float) -> float:
    """Decimal megabytes per minute of content."""
    return n_bytes / 1e6 * 60.0 / duration_s
