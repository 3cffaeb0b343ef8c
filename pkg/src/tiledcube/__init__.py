"""Viewport-adaptive rate adaptation for tiled cubemap 360 video."""

from tiledcube.errors import DataError, RateTableError, TraceError
from tiledcube.geometry import (
    Face,
    PriorityMap,
    TileId,
    TileLayout,
    Viewport,
    assign_priorities,
    build_layout,
    fov_tiles,
)
from tiledcube.rd_model import QualityLadder, RateTable, RdPoint, fit_ladder, load_rate_table, total_bitrate
from tiledcube.adaptation import (
    AdaptationConfig,
    ChunkAssignment,
    adapt_chunk,
    adapt_session,
    optimize_exhaustive,
    quality_curve,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationConfig",
    "ChunkAssignment",
    "DataError",
    "Face",
    "PriorityMap",
    "QualityLadder",
    "RateTable",
    "RateTableError",
    "RdPoint",
    "TileId",
    "TileLayout",
    "TraceError",
    "Viewport",
    "adapt_chunk",
    "adapt_session",
    "assign_priorities",
    "build_layout",
    "fit_ladder",
    "fov_tiles",
    "load_rate_table",
    "optimize_exhaustive",
    "quality_curve",
    "total_bitrate",
]
