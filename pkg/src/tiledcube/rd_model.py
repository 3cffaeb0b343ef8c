"""Quality ladders, per-chunk rate tables and ladder fitting from R-D sweeps.

Rate-manifest CSV (header required)::

    chunk,tile,level,bitrate_bps[,psnr_db]

R-D sweep CSV::

    chunk,tile,qp,bitrate_bps,psnr_db
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from tiledcube.errors import RateTableError
from tiledcube.geometry import TileId

DEFAULT_TARGETS_DB = (38.0, 39.0, 40.0, 42.0, 45.0, 48.0)
DEFAULT_CHUNK_DURATION_S = 4.0

Key = tuple[int, TileId, int]


@dataclass(frozen=True)
class QualityLadder:
    """Target PSNR per quality level, lowest level first."""

    targets_db: tuple[float, ...] = DEFAULT_TARGETS_DB

    def __post_init__(self):
        targets = tuple(float(t) for t in self.targets_db)
        if not targets:
            raise ValueError("ladder needs at least one level")
        if any(b <= a for a, b in zip(targets, targets[1:])):
            raise ValueError(f"ladder targets must strictly increase: {targets}")
        object.__setattr__(self, "targets_db", targets)

    @property
    def levels(self) -> list[tuple[int, float]]:
        return list(enumerate(self.targets_db))

    @property
    def q_max(self) -> int:
        return len(self.targets_db) - 1


@dataclass(frozen=True)
class RdPoint:
    qp: int
    bitrate_bps: float
    psnr_db: float

    def __post_init__(self):
        if not self.bitrate_bps > 0:
            raise ValueError(f"bitrate must be positive: {self.bitrate_bps}")
        if not 0 < self.psnr_db < 100:
            raise ValueError(f"psnr out of range (0, 100): {self.psnr_db}")


class RateTable:
    """Bitrate per ``(chunk, tile, level)``, optionally with the PSNR of each entry.

    Every ``(chunk, tile)`` carries the full level range ``0..q_max`` and its
    bitrates never decrease with level. Violations raise :class:`RateTableError`.
    """

    def __init__(
        self,
        entries: Mapping[Key, float],
        chunk_duration_s: float = DEFAULT_CHUNK_DURATION_S,
        psnr: Mapping[Key, float] | None = None,
    ):
        if chunk_duration_s <= 0:
            raise ValueError("chunk duration must be positive")
        self._rates = {k: float(v) for k, v in entries.items()}
        self._psnr = {k: float(v) for k, v in psnr.items()} if psnr else {}
        self.chunk_duration_s = float(chunk_duration_s)

        ladders: dict[tuple[int, TileId], dict[int, float]] = defaultdict(dict)
        for (chunk, tile, level), rate in self._rates.items():
            if not rate > 0 or not math.isfinite(rate):
                raise RateTableError(f"bitrate must be positive at {(chunk, str(tile), level)}")
            ladders[(chunk, tile)][level] = rate
        self.q_max = max((lvl for *_, lvl in self._rates), default=-1)
        for (chunk, tile), ladder in ladders.items():
            for level in range(self.q_max + 1):
                if level not in ladder:
                    raise RateTableError(f"missing level: (chunk={chunk}, tile={tile}, level={level})")
            for level in range(1, self.q_max + 1):
                if ladder[level] < ladder[level - 1]:
                    raise RateTableError(
                        f"non-monotone ladder at (chunk={chunk}, tile={tile}, level={level}): "
                        f"{ladder[level]} < {ladder[level - 1]}"
                    )
        if self._psnr and set(self._psnr) != set(self._rates):
            raise RateTableError("psnr values must cover exactly the bitrate entries")
        self._tiles: dict[int, list[TileId]] = defaultdict(list)
        for chunk, tile in ladders:
            self._tiles[chunk].append(tile)

    def __len__(self) -> int:
        return len(self._rates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RateTable):
            return NotImplemented
        return (
            self._rates == other._rates
            and self._psnr == other._psnr
            and self.chunk_duration_s == other.chunk_duration_s
        )

    def __repr__(self) -> str:
        return f"RateTable({len(self)} entries, chunks={self.chunks}, q_max={self.q_max})"

    @property
    def chunks(self) -> list[int]:
        return sorted(self._tiles)

    @property
    def has_psnr(self) -> bool:
        return bool(self._psnr)

    def tiles(self, chunk: int) -> list[TileId]:
        return list(self._tiles.get(chunk, ()))

    def items(self) -> Iterable[tuple[Key, float]]:
        return self._rates.items()

    def bitrate(self, chunk: int, tile: TileId, level: int) -> float:
        try:
            return self._rates[(chunk, tile, level)]
        except KeyError:
            raise RateTableError(
                f"no rate entry for (chunk={chunk}, tile={tile}, level={level})"
            ) from None

    def psnr(self, chunk: int, tile: TileId, level: int) -> float:
        try:
            return self._psnr[(chunk, tile, level)]
        except KeyError:
            raise RateTableError(
                f"no psnr entry for (chunk={chunk}, tile={tile}, level={level})"
            ) from None


def total_bitrate(table: RateTable, assignment: Mapping[TileId, int], chunk: int) -> float:
    """Sum of the per-tile bitrates at the assigned levels (exactly rounded)."""
    return math.fsum(table.bitrate(chunk, tile, level) for tile, level in assignment.items())


def _pick_nearest(candidates: Sequence[RdPoint], target: float) -> RdPoint:
    # nearest psnr, then lower bitrate, then lower psnr, then lower qp
    return min(
        candidates,
        key=lambda p: (abs(p.psnr_db - target), p.bitrate_bps, p.psnr_db, p.qp),
    )


def select_ladder_points(points: Sequence[RdPoint], ladder: QualityLadder) -> list[RdPoint]:
    """Choose one R-D point per ladder level.

    Each level takes the point nearest its PSNR target. When that point would
    cost less than the level below it, the choice is restricted to points at
    least as expensive as the level below (which always includes that level's
    own point), so the result is monotone and refitting it is a no-op.
    """
    if not points:
        raise RateTableError("empty R-D point set")
    chosen: list[RdPoint] = []
    for _, target in ladder.levels:
        best = _pick_nearest(points, target)
        if chosen and best.bitrate_bps < chosen[-1].bitrate_bps:
            floor = chosen[-1].bitrate_bps
            best = _pick_nearest([p for p in points if p.bitrate_bps >= floor], target)
        chosen.append(best)
    return chosen


def fit_ladder(
    points: Mapping[tuple[int, TileId], Sequence[RdPoint]],
    ladder: QualityLadder,
    chunk_duration_s: float = DEFAULT_CHUNK_DURATION_S,
) -> RateTable:
    """Build a rate table by matching each ladder level to an R-D sweep point."""
    rates: dict[Key, float] = {}
    psnr: dict[Key, float] = {}
    for (chunk, tile), pts in sorted(points.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        if not pts:
            raise RateTableError(f"no R-D points for (chunk={chunk}, tile={tile})")
        for level, p in enumerate(select_ladder_points(pts, ladder)):
            rates[(chunk, tile, level)] = p.bitrate_bps
            psnr[(chunk, tile, level)] = p.psnr_db
    return RateTable(rates, chunk_duration_s, psnr)


def selected_points(
    points: Mapping[tuple[int, TileId], Sequence[RdPoint]], ladder: QualityLadder
) -> dict[tuple[int, TileId], list[RdPoint]]:
    """The distinct R-D points ``fit_ladder`` keeps for each ``(chunk, tile)``."""
    out = {}
    for key, pts in points.items():
        if not pts:
            raise RateTableError(f"no R-D points for (chunk={key[0]}, tile={key[1]})")
        out[key] = list(dict.fromkeys(select_ladder_points(pts, ladder)))
    return out


# -- CSV I/O -----------------------------------------------------------------


def _open_rows(path: str | Path, required: Sequence[str]):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise RateTableError(f"{path}: empty file, header required")
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in header]
        if missing:
            raise RateTableError(f"{path}: line 1: missing column(s) {missing}")
        reader.fieldnames = header
        for row in reader:
            yield reader.line_num, row


def _parse(value, kind, path, line, column):
    try:
        return kind(value.strip())
    except (AttributeError, ValueError):
        raise RateTableError(f"{path}: line {line}: bad {column} value {value!r}") from None


def load_rate_table(
    path: str | Path, chunk_duration_s: float = DEFAULT_CHUNK_DURATION_S
) -> RateTable:
    """Read a rate manifest, rejecting incomplete or non-monotone ladders.

    Errors name the offending line (``line N``, header is line 1).
    """
    rates: dict[Key, float] = {}
    psnr: dict[Key, float] = {}
    lines: dict[Key, int] = {}
    with_psnr = None
    for line, row in _open_rows(path, ("chunk", "tile", "level", "bitrate_bps")):
        chunk = _parse(row["chunk"], int, path, line, "chunk")
        try:
            tile = TileId.parse(row["tile"] or "")
        except ValueError as exc:
            raise RateTableError(f"{path}: line {line}: {exc}") from None
        level = _parse(row["level"], int, path, line, "level")
        rate = _parse(row["bitrate_bps"], float, path, line, "bitrate_bps")
        if chunk < 0 or level < 0:
            raise RateTableError(f"{path}: line {line}: negative chunk or level")
        if not rate > 0 or not math.isfinite(rate):
            raise RateTableError(f"{path}: line {line}: bitrate must be positive")
        key = (chunk, tile, level)
        if key in rates:
            raise RateTableError(f"{path}: line {line}: duplicate entry {(chunk, str(tile), level)}")
        rates[key] = rate
        lines[key] = line
        raw_psnr = (row.get("psnr_db") or "").strip()
        if with_psnr is None:
            with_psnr = bool(raw_psnr)
        if bool(raw_psnr) != with_psnr:
            raise RateTableError(f"{path}: line {line}: psnr_db must be given on all rows or none")
        if raw_psnr:
            psnr[key] = _parse(raw_psnr, float, path, line, "psnr_db")

    q_max = max((k[2] for k in rates), default=-1)
    by_tile: dict[tuple[int, TileId], set[int]] = defaultdict(set)
    for chunk, tile, level in rates:
        by_tile[(chunk, tile)].add(level)
    for (chunk, tile), levels in sorted(by_tile.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        for level in range(q_max + 1):
            if level not in levels:
                raise RateTableError(
                    f"{path}: missing level: (chunk={chunk}, tile={tile}, level={level})"
                )
        for level in range(1, q_max + 1):
            hi, lo = (chunk, tile, level), (chunk, tile, level - 1)
            if rates[hi] < rates[lo]:
                raise RateTableError(
                    f"{path}: line {lines[hi]}: non-monotone ladder at (chunk={chunk}, tile={tile}, "
                    f"level={level}): {rates[hi]:g} < {rates[lo]:g} (line {lines[lo]})"
                )
    return RateTable(rates, chunk_duration_s, psnr or None)


def format_number(x: float) -> str:
    """Shortest round-trip text for a float; integral values print without '.0'."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_rate_table(table: RateTable, path_or_file) -> None:
    """Write a rate manifest to a path or an open text file."""
    if not hasattr(path_or_file, "write"):
        with open(path_or_file, "w", newline="") as fh:
            return write_rate_table(table, fh)
    header = ["chunk", "tile", "level", "bitrate_bps"] + (["psnr_db"] if table.has_psnr else [])
    keys = sorted(table.items(), key=lambda kv: (kv[0][0], str(kv[0][1]), kv[0][2]))
    w = csv.writer(path_or_file, lineterminator="\n")
    w.writerow(header)
    for (chunk, tile, level), rate in keys:
        row = [chunk, str(tile), level, format_number(rate)]
        if table.has_psnr:
            row.append(format_number(table.psnr(chunk, tile, level)))
        w.writerow(row)


def load_rd_sweep(path: str | Path) -> dict[tuple[int, TileId], list[RdPoint]]:
    """Read an R-D sweep CSV into points grouped by ``(chunk, tile)``."""
    points: dict[tuple[int, TileId], list[RdPoint]] = defaultdict(list)
    for line, row in _open_rows(path, ("chunk", "tile", "qp", "bitrate_bps", "psnr_db")):
        chunk = _parse(row["chunk"], int, path, line, "chunk")
        try:
            tile = TileId.parse(row["tile"] or "")
            point = RdPoint(
                _parse(row["qp"], int, path, line, "qp"),
                _parse(row["bitrate_bps"], float, path, line, "bitrate_bps"),
                _parse(row["psnr_db"], float, path, line, "psnr_db"),
            )
        except ValueError as exc:
            raise RateTableError(f"{path}: line {line}: {exc}") from None
        points[(chunk, tile)].append(point)
    return dict(points)
