"""Trace-driven streaming sessions: per-chunk adaptation plus aggregate stats."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from tiledcube.adaptation import AdaptationConfig, ChunkAssignment, adapt_session
from tiledcube.errors import DataError, TraceError
from tiledcube.geometry import Face, TileLayout, Viewport
from tiledcube.rd_model import RateTable, format_number

ASSIGNMENT_COLUMNS = (
    "chunk", "tile", "priority", "level", "bitrate_bps",
    "sigma_max", "q_max_used", "utility", "feasible",
)


def _check_chunks(indices: Sequence[int], what: str):
    for expect, got in enumerate(indices):
        if got != expect:
            raise TraceError(f"{what} trace: expected chunk {expect}, got {got}")


@dataclass(frozen=True)
class ViewportTrace:
    entries: tuple[tuple[int, Viewport], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        _check_chunks([c for c, _ in self.entries], "viewport")

    @property
    def viewports(self) -> list[Viewport]:
        return [vp for _, vp in self.entries]

    @classmethod
    def constant(cls, vp: Viewport, n_chunks: int) -> "ViewportTrace":
        return cls(tuple((i, vp) for i in range(n_chunks)))

    @classmethod
    def load(cls, path: str | Path, hfov_deg: float = 90.0) -> "ViewportTrace":
        """Read ``chunk,yaw_deg,pitch_deg`` rows."""
        rows = []
        for line, row in _rows(path, ("chunk", "yaw_deg", "pitch_deg")):
            try:
                vp = Viewport(float(row["yaw_deg"]), float(row["pitch_deg"]), hfov_deg)
                rows.append((int(row["chunk"]), vp))
            except (TypeError, ValueError) as exc:
                raise TraceError(f"{path}: line {line}: {exc}") from None
        return cls(tuple(rows))


@dataclass(frozen=True)
class BandwidthTrace:
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(c), float(b)) for c, b in self.entries))
        _check_chunks([c for c, _ in self.entries], "bandwidth")
        for c, b in self.entries:
            if not b > 0 or not math.isfinite(b):
                raise TraceError(f"bandwidth for chunk {c} must be positive, got {b}")

    @property
    def values(self) -> list[float]:
        return [b for _, b in self.entries]

    @classmethod
    def constant(cls, bandwidth_bps: float, n_chunks: int) -> "BandwidthTrace":
        return cls(tuple((i, bandwidth_bps) for i in range(n_chunks)))

    @classmethod
    def load(cls, path: str | Path) -> "BandwidthTrace":
        rows = []
        for line, row in _rows(path, ("chunk", "bandwidth_bps")):
            try:
                rows.append((int(row["chunk"]), float(row["bandwidth_bps"])))
            except (TypeError, ValueError) as exc:
                raise TraceError(f"{path}: line {line}: {exc}") from None
        return cls(tuple(rows))


def _rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise TraceError(f"{path}: empty file, header required")
        reader.fieldnames = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise TraceError(f"{path}: line 1: missing column(s) {missing}")
        for row in reader:
            yield reader.line_num, row


@dataclass
class SessionReport:
    assignments: list[ChunkAssignment]
    mean_utility: float
    priority_mean_levels: dict[int, float]
    mean_weighted_psnr_db: float | None = None
    face_psnr_db: dict[Face, float] | None = None
    chunk_totals_bps: dict[int, float] = field(default_factory=dict)


def _psnr_stats(layout: TileLayout, table: RateTable, assignments: Sequence[ChunkAssignment]):
    weights = layout.weights
    overall, per_face = [], defaultdict(list)
    for a in assignments:
        psnr = {t: table.psnr(a.chunk_index, t, lvl) for t, lvl in a.levels.items()}
        total_w = sum(weights[t] for t in psnr)
        overall.append(math.fsum(weights[t] * p for t, p in psnr.items()) / total_w)
        by_face = defaultdict(list)
        for t, p in psnr.items():
            by_face[t.face].append((weights[t], p))
        for face, vals in by_face.items():
            per_face[face].append(math.fsum(w * p for w, p in vals) / sum(w for w, _ in vals))
    mean = math.fsum(overall) / len(overall)
    faces = {f: math.fsum(v) / len(v) for f, v in per_face.items()}
    return mean, {f: faces[f] for f in Face if f in faces}


def summarize(
    layout: TileLayout, table: RateTable, assignments: Sequence[ChunkAssignment]
) -> SessionReport:
    """Aggregate chunk assignments into a report."""
    if not assignments:
        raise DataError("no chunk assignments to summarize")
    by_prio = defaultdict(list)
    for a in assignments:
        for t, lvl in a.levels.items():
            by_prio[a.priorities[t]].append(lvl)
    report = SessionReport(
        assignments=list(assignments),
        mean_utility=math.fsum(a.utility for a in assignments) / len(assignments),
        priority_mean_levels={p: sum(v) / len(v) for p, v in sorted(by_prio.items())},
        chunk_totals_bps={a.chunk_index: a.total_bitrate_bps for a in assignments},
    )
    if table.has_psnr:
        report.mean_weighted_psnr_db, report.face_psnr_db = _psnr_stats(layout, table, assignments)
    return report


def run_session(
    layout: TileLayout,
    rates: RateTable,
    vtrace: ViewportTrace,
    btrace: BandwidthTrace,
    cfg: AdaptationConfig = AdaptationConfig(),
    oracle: bool = False,
) -> SessionReport:
    chunks = rates.chunks
    if chunks != list(range(len(chunks))):
        raise TraceError(f"rate table chunks must be 0..N-1, got {chunks}")
    for name, trace in (("viewport", vtrace), ("bandwidth", btrace)):
        if len(trace.entries) != len(chunks):
            raise TraceError(
                f"{name} trace covers {len(trace.entries)} chunks, rate table has {len(chunks)}"
            )
    assignments = adapt_session(layout, vtrace.viewports, rates, btrace.values, cfg, oracle=oracle)
    return summarize(layout, rates, assignments)


@dataclass
class PolicyComparison:
    psnr_ladder: SessionReport
    qp_ladder: SessionReport
    face_psnr_diff_db: dict[Face, float]
    weighted_psnr_diff_db: float


def compare_policies(
    layout: TileLayout,
    rates_psnr_ladder: RateTable,
    rates_qp_ladder: RateTable,
    vtrace: ViewportTrace,
    btrace: BandwidthTrace,
    cfg: AdaptationConfig = AdaptationConfig(),
) -> PolicyComparison:
    """Run the same traces over a PSNR-targeted and a fixed-QP ladder.

    Differences are PSNR-ladder minus QP-ladder, in dB.
    """
    for name, t in (("PSNR", rates_psnr_ladder), ("QP", rates_qp_ladder)):
        if not t.has_psnr:
            raise DataError(f"{name} ladder table carries no psnr_db values")
    cover_a = {(c, t) for c in rates_psnr_ladder.chunks for t in rates_psnr_ladder.tiles(c)}
    cover_b = {(c, t) for c in rates_qp_ladder.chunks for t in rates_qp_ladder.tiles(c)}
    if cover_a != cover_b:
        raise DataError("PSNR and QP ladder tables cover different (chunk, tile) sets")
    a = run_session(layout, rates_psnr_ladder, vtrace, btrace, cfg)
    b = run_session(layout, rates_qp_ladder, vtrace, btrace, cfg)
    diff = {f: a.face_psnr_db[f] - b.face_psnr_db[f] for f in a.face_psnr_db}
    return PolicyComparison(a, b, diff, a.mean_weighted_psnr_db - b.mean_weighted_psnr_db)


# -- CSV output ----------------------------------------------------------------


def write_assignments(
    assignments: Sequence[ChunkAssignment], table: RateTable, path_or_file
) -> None:
    """``chunk,tile,priority,level,bitrate_bps,sigma_max,q_max_used,utility,feasible``."""
    rows = [ASSIGNMENT_COLUMNS]
    for a in assignments:
        for t, lvl in a.levels.items():
            rows.append((
                a.chunk_index, str(t), a.priorities.get(t, ""), lvl,
                format_number(table.bitrate(a.chunk_index, t, lvl)),
                format_number(a.sigma_max), a.q_max_used, format_number(a.utility),
                int(a.feasible),
            ))
    _write(rows, path_or_file)


def write_report(report: SessionReport, path_or_file) -> None:
    """Per-priority mean levels, then ``metric,value`` summary rows."""
    rows: list[tuple] = [("priority", "mean_level")]
    rows += [(p, format_number(v)) for p, v in report.priority_mean_levels.items()]
    rows.append(("metric", "value"))
    rows.append(("chunks", len(report.assignments)))
    rows.append(("mean_utility", format_number(report.mean_utility)))
    rows.append(("infeasible_chunks", sum(not a.feasible for a in report.assignments)))
    if report.mean_weighted_psnr_db is not None:
        rows.append(("mean_weighted_psnr_db", format_number(report.mean_weighted_psnr_db)))
        for face, v in report.face_psnr_db.items():
            rows.append((f"face_psnr_db:{face.value}", format_number(v)))
    for chunk, total in report.chunk_totals_bps.items():
        rows.append((f"total_bitrate_bps:{chunk}", format_number(total)))
    _write(rows, path_or_file)


def _write(rows, path_or_file):
    if hasattr(path_or_file, "write"):
        csv.writer(path_or_file, lineterminator="\n").writerows(rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
