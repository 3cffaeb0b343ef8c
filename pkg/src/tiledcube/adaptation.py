"""Gaussian quality-degradation rate adaptation over a tiled cubemap.

A chunk's tiles get quality ``round(q_max * exp(-P**2 / (2 * sigma**2)))``,
where ``P`` is the tile's priority. The heuristic raises ``sigma`` (flattening
the curve) in fixed steps while the chunk still fits the bandwidth, and lowers
``q_max`` only when even the steepest curve does not fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from tiledcube.errors import TraceError
from tiledcube.geometry import PriorityMap, TileId, TileLayout, Viewport, assign_priorities
from tiledcube.rd_model import QualityLadder, RateTable, total_bitrate


@dataclass(frozen=True)
class AdaptationConfig:
    q_max_initial: int = 5
    sigma_init: float = 0.1
    sigma_step: float = 0.1
    sigma_cap: float = 1000.0

    def __post_init__(self):
        if self.sigma_init <= 0:
            raise ValueError("sigma_init must be positive")
        if self.sigma_step <= 0:
            raise ValueError("sigma_step must be positive")
        if self.q_max_initial < 0:
            raise ValueError("q_max_initial must be non-negative")
        if self.sigma_cap < self.sigma_init:
            raise ValueError("sigma_cap must be at least sigma_init")


@dataclass
class ChunkAssignment:
    chunk_index: int
    levels: dict[TileId, int]
    sigma_max: float
    q_max_used: int
    utility: float
    total_bitrate_bps: float
    feasible: bool
    priorities: dict[TileId, int] = field(default_factory=dict)
    bandwidth_bps: float | None = None


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def quality_curve(q_max: int, priority: int, sigma: float) -> int:
    """Rounded quality level of a tile with the given priority.

    >>> quality_curve(5, 1, 1.0)
    3
    """
    if q_max < 0 or priority < 0:
        raise ValueError("q_max and priority must be non-negative")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if priority == 0:
        return q_max
    spread = 2.0 * sigma**2
    if spread == 0:  # also catches subnormal sigma
        return 0
    return round_half_up(q_max * math.exp(-(priority**2) / spread))


def _levels(tiles, priorities: PriorityMap, q_max: int, sigma: float) -> dict[TileId, int]:
    return {t: quality_curve(q_max, priorities[t], sigma) for t in tiles}


def _utility(layout: TileLayout, levels: Mapping[TileId, int]) -> float:
    return layout.weighted_mean(levels)


def _check_inputs(layout, priorities, table, chunk, q_max):
    missing = [str(t) for t in layout.tiles if t not in priorities.priorities]
    if missing:
        raise ValueError(f"priorities missing for tiles {missing}")
    if chunk not in table.chunks:
        raise TraceError(f"chunk {chunk} not in rate table")
    if q_max > table.q_max:
        raise ValueError(f"q_max {q_max} exceeds the rate table's top level {table.q_max}")


def _infeasible(layout, priorities, table, chunk, bandwidth_bps) -> ChunkAssignment:
    zeros = {t: 0 for t in layout.tiles}
    return ChunkAssignment(
        chunk_index=chunk,
        levels=zeros,
        sigma_max=0.0,
        q_max_used=0,
        utility=0.0,
        total_bitrate_bps=total_bitrate(table, zeros, chunk),
        feasible=False,
        priorities={t: priorities[t] for t in layout.tiles},
        bandwidth_bps=bandwidth_bps,
    )


def adapt_chunk(
    layout: TileLayout,
    priorities: PriorityMap,
    table: RateTable,
    chunk: int,
    bandwidth_bps: float,
    cfg: AdaptationConfig = AdaptationConfig(),
) -> ChunkAssignment:
    """Pick per-tile quality levels for one chunk under a bandwidth budget.

    Scans sigma upwards from ``sigma_init`` in ``sigma_step`` increments,
    keeping the last sigma whose rounded assignment fits ``bandwidth_bps``.
    If the very first sigma does not fit, ``q_max`` is decremented and the
    scan restarts. The scan stops at the first infeasible sigma, or once every
    tile is at ``q_max``. When nothing fits even at ``q_max = 0`` the result
    has ``feasible=False`` and every tile at level 0.

    Raises:
        RateTableError: a needed ``(chunk, tile, level)`` entry is missing.
        RuntimeError: sigma passed ``sigma_cap`` without terminating.
    """
    q_max = cfg.q_max_initial
    _check_inputs(layout, priorities, table, chunk, q_max)
    tiles = layout.tiles
    n = 0  # sigma = sigma_init + n * sigma_step, avoids accumulated float drift
    sigma_max = 0.0
    best: dict[TileId, int] | None = None
    while True:
        sigma = cfg.sigma_init + n * cfg.sigma_step
        if sigma > cfg.sigma_cap:
            raise RuntimeError(f"sigma scan exceeded cap {cfg.sigma_cap} on chunk {chunk}")
        levels = _levels(tiles, priorities, q_max, sigma)
        utility = _utility(layout, levels)
        if total_bitrate(table, levels, chunk) <= bandwidth_bps:
            sigma_max, best = sigma, levels
            n += 1
            if not utility < q_max:  # every tile already at q_max
                break
        elif sigma_max == 0 and q_max > 0:
            n = 0
            q_max -= 1
        else:
            break

    if best is None:
        return _infeasible(layout, priorities, table, chunk, bandwidth_bps)
    return ChunkAssignment(
        chunk_index=chunk,
        levels=best,
        sigma_max=sigma_max,
        q_max_used=q_max,
        utility=_utility(layout, best),
        total_bitrate_bps=total_bitrate(table, best, chunk),
        feasible=True,
        priorities={t: priorities[t] for t in tiles},
        bandwidth_bps=bandwidth_bps,
    )


def optimize_exhaustive(
    layout: TileLayout,
    priorities: PriorityMap,
    table: RateTable,
    chunk: int,
    bandwidth_bps: float,
    ladder: QualityLadder | int,
    sigma_step: float = AdaptationConfig.sigma_step,
    sigma_cap: float = AdaptationConfig.sigma_cap,
    grid_step: float | None = None,
) -> ChunkAssignment:
    """Brute-force reference for :func:`adapt_chunk`.

    Tries every ``q_max`` from the ladder top down to 0 and, for each, every
    sigma on a grid of spacing ``grid_step`` (default ``sigma_step / 10``) up
    to ``sigma_cap``, plus the flat limit where all tiles sit at ``q_max``.
    Returns the assignment maximising ``(q_max, utility)`` among those that
    fit, first found in scan order. Grid evaluation stops once every tile is
    at ``q_max``, since rounded levels cannot change past that point.

    Many sigmas give the same levels; ``sigma_max`` reports the largest grid
    sigma yielding the optimum, or the smallest one when the optimum is the
    flat all-``q_max`` assignment.
    """
    top = ladder.q_max if isinstance(ladder, QualityLadder) else int(ladder)
    _check_inputs(layout, priorities, table, chunk, top)
    step = sigma_step / 10.0 if grid_step is None else grid_step
    tiles = layout.tiles
    prio = np.array([priorities[t] for t in tiles], dtype=float)
    weight = np.array([layout.weights[t] for t in tiles], dtype=np.int64)
    rates = np.array([[table.bitrate(chunk, t, lvl) for lvl in range(top + 1)] for t in tiles])
    cols = np.arange(len(tiles))
    n_grid = int(math.floor(sigma_cap / step + 1e-9))
    block = 4096

    for q_max in range(top, -1, -1):
        best_w, best_levels, first_sigma, last_sigma = -1, None, 0.0, 0.0
        start = 1
        saturated = False
        while start <= n_grid and not saturated:
            k = np.arange(start, min(start + block, n_grid + 1))
            sigma = k * step
            expo = -(prio[None, :] ** 2) / (2.0 * sigma[:, None] ** 2)
            lv = np.floor(q_max * np.exp(expo) + 0.5).astype(np.int64)
            lv[:, prio == 0] = q_max
            full = (lv == q_max).all(axis=1)
            if full.any():
                cut = int(np.argmax(full)) + 1
                sigma, lv, saturated = sigma[:cut], lv[:cut], True
            cost = rates[cols, lv].sum(axis=1)
            # settle rows near the budget with an exactly rounded sum, as adapt_chunk does
            near = np.abs(cost - bandwidth_bps) <= 1e-9 * max(abs(bandwidth_bps), 1.0)
            for i in np.flatnonzero(near):
                cost[i] = math.fsum(rates[cols, lv[i]])
            util = np.where(cost <= bandwidth_bps, lv @ weight, -1)
            top_w = int(util.max())
            if top_w >= 0 and top_w >= best_w:
                idx = np.flatnonzero(util == top_w)
                if top_w > best_w:
                    best_w, best_levels = top_w, lv[idx[0]].copy()
                    first_sigma = float(sigma[idx[0]])
                last_sigma = float(sigma[idx[-1]])
            start += block
        if not saturated:
            flat = np.full(len(tiles), q_max, dtype=np.int64)
            if math.fsum(rates[cols, flat]) <= bandwidth_bps and int(flat @ weight) > best_w:
                best_w, best_levels, first_sigma = int(flat @ weight), flat, math.inf
        if best_levels is not None:
            levels = {t: int(v) for t, v in zip(tiles, best_levels)}
            flat_opt = all(v == q_max for v in levels.values())
            return ChunkAssignment(
                chunk_index=chunk,
                levels=levels,
                sigma_max=first_sigma if flat_opt else last_sigma,
                q_max_used=q_max,
                utility=_utility(layout, levels),
                total_bitrate_bps=total_bitrate(table, levels, chunk),
                feasible=True,
                priorities={t: priorities[t] for t in tiles},
                bandwidth_bps=bandwidth_bps,
            )
    return _infeasible(layout, priorities, table, chunk, bandwidth_bps)


def adapt_session(
    layout: TileLayout,
    viewports: Sequence[Viewport],
    table: RateTable,
    bandwidth: Sequence[float],
    cfg: AdaptationConfig = AdaptationConfig(),
    oracle: bool = False,
) -> list[ChunkAssignment]:
    """Adapt every chunk of ``table`` independently, in chunk order.

    ``viewports[i]`` and ``bandwidth[i]`` belong to the i-th chunk of the table.
    """
    chunks = table.chunks
    if len(viewports) != len(chunks) or len(bandwidth) != len(chunks):
        raise TraceError(
            f"trace length mismatch: {len(viewports)} viewports, {len(bandwidth)} "
            f"bandwidth samples, {len(chunks)} chunks in rate table"
        )
    out = []
    for chunk, vp, bw in zip(chunks, viewports, bandwidth):
        prio = assign_priorities(layout, vp)
        if oracle:
            out.append(
                optimize_exhaustive(
                    layout, prio, table, chunk, bw, cfg.q_max_initial, cfg.sigma_step, cfg.sigma_cap
                )
            )
        else:
            out.append(adapt_chunk(layout, prio, table, chunk, bw, cfg))
    return out
