"""Tiled cubemap layouts, tile areas, ring topology and viewport priorities.

The four side faces are cut into ``S`` vertical slices each; top and bottom
stay whole. Side tiles form a ring around the viewer::

    front_0, front_1, right_0, right_1, back_0, back_1, left_0, left_1   (S=2)

Slice 0 is the western (left, seen from the cube centre) slice of its face.
Yaw grows clockwise seen from above, and the front face spans [-45, 45)
degrees, so ring tile ``i`` covers ``[-45 + i*w, -45 + (i+1)*w)`` with
``w = 360 / (4*S)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterator, Mapping

SIDE_FACES = ("front", "right", "back", "left")
LAYOUT_SLICES = {"tiled_cubemap_1": 2, "tiled_cubemap_2": 4}


class Face(str, enum.Enum):
    FRONT = "front"
    RIGHT = "right"
    BACK = "back"
    LEFT = "left"
    TOP = "top"
    BOTTOM = "bottom"

    @property
    def is_side(self) -> bool:
        return self.value in SIDE_FACES


@dataclass(frozen=True)
class TileId:
    face: Face
    slice_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "face", Face(self.face))
        if self.slice_index < 0:
            raise ValueError(f"negative slice index: {self.slice_index}")
        if not self.face.is_side and self.slice_index != 0:
            raise ValueError(f"{self.face.value} tile must have slice_index 0")

    def __str__(self) -> str:
        if self.face.is_side:
            return f"{self.face.value}_{self.slice_index}"
        return self.face.value

    def __repr__(self) -> str:
        return f"TileId({str(self)!r})"

    @classmethod
    def parse(cls, name: str) -> "TileId":
        """Parse a canonical tile name such as ``front_0`` or ``top``."""
        name = name.strip()
        if name in ("top", "bottom"):
            return cls(Face(name))
        face, sep, idx = name.rpartition("_")
        if not sep or face not in SIDE_FACES or not idx.isdigit():
            raise ValueError(f"invalid tile name: {name!r}")
        return cls(Face(face), int(idx))


@dataclass(frozen=True, eq=False)
class TileLayout:
    name: str
    slices_per_side_face: int
    tiles: tuple[TileId, ...]
    areas: Mapping[TileId, float]
    ring: tuple[TileId, ...]
    _ring_index: Mapping[TileId, int] = field(repr=False, default=MappingProxyType({}))
    _weights: Mapping[TileId, int] = field(repr=False, default=MappingProxyType({}))

    def __post_init__(self):
        object.__setattr__(
            self, "_ring_index", MappingProxyType({t: i for i, t in enumerate(self.ring)})
        )
        # integer area weights so equal utilities compare equal as floats
        fracs = {t: Fraction(a).limit_denominator(10**6) for t, a in self.areas.items()}
        unit = math.lcm(*(f.denominator for f in fracs.values())) if fracs else 1
        object.__setattr__(
            self, "_weights", MappingProxyType({t: int(f * unit) for t, f in fracs.items()})
        )

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[TileId]:
        return iter(self.tiles)

    def __contains__(self, tile: object) -> bool:
        return tile in self.areas

    @property
    def tile_span_deg(self) -> float:
        return 360.0 / len(self.ring)

    @property
    def weights(self) -> Mapping[TileId, int]:
        """Tile areas as integers proportional to area."""
        return self._weights

    def weighted_mean(self, values: Mapping[TileId, int]) -> float:
        """Area-weighted mean of integer per-tile values, exactly rounded."""
        total = sum(self._weights[t] for t in values)
        if total == 0:
            return 0.0
        return sum(self._weights[t] * v for t, v in values.items()) / total

    def ring_index(self, tile: TileId) -> int:
        return self._ring_index[tile]

    def tile_span(self, tile: TileId) -> tuple[float, float]:
        """Horizontal angular span ``[start, end)`` of a side tile, in degrees."""
        i = self.ring_index(tile)
        w = self.tile_span_deg
        return -45.0 + i * w, -45.0 + (i + 1) * w

    def tile(self, name: str) -> TileId:
        tile = TileId.parse(name)
        if tile not in self.areas:
            raise ValueError(f"tile {name!r} is not part of layout {self.name}")
        return tile


def build_layout(name: str) -> TileLayout:
    """Return the canonical ``tiled_cubemap_1`` (10 tiles) or ``tiled_cubemap_2`` (18 tiles)."""
    try:
        s = LAYOUT_SLICES[name]
    except KeyError:
        raise ValueError(
            f"unknown layout {name!r}; expected one of {sorted(LAYOUT_SLICES)}"
        ) from None
    ring = tuple(TileId(Face(f), i) for f in SIDE_FACES for i in range(s))
    tiles = ring + (TileId(Face.TOP), TileId(Face.BOTTOM))
    areas = {t: 1.0 / (6 * s) for t in ring}
    areas[TileId(Face.TOP)] = 1.0 / 6
    areas[TileId(Face.BOTTOM)] = 1.0 / 6
    return TileLayout(name, s, tiles, MappingProxyType(areas), ring)


@dataclass(frozen=True)
class Viewport:
    yaw_deg: float
    pitch_deg: float = 0.0
    hfov_deg: float = 90.0

    def __post_init__(self):
        if not -90.0 <= self.pitch_deg <= 90.0:
            raise ValueError(f"pitch out of range [-90, 90]: {self.pitch_deg}")
        if not 0.0 < self.hfov_deg <= 360.0:
            raise ValueError(f"hfov must be in (0, 360]: {self.hfov_deg}")
        object.__setattr__(self, "yaw_deg", math.fmod(self.yaw_deg, 360.0) % 360.0)


@dataclass(frozen=True)
class PriorityMap:
    priorities: Mapping[TileId, int]

    def __post_init__(self):
        values = list(self.priorities.values())
        if not values or min(values) != 0:
            raise ValueError("priority map needs at least one priority-0 tile")
        if any(p < 0 for p in values):
            raise ValueError("priorities must be non-negative")

    def __getitem__(self, tile: TileId) -> int:
        return self.priorities[tile]

    def __iter__(self) -> Iterator[TileId]:
        return iter(self.priorities)

    def __len__(self) -> int:
        return len(self.priorities)

    @property
    def max_priority(self) -> int:
        return max(self.priorities.values())


def fov_tiles(layout: TileLayout, vp: Viewport) -> frozenset[TileId]:
    """Side tiles whose span meets the open interval ``yaw ± hfov/2``.

    Only the horizontal extent matters; top and bottom are never FOV tiles.
    """
    if vp.hfov_deg >= 360.0:
        return frozenset(layout.ring)
    lo = vp.yaw_deg - vp.hfov_deg / 2.0
    hi = vp.yaw_deg + vp.hfov_deg / 2.0
    hits = set()
    for tile in layout.ring:
        start, end = layout.tile_span(tile)
        for turn in (-720.0, -360.0, 0.0, 360.0, 720.0):
            # (lo, hi) meets [start, end) iff start < hi and lo < end
            if start + turn < hi and lo < end + turn:
                hits.add(tile)
                break
    return frozenset(hits)


def assign_priorities(layout: TileLayout, vp: Viewport) -> PriorityMap:
    """FOV tiles get 0, other ring tiles their ring distance to the FOV.

    Top and bottom take the priority of the first ring tiles outside the FOV
    (1), or 0 when the FOV wraps the whole ring.
    """
    fov = fov_tiles(layout, vp)
    n = len(layout.ring)
    fov_idx = [layout.ring_index(t) for t in fov]
    prio: dict[TileId, int] = {}
    for i, tile in enumerate(layout.ring):
        prio[tile] = min(min(abs(i - j), n - abs(i - j)) for j in fov_idx)
    cap = 0 if len(fov) == n else 1
    for tile in layout.tiles:
        if not tile.face.is_side:
            prio[tile] = cap
    return PriorityMap(MappingProxyType({t: prio[t] for t in layout.tiles}))
