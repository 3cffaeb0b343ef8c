"""Spatial and temporal information (SI/TI) of raw 8-bit luma sequences.

SI is the median over frames of the standard deviation of the Sobel gradient
magnitude; TI is the median over consecutive frame pairs of the standard
deviation of the pixel difference. Standard deviations are population
(ddof=0), the Sobel plane excludes the one-pixel border, and the median of an
even count is the mean of the two middle values.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from tiledcube.errors import DataError
from tiledcube.geometry import SIDE_FACES, Face, TileId, TileLayout


@dataclass(frozen=True, eq=False)
class LumaFrame:
    """One frame of 8-bit luma, stored as a ``(height, width)`` array."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples)
        if a.ndim != 2:
            raise ValueError(f"luma frame must be 2-D, got shape {a.shape}")
        if a.shape[0] < 3 or a.shape[1] < 3:
            raise ValueError(f"luma frame must be at least 3x3, got {a.shape[1]}x{a.shape[0]}")
        if a.dtype != np.uint8:
            if np.any((a < 0) | (a > 255)) or not np.all(np.equal(np.mod(a, 1), 0)):
                raise ValueError("luma samples must be integers in [0, 255]")
            a = a.astype(np.uint8)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int) -> "LumaFrame":
        if len(data) != width * height:
            raise ValueError(f"expected {width * height} bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))


class LumaSequence(Sequence[LumaFrame]):
    def __init__(self, frames: Iterable[LumaFrame]):
        self.frames = tuple(frames)
        if not self.frames:
            raise ValueError("luma sequence needs at least one frame")
        shape = self.frames[0].samples.shape
        for i, f in enumerate(self.frames):
            if f.samples.shape != shape:
                raise ValueError(f"frame {i} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}")

    def __getitem__(self, i):
        return self.frames[i]

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class SiTi:
    si: float
    ti: float


def sobel_magnitude(frame: LumaFrame) -> np.ndarray:
    """Sobel gradient magnitude over the interior, shape ``(h-2, w-2)``."""
    f = frame.samples.astype(np.int64)
    # Gx = [[-1,0,1],[-2,0,2],[-1,0,1]], Gy its transpose
    gx = (
        (f[:-2, 2:] - f[:-2, :-2])
        + 2 * (f[1:-1, 2:] - f[1:-1, :-2])
        + (f[2:, 2:] - f[2:, :-2])
    )
    gy = (
        (f[2:, :-2] - f[:-2, :-2])
        + 2 * (f[2:, 1:-1] - f[:-2, 1:-1])
        + (f[2:, 2:] - f[:-2, 2:])
    )
    return np.sqrt((gx * gx + gy * gy).astype(np.float64))


def frame_difference(previous: LumaFrame, current: LumaFrame) -> np.ndarray:
    """Signed ``current - previous``."""
    if previous.samples.shape != current.samples.shape:
        raise ValueError(
            f"frame size mismatch: {previous.width}x{previous.height} vs {current.width}x{current.height}"
        )
    return current.samples.astype(np.int64) - previous.samples.astype(np.int64)


def compute_siti(seq: LumaSequence) -> SiTi:
    si = float(np.median([sobel_magnitude(f).std() for f in seq]))
    if len(seq) < 2:
        return SiTi(si, 0.0)
    ti = float(np.median([frame_difference(a, b).std() for a, b in zip(seq, seq[1:])]))
    return SiTi(si, ti)


# -- tile regions --------------------------------------------------------------

Rect = tuple[int, int, int, int]  # x, y, w, h

# Faces of an unfolded 3x2 cubemap, left to right and top to bottom.
CUBEMAP_3X2_ORDER = (Face.RIGHT, Face.LEFT, Face.TOP, Face.BOTTOM, Face.FRONT, Face.BACK)


def tile_crop(frame: LumaFrame, rects: Mapping[TileId, Rect], tile: TileId) -> LumaFrame:
    try:
        x, y, w, h = rects[tile]
    except KeyError:
        raise DataError(f"no pixel rectangle for tile {tile}") from None
    if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > frame.width or y + h > frame.height:
        raise DataError(
            f"rectangle {(x, y, w, h)} for tile {tile} is outside the "
            f"{frame.width}x{frame.height} frame"
        )
    return LumaFrame(frame.samples[y : y + h, x : x + w])


def cubemap_3x2_rects(layout: TileLayout, face_size: int) -> dict[TileId, Rect]:
    """Tile rectangles for a 3x2 unfolded cubemap of square ``face_size`` faces.

    Side faces are split into equal vertical strips, slice 0 leftmost.
    """
    s = layout.slices_per_side_face
    if face_size % s:
        raise ValueError(f"face size {face_size} is not divisible by {s} slices")
    strip = face_size // s
    rects: dict[TileId, Rect] = {}
    for pos, face in enumerate(CUBEMAP_3X2_ORDER):
        fx, fy = (pos % 3) * face_size, (pos // 3) * face_size
        if face.value in SIDE_FACES:
            for i in range(s):
                rects[TileId(face, i)] = (fx + i * strip, fy, strip, face_size)
        else:
            rects[TileId(face)] = (fx, fy, face_size, face_size)
    return rects


def load_tile_rects(path: str | Path) -> dict[TileId, Rect]:
    """Read a ``tile,x,y,w,h`` geometry sidecar."""
    rects: dict[TileId, Rect] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"tile", "x", "y", "w", "h"}
        if reader.fieldnames is None or not need <= {h.strip() for h in reader.fieldnames}:
            raise DataError(f"{path}: line 1: header must contain tile,x,y,w,h")
        reader.fieldnames = [h.strip() for h in reader.fieldnames]
        for row in reader:
            try:
                tile = TileId.parse(row["tile"])
                rect = tuple(int(row[c]) for c in ("x", "y", "w", "h"))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}: line {reader.line_num}: {exc}") from None
            if tile in rects:
                raise DataError(f"{path}: line {reader.line_num}: duplicate tile {tile}")
            rects[tile] = rect
    return rects


def read_raw_luma(
    path: str | Path, width: int, height: int, frames: int | str = "all"
) -> LumaSequence:
    """Read planar 8-bit luma frames from a raw ``.y`` file.

    ``frames`` is a frame count (the file must hold exactly that many frames),
    ``"all"``, or a ``"start:stop"`` range; the latter two require the file
    length to be a whole number of frames.
    """
    frame_bytes = width * height
    if width < 3 or height < 3:
        raise DataError("width and height must be at least 3")
    size = os.path.getsize(path)
    if isinstance(frames, str) and frames != "all" and ":" not in frames:
        frames = int(frames)
    if isinstance(frames, int):
        if size != frames * frame_bytes:
            raise DataError(
                f"{path}: {size} bytes, expected {frames} x {width}x{height} = {frames * frame_bytes}"
            )
        sel = slice(0, frames)
    else:
        if size % frame_bytes or size == 0:
            raise DataError(f"{path}: {size} bytes is not a whole number of {width}x{height} frames")
        if frames == "all":
            sel = slice(None)
        else:
            lo, _, hi = frames.partition(":")
            sel = slice(int(lo) if lo else None, int(hi) if hi else None)
    data = np.fromfile(path, dtype=np.uint8).reshape(-1, height, width)[sel]
    if len(data) == 0:
        raise DataError(f"{path}: frame selection {frames!r} is empty")
    return LumaSequence(LumaFrame(f) for f in data)
