import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from tiledcube.complexity import (
    LumaFrame,
    LumaSequence,
    compute_siti,
    cubemap_3x2_rects,
    frame_difference,
    load_tile_rects,
    read_raw_luma,
    sobel_magnitude,
    tile_crop,
)
from tiledcube.errors import DataError
from tiledcube.geometry import TileId, build_layout

GX = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]])
GY = GX.T


def reference_siti(frames):
    """Independent SI/TI: scipy Sobel, Python statistics for std and median."""
    si_vals, ti_vals = [], []
    for f in frames:
        a = f.astype(np.float64)
        gx = ndimage.sobel(a, axis=1, mode="nearest")[1:-1, 1:-1]
        gy = ndimage.sobel(a, axis=0, mode="nearest")[1:-1, 1:-1]
        si_vals.append(statistics.pstdev(np.hypot(gx, gy).ravel().tolist()))
    for prev, cur in zip(frames, frames[1:]):
        d = cur.astype(np.int64) - prev.astype(np.int64)
        ti_vals.append(statistics.pstdev(d.ravel().tolist()))
    return statistics.median(si_vals), statistics.median(ti_vals) if ti_vals else 0.0


def moving_gradient(n=8, h=36, w=48):
    y, x = np.mgrid[0:h, 0:w]
    return [((3 * x + 2 * y + 7 * k + (x * y) % 5) % 256).astype(np.uint8) for k in range(n)]


def seq(arrays_):
    return LumaSequence(LumaFrame(a) for a in arrays_)


# -- frames --------------------------------------------------------------------


def test_frame_validation():
    with pytest.raises(ValueError):
        LumaFrame(np.zeros((2, 5), np.uint8))
    with pytest.raises(ValueError):
        LumaFrame(np.full((3, 3), 256))
    with pytest.raises(ValueError):
        LumaSequence([LumaFrame(np.zeros((3, 3))), LumaFrame(np.zeros((4, 3)))])
    with pytest.raises(ValueError):
        LumaSequence([])
    f = LumaFrame(np.arange(12).reshape(3, 4))
    assert (f.width, f.height) == (4, 3) and f.samples.dtype == np.uint8
    with pytest.raises(ValueError):
        f.samples[0, 0] = 1


# -- sobel ---------------------------------------------------------------------


def test_sobel_constant_frame():
    m = sobel_magnitude(LumaFrame(np.full((6, 7), 128)))
    assert m.shape == (4, 5) and not m.any()


def test_sobel_ramp():
    ramp = np.tile(np.arange(10), (5, 1))
    m = sobel_magnitude(LumaFrame(ramp))
    assert m.shape == (3, 8)
    assert np.all(m == 8.0)


def test_sobel_single_pixel_matches_hand_convolution():
    a = np.zeros((5, 5), np.int64)
    a[2, 2] = 200
    expect = np.zeros((3, 3))
    for i in range(1, 4):
        for j in range(1, 4):
            gx = gy = 0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    gx += GX[di + 1, dj + 1] * a[i + di, j + dj]
                    gy += GY[di + 1, dj + 1] * a[i + di, j + dj]
            expect[i - 1, j - 1] = (gx * gx + gy * gy) ** 0.5
    got = sobel_magnitude(LumaFrame(a))
    assert np.array_equal(got, expect)
    # corners see the pixel diagonally, edges straight on
    assert got[0, 0] == pytest.approx(200 * 2**0.5) and got[0, 1] == 400 and got[1, 1] == 0


def test_sobel_extremes_do_not_overflow():
    a = np.zeros((3, 3), np.uint8)
    a[:, 2] = 255
    assert sobel_magnitude(LumaFrame(a))[0, 0] == 4 * 255


# -- differences and SI/TI -----------------------------------------------------


def test_frame_difference():
    rng = np.random.default_rng(1)
    a, b = rng.integers(0, 256, (2, 6, 9), dtype=np.uint8)
    d = frame_difference(LumaFrame(a), LumaFrame(b))
    for i in range(6):
        for j in range(9):
            assert d[i, j] == int(b[i, j]) - int(a[i, j])
    same = frame_difference(LumaFrame(a), LumaFrame(a))
    assert not same.any()
    shifted = frame_difference(LumaFrame(np.full((4, 4), 5)), LumaFrame(np.full((4, 4), 15)))
    assert np.all(shifted == 10)
    with pytest.raises(ValueError):
        frame_difference(LumaFrame(a), LumaFrame(a[:, :5]))


def test_constant_sequence_has_zero_siti():
    r = compute_siti(seq([np.full((8, 8), 77)] * 10))
    assert r.si == 0.0 and r.ti == 0.0


def test_static_texture_has_zero_ti():
    tex = np.random.default_rng(2).integers(0, 256, (16, 16))
    r = compute_siti(seq([tex] * 10))
    assert r.ti == 0.0 and r.si > 0


def test_single_frame_has_zero_ti():
    assert compute_siti(seq(moving_gradient(1))).ti == 0.0


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_moving_gradient_matches_reference(n):
    frames = moving_gradient(n)
    si, ti = reference_siti(frames)
    r = compute_siti(seq(frames))
    assert r.si == pytest.approx(si, rel=1e-9, abs=0)
    assert r.ti == pytest.approx(ti, rel=1e-9, abs=1e-12)


def test_even_count_median_is_mean_of_middle_pair():
    rng = np.random.default_rng(3)
    frames = [rng.integers(0, 256, (6, 6)) for _ in range(5)]
    stds = sorted(frame_difference(LumaFrame(a), LumaFrame(b)).std() for a, b in zip(frames, frames[1:]))
    assert compute_siti(seq(frames)).ti == pytest.approx((stds[1] + stds[2]) / 2, rel=1e-15)


small_frames = st.integers(1, 5).flatmap(
    lambda n: st.tuples(st.integers(3, 9), st.integers(3, 9)).flatmap(
        lambda hw: st.lists(arrays(np.uint8, hw, elements=st.integers(0, 200)), min_size=n, max_size=n)
    )
)


@settings(max_examples=80, deadline=None)
@given(small_frames, st.integers(0, 55))
def test_constant_offset_invariance(frames, offset):
    base = compute_siti(seq(frames))
    moved = compute_siti(seq([f.astype(np.int64) + offset for f in frames]))
    assert moved == base


@settings(max_examples=80, deadline=None)
@given(small_frames)
def test_ti_is_reversal_invariant(frames):
    assert compute_siti(seq(frames)).ti == compute_siti(seq(frames[::-1])).ti


@settings(max_examples=40, deadline=None)
@given(small_frames)
def test_siti_non_negative(frames):
    r = compute_siti(seq(frames))
    assert r.si >= 0 and r.ti >= 0


# -- crops ---------------------------------------------------------------------


def test_crop_identity_and_small():
    a = np.arange(16).reshape(4, 4)
    f = LumaFrame(a)
    t = TileId.parse("front_0")
    assert np.array_equal(tile_crop(f, {t: (0, 0, 4, 4)}, t).samples, a)
    with pytest.raises(ValueError):  # crops below 3x3 cannot be analysed
        tile_crop(f, {t: (1, 2, 2, 2)}, t)


def test_crop_3x3_window():
    a = np.arange(30).reshape(5, 6)
    t = TileId.parse("top")
    assert np.array_equal(tile_crop(LumaFrame(a), {t: (2, 1, 3, 3)}, t).samples, a[1:4, 2:5])


def test_crop_out_of_bounds_and_missing():
    f = LumaFrame(np.zeros((4, 4)))
    t = TileId.parse("top")
    with pytest.raises(DataError, match="outside"):
        tile_crop(f, {t: (2, 0, 3, 3)}, t)
    with pytest.raises(DataError, match="no pixel rectangle"):
        tile_crop(f, {}, t)


@pytest.mark.parametrize("name,face", [("tiled_cubemap_1", 8), ("tiled_cubemap_2", 12)])
def test_3x2_rects_cover_frame_exactly(name, face):
    layout = build_layout(name)
    rects = cubemap_3x2_rects(layout, face)
    assert set(rects) == set(layout.tiles)
    cover = np.zeros((2 * face, 3 * face), int)
    for x, y, w, h in rects.values():
        cover[y : y + h, x : x + w] += 1
    assert np.all(cover == 1)
    # pixel area shares match the layout's tile areas
    for tile, (_, _, w, h) in rects.items():
        assert w * h / cover.size == pytest.approx(layout.areas[tile])


def test_crops_of_independent_tiles_match_separate_runs():
    layout = build_layout("tiled_cubemap_1")
    rects = cubemap_3x2_rects(layout, 8)
    rng = np.random.default_rng(4)
    tile_seqs = {t: [rng.integers(0, 256, (h, w)) for _ in range(4)] for t, (_, _, w, h) in rects.items()}
    frames = []
    for k in range(4):
        canvas = np.zeros((16, 24), np.uint8)
        for t, (x, y, w, h) in rects.items():
            canvas[y : y + h, x : x + w] = tile_seqs[t][k]
        frames.append(LumaFrame(canvas))
    for t in layout.tiles:
        crops = LumaSequence(tile_crop(f, rects, t) for f in frames)
        assert compute_siti(crops) == compute_siti(seq(tile_seqs[t]))


def test_load_tile_rects(tmp_path):
    p = tmp_path / "rects.csv"
    p.write_text("tile,x,y,w,h\nfront_0,0,0,4,8\ntop,8,0,8,8\n")
    assert load_tile_rects(p) == {TileId.parse("front_0"): (0, 0, 4, 8), TileId.parse("top"): (8, 0, 8, 8)}
    p.write_text("tile,x,y,w,h\ntop,0,0,4,8\ntop,8,0,8,8\n")
    with pytest.raises(DataError, match="line 3"):
        load_tile_rects(p)
    p.write_text("tile,x,y\ntop,0,0\n")
    with pytest.raises(DataError, match="header"):
        load_tile_rects(p)


# -- raw files -----------------------------------------------------------------


def test_read_raw_luma(tmp_path):
    frames = moving_gradient(4, 6, 5)
    p = tmp_path / "clip.y"
    p.write_bytes(b"".join(f.tobytes() for f in frames))
    s = read_raw_luma(p, 5, 6)
    assert len(s) == 4 and np.array_equal(s[3].samples, frames[3])
    assert len(read_raw_luma(p, 5, 6, 4)) == 4
    assert len(read_raw_luma(p, 5, 6, "4")) == 4
    part = read_raw_luma(p, 5, 6, "1:3")
    assert [np.array_equal(a.samples, b) for a, b in zip(part, frames[1:3])] == [True, True]
    with pytest.raises(DataError, match="expected 3"):
        read_raw_luma(p, 5, 6, 3)
    with pytest.raises(DataError, match="whole number"):
        read_raw_luma(p, 7, 6)
    with pytest.raises(DataError, match="empty"):
        read_raw_luma(p, 5, 6, "3:3")
