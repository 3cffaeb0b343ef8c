"""Regenerate the synthetic CSV fixtures in this directory.

All bitrates here are synthetic. The only measured values are the per-tile
PSNRs in ``measured_sweep.csv`` (QP 24/36/45 for one sports clip); their
bitrates are made up, scaled from the measured bitrate reduction percentages.

    python tests/data/generate_fixtures.py
"""

import csv
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
SIDE = ("front", "right", "back", "left")
LEVEL_BASE_BPS = (120e3, 200e3, 300e3, 420e3, 650e3, 1.0e6)  # per 1/12-area tile
TARGETS = (38, 39, 40, 42, 45, 48)


def tiles(s):
    return [f"{f}_{i}" for f in SIDE for i in range(s)] + ["top", "bottom"]


def session_rates(rng, n_chunks=3):
    rows = []
    for chunk in range(n_chunks):
        for tile in tiles(2):
            if tile in ("top", "bottom"):
                scale = 2.0 * rng.uniform(0.35, 0.6)
            else:
                scale = rng.uniform(0.8, 1.4)
            for level, base in enumerate(LEVEL_BASE_BPS):
                psnr = TARGETS[level] + rng.uniform(-0.4, 0.4)
                rows.append((chunk, tile, level, int(round(base * scale, -2)), round(psnr, 2)))
    return rows


def session_viewports(n_chunks=3):
    return [(c, yaw, 0) for c, yaw in zip(range(n_chunks), (0, 100, 215))]


def rd_sweep(rng, n_chunks=2):
    rows = []
    for chunk in range(n_chunks):
        for tile in tiles(2):
            p18 = rng.uniform(52.0, 55.0)
            base = rng.uniform(1.5e6, 4e6)
            for qp in range(18, 52, 3):
                psnr = p18 - 0.55 * (qp - 18) + rng.uniform(-0.15, 0.15)
                rate = base * 2 ** (-(qp - 18) / 6)
                rows.append((chunk, tile, qp, int(round(rate)), round(psnr, 2)))
    return rows


# (reduction %, psnr) per QP; slices renumbered from 0 (right_1 -> right_0, ...)
MEASURED = {
    "right_0": ((57.0, 46.74), (82.1, 40.47), (84.9, 35.17)),
    "right_1": ((58.2, 50.24), (81.1, 44.91), (82.1, 39.31)),
    "left_0": ((57.0, 48.58), (82.8, 42.58), (85.5, 37.27)),
    "left_1": ((52.0, 45.72), (81.3, 39.20), (87.3, 33.86)),
    "top": ((62.0, 47.31), (86.7, 40.91), (89.5, 35.41)),
    "bottom": ((58.5, 50.02), (88.1, 44.61), (90.8, 39.91)),
    "front_0": ((49.3, 45.43), (81.6, 38.51), (88.6, 33.20)),
    "front_1": ((51.4, 45.70), (82.8, 39.01), (89.0, 33.73)),
    "back_0": ((58.3, 51.61), (78.6, 46.66), (79.1, 40.04)),
    "back_1": ((57.3, 51.62), (80.8, 46.73), (80.9, 39.69)),
}


def measured_sweep(reference_bps=5e6):
    rows = []
    for tile, entries in MEASURED.items():
        for qp, (reduction, psnr) in zip((24, 36, 45), entries):
            rows.append((0, tile, qp, int(round(reference_bps * (1 - reduction / 100))), psnr))
    return rows


def write(name, header, rows):
    with open(HERE / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    rng = np.random.default_rng(20170901)
    write("session_rates.csv", ("chunk", "tile", "level", "bitrate_bps", "psnr_db"), session_rates(rng))
    write("session_viewports.csv", ("chunk", "yaw_deg", "pitch_deg"), session_viewports())
    write("rd_sweep.csv", ("chunk", "tile", "qp", "bitrate_bps", "psnr_db"), rd_sweep(rng))
    write("measured_sweep.csv", ("chunk", "tile", "qp", "bitrate_bps", "psnr_db"), measured_sweep())


if __name__ == "__main__":
    main()
