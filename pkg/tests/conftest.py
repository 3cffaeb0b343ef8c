import sys
from pathlib import Path

import numpy as np
import pytest

from tiledcube.geometry import build_layout
from tiledcube.rd_model import RateTable

DATA = Path(__file__).parent / "data"


def random_monotone_table(rng, layout, n_levels=6, chunks=(0,)):
    """Random per-tile ladders with strictly increasing bitrates."""
    entries = {}
    for chunk in chunks:
        steps = rng.uniform(1e4, 5e5, size=(len(layout.tiles), n_levels))
        rates = np.cumsum(steps, axis=1)
        for i, tile in enumerate(layout.tiles):
            for level in range(n_levels):
                entries[(chunk, tile, level)] = float(rates[i, level])
    return RateTable(entries)


def uniform_table(layout, per_level, chunks=(0,)):
    return RateTable(
        {(c, t, lvl): float(r) for c in chunks for t in layout.tiles for lvl, r in enumerate(per_level)}
    )


@pytest.fixture
def layout1():
    return build_layout("tiled_cubemap_1")


@pytest.fixture
def layout2():
    return build_layout("tiled_cubemap_2")


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, 10):
        ok, detail = results.get(n, (None, "not run"))
        status = {True: "PASS", False: "FAIL", None: "----"}[ok]
        tr.write_line(f"criterion {n}: {status}  {detail}")
