"""Command-line entry point: ``tiledcube <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 when input data is
malformed or violates an invariant. Data goes to files or stdout, diagnostics
to stderr.

Defaults come from built-ins, then an optional ``key=value`` config file
(``--config`` or ``$TILEDCUBE_CONFIG``), then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from tiledcube import __version__
from tiledcube.adaptation import AdaptationConfig, adapt_session
from tiledcube.complexity import LumaSequence, compute_siti, load_tile_rects, read_raw_luma, tile_crop
from tiledcube.errors import DataError
from tiledcube.geometry import LAYOUT_SLICES, Viewport, assign_priorities, build_layout
from tiledcube.rd_model import (
    QualityLadder,
    fit_ladder,
    format_number,
    load_rate_table,
    load_rd_sweep,
    write_rate_table,
)
from tiledcube.session import BandwidthTrace, ViewportTrace, run_session, write_assignments, write_report
from tiledcube.storage import (
    StorageScenario,
    mb_per_min,
    storage_offset_cubemap,
    storage_savings_percent,
    storage_tiled_cubemap,
)

CONFIG_ENV = "TILEDCUBE_CONFIG"

DEFAULTS = {
    "layout": "tiled_cubemap_1",
    "ladder_targets": "38,39,40,42,45,48",
    "sigma_step": "0.1",
    "q_max": "5",
    "bandwidth_profiles": "2e6,4e6,10e6",
    "hfov": "90",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in DEFAULTS:
                raise UsageError(f"{path}: line {n}: expected one of {sorted(DEFAULTS)} as key=value")
            out[key] = value.strip()
    return out


def _settings(args) -> dict[str, str]:
    settings = dict(DEFAULTS)
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        settings.update(read_config(path))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = str(value)
    if settings["layout"] not in LAYOUT_SLICES:
        raise UsageError(f"unknown layout {settings['layout']!r}")
    return settings


def _adapt_config(settings) -> AdaptationConfig:
    try:
        return AdaptationConfig(
            q_max_initial=int(settings["q_max"]), sigma_step=float(settings["sigma_step"])
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", newline="")


def _bandwidth(text: str, n_chunks: int) -> BandwidthTrace:
    try:
        value = float(text)
    except ValueError:
        return BandwidthTrace.load(text)
    return BandwidthTrace.constant(value, n_chunks)


def _traces(args, settings, table):
    n = len(table.chunks)
    hfov = float(settings["hfov"])
    if args.viewports:
        vtrace = ViewportTrace.load(args.viewports, hfov)
    else:
        vtrace = ViewportTrace.constant(Viewport(args.yaw, 0.0, hfov), n)
    return vtrace, _bandwidth(args.bandwidth, n)


# -- subcommands ---------------------------------------------------------------


def cmd_priorities(args, settings):
    layout = build_layout(settings["layout"])
    vp = Viewport(args.yaw, args.pitch, float(settings["hfov"]))
    prio = assign_priorities(layout, vp)
    out = _open_out(args.out)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("tile_id", "priority"))
    for tile in layout.tiles:
        w.writerow((str(tile), prio[tile]))
    if out is not sys.stdout:
        out.close()


def cmd_ladder(args, settings):
    ladder = QualityLadder(tuple(_float_list(settings["ladder_targets"])))
    points = load_rd_sweep(args.sweep)
    table = fit_ladder(points, ladder, args.chunk_duration)
    out = _open_out(args.out)
    write_rate_table(table, out)
    if out is not sys.stdout:
        out.close()


def cmd_adapt(args, settings):
    layout = build_layout(settings["layout"])
    cfg = _adapt_config(settings)
    table = load_rate_table(args.rates, args.chunk_duration)
    vtrace, btrace = _traces(args, settings, table)
    assignments = adapt_session(layout, vtrace.viewports, table, btrace.values, cfg, oracle=args.oracle)
    out = _open_out(args.out)
    write_assignments(assignments, table, out)
    if out is not sys.stdout:
        out.close()
    for a in assignments:
        if not a.feasible:
            print(f"warning: chunk {a.chunk_index} exceeds bandwidth even at level 0", file=sys.stderr)


def cmd_simulate(args, settings):
    layout = build_layout(settings["layout"])
    cfg = _adapt_config(settings)
    table = load_rate_table(args.rates, args.chunk_duration)
    vtrace, btrace = _traces(args, settings, table)
    report = run_session(layout, table, vtrace, btrace, cfg, oracle=args.oracle)
    out = _open_out(args.out_report)
    write_report(report, out)
    if out is not sys.stdout:
        out.close()
    if args.out_assignments:
        write_assignments(report.assignments, table, args.out_assignments)


def cmd_siti(args, settings):
    seq = read_raw_luma(args.input, args.width, args.height, args.frames)
    rows = []
    if args.tiles:
        rects = load_tile_rects(args.tiles)
        for tile in rects:
            crops = LumaSequence(tile_crop(f, rects, tile) for f in seq)
            r = compute_siti(crops)
            rows.append((str(tile), format_number(r.si), format_number(r.ti)))
    else:
        r = compute_siti(seq)
        rows.append(("full", format_number(r.si), format_number(r.ti)))
    out = _open_out(args.out)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("tile", "si", "ti"))
    w.writerows(rows)
    if out is not sys.stdout:
        out.close()


def cmd_storage(args, settings):
    profiles = args.offset_bitrates or settings["bandwidth_profiles"]
    scenario = StorageScenario(
        duration_s=args.duration,
        offset_bitrates_bps=_float_list(profiles),
        n_viewports=args.viewports,
    )
    table = load_rate_table(args.rates, args.chunk_duration)
    offset = storage_offset_cubemap(scenario)
    tiled = storage_tiled_cubemap(table, args.duration)
    out = _open_out(args.out)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("scheme", "bytes", "mb_per_min"))
    w.writerow(("offset_cubemap", format_number(offset), format_number(mb_per_min(offset, args.duration))))
    w.writerow(("tiled_cubemap", format_number(tiled), format_number(mb_per_min(tiled, args.duration))))
    w.writerow(("metric", "value"))
    w.writerow(("offset_versions", scenario.offset_versions))
    w.writerow(("savings_percent", format_number(storage_savings_percent(offset, tiled))))
    if out is not sys.stdout:
        out.close()
    print("savings_percent = 100 * (offset - tiled) / tiled", file=sys.stderr)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help=f"key=value defaults file (or ${CONFIG_ENV})")
    common.add_argument("--version", action="version", version=f"tiledcube {__version__}")

    layout = _Parser(add_help=False)
    layout.add_argument("--layout", choices=sorted(LAYOUT_SLICES))
    layout.add_argument("--hfov", type=float, help="horizontal field of view, degrees")

    adapt = _Parser(add_help=False)
    adapt.add_argument("--rates", required=True, help="rate manifest CSV")
    adapt.add_argument("--viewports", help="viewport trace CSV (chunk,yaw_deg,pitch_deg)")
    adapt.add_argument("--yaw", type=float, default=0.0, help="constant yaw when no trace is given")
    adapt.add_argument("--bandwidth", required=True, help="bandwidth trace CSV or a constant bps value")
    adapt.add_argument("--sigma-step", dest="sigma_step", type=float)
    adapt.add_argument("--q-max", dest="q_max", type=int)
    adapt.add_argument("--oracle", action="store_true", help="use the exhaustive optimizer")
    adapt.add_argument("--chunk-duration", type=float, default=4.0)

    parser = _Parser(prog="tiledcube", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tiledcube {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("priorities", parents=[common, layout], help="tile priorities for a viewport")
    p.add_argument("--yaw", type=float, default=0.0)
    p.add_argument("--pitch", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_priorities)

    p = sub.add_parser("ladder", parents=[common], help="fit a quality ladder to an R-D sweep")
    p.add_argument("--sweep", required=True, help="chunk,tile,qp,bitrate_bps,psnr_db CSV")
    p.add_argument("--targets", dest="ladder_targets", help="PSNR targets, lowest level first")
    p.add_argument("--chunk-duration", type=float, default=4.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("adapt", parents=[common, layout, adapt], help="per-chunk tile quality levels")
    p.add_argument("--out")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("simulate", parents=[common, layout, adapt], help="run a streaming session")
    p.add_argument("--out-report", dest="out_report")
    p.add_argument("--out-assignments", dest="out_assignments")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("siti", parents=[common], help="SI/TI of raw 8-bit luma")
    p.add_argument("--input", required=True, help="raw planar luma (.y) file")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--frames", default="all", help="frame count, 'all', or start:stop")
    p.add_argument("--tiles", help="tile,x,y,w,h geometry sidecar CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_siti)

    p = sub.add_parser("storage", parents=[common], help="storage cost versus offset-cubemap")
    p.add_argument("--rates", required=True)
    p.add_argument("--offset-bitrates", dest="offset_bitrates", help="per-profile bps, comma-separated")
    p.add_argument("--viewports", type=int, default=30)
    p.add_argument("--duration", type=float, default=60.0, help="content duration, seconds")
    p.add_argument("--chunk-duration", type=float, default=4.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_storage)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_help(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        settings = _settings(args)
        args.func(args, settings)
    except UsageError as exc:
        print(f"tiledcube {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError, OSError) as exc:
        print(f"tiledcube {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
