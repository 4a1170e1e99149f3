"""``bathykit`` command line: plan, simulate, decode, process.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .asvsim import SimConfig, SimulationTimeout, load_sim_config, run_survey
from .calibrate import (CalibrationError, DepthOffset, QualityFilter, ZERO_OFFSET,
                        compute_offset, extract_soundings)
from .geodesy import CoordinateError, LocalFrame, parse_latlon
from .grid import write_asc, write_pgm
from .hypsometry import band_table, report, summary
from .mission import (PlanningError, boundary_to_local, export_mission, lawnmower,
                      load_mission, parse_boundary, swath_spacing)
from .sonarlog import (SONAR, SonarLogError, idx_path, pack_index, read_survey,
                       rebuild_index, son_path)
from .tin import TriangulationError, delaunay, rasterize

SEED_ENV = "BATHYKIT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_plan(args) -> int:
    boundary_ll = parse_boundary(Path(args.boundary).read_text())
    origin = parse_latlon(args.origin) if args.origin else boundary_ll[0]
    frame = LocalFrame(origin)
    poly = boundary_to_local(boundary_ll, frame)
    spacing = args.spacing if args.spacing is not None else swath_spacing(args.side_range, args.overlap)
    plan = lawnmower(poly, spacing, args.heading, args.margin, args.radius, args.cruise_speed)
    out = _out_dir(args)
    export_mission(plan, frame, out / "mission.txt")
    print(f"{len(plan.waypoints)} waypoints, spacing {spacing:.2f} m, "
          f"path {plan.path_length():.0f} m -> {out / 'mission.txt'}")
    return 0


def _sim_config(args) -> SimConfig:
    cfg = load_sim_config(args.config) if args.config else SimConfig()
    seed = args.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if args.origin:
        cfg = replace(cfg, origin=args.origin)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    plan = load_mission(args.mission, cfg.frame(), cfg.gains.cruise_speed_mps)
    out = _out_dir(args)
    try:
        res = run_survey(plan, cfg=cfg, out_dir=out)
    except SimulationTimeout as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"{res.n_pings} pings in {res.elapsed_s:.1f} s simulated -> {out}")
    return 0


PING_COLUMNS = ("channel", "index", "t_ms", "lat", "lon", "heading_deg", "speed_mps",
                "depth_m", "freq_khz", "beam_id", "sample_count")


def cmd_decode(args) -> int:
    src = Path(args.input)
    header, channels = read_survey(src)
    out = _out_dir(args)
    with open(out / "pings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PING_COLUMNS)
        for k, pings in enumerate(channels):
            for i, p in enumerate(pings):
                w.writerow([k, i, p.time_offset_ms, f"{p.lat_e7 / 1e7:.7f}", f"{p.lon_e7 / 1e7:.7f}",
                            f"{p.heading_cdeg / 100:.2f}", f"{p.speed_cmps / 100:.2f}",
                            f"{p.depth_cm / 100:.2f}", p.freq_khz, p.beam_id, len(p.samples)])
    if args.rebuild_index:
        for k in range(header.channel_count):
            if son_path(src, k).stat().st_size == 0:
                entries = []
            else:
                entries = rebuild_index(son_path(src, k))
            idx_path(out, k).write_bytes(pack_index(entries))
    n = sum(len(c) for c in channels)
    print(f"{n} pings in {header.channel_count} channel(s) -> {out / 'pings.csv'}")
    return 0


def _offset(args) -> DepthOffset:
    if args.calibration:
        pairs = []
        for ln in Path(args.calibration).read_text().splitlines():
            ln = ln.split("#", 1)[0].strip()
            if not ln or ln.lower().startswith("sonar"):
                continue
            a, b = (float(v) for v in ln.replace(",", " ").split())
            pairs.append((a, b))
        return compute_offset(pairs)
    if args.offset:
        return DepthOffset(args.offset, 1)
    return ZERO_OFFSET


def cmd_process(args) -> int:
    header, channels = read_survey(args.input)
    pings = [p for ch in channels for p in ch]
    off = _offset(args)
    frame = LocalFrame(parse_latlon(args.origin)) if args.origin else None
    if frame is None:
        first = next((p for p in pings if p.beam_id in (0, 1) and (p.lat_e7 or p.lon_e7)), None)
        if first is None:
            raise TriangulationError(f"{args.input}: no usable down-beam pings")
        frame = LocalFrame(parse_latlon(f"{first.lat_e7 / 1e7}, {first.lon_e7 / 1e7}"))
    quality = QualityFilter(args.min_depth, args.max_depth, args.dedup_radius)
    stats = {}
    points = extract_soundings(pings, off, frame, quality, stats)
    tri = delaunay(points)
    boundary = None
    if args.boundary:
        boundary = boundary_to_local(parse_boundary(Path(args.boundary).read_text()), frame)
    grid = rasterize(tri, boundary, args.cell)
    rows = band_table(grid, args.interval)
    s = summary(grid)

    out = _out_dir(args)
    with open(out / "soundings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x_m", "y_m", "depth_m", "t_ms"))
        for p in points:
            w.writerow((f"{p.x_m:.3f}", f"{p.y_m:.3f}", f"{p.depth_m:.3f}", p.t_ms))
    write_asc(grid, out / "depth.asc")
    write_pgm(grid, out / "depth.pgm")
    (out / "bands.csv").write_text(report(rows, s, "csv"))
    (out / "summary.txt").write_text(report(rows, s, "text"))
    (out / "summary.json").write_text(report(rows, s, "json"))
    print(report([], s, "text"), end="")
    print(f"{stats['output']} soundings ({stats['duplicate']} duplicates, "
          f"{stats['depth_filter']} filtered), {tri.n_triangles} triangles -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bathykit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bathykit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("plan", help="lawnmower mission inside a boundary polygon")
    sp.add_argument("--boundary", required=True, help="file of lat, lon (decimal or DDM) lines")
    sp.add_argument("--spacing", type=float, help="transect spacing, m (default: from swath)")
    sp.add_argument("--heading", type=float, default=0.0, help="transect bearing, deg")
    sp.add_argument("--overlap", type=float, default=0.3, help="swath overlap fraction")
    sp.add_argument("--side-range", type=float, default=SONAR.side_range_m, help="per-side range, m")
    sp.add_argument("--margin", type=float, default=0.0, help="shoreline margin, m")
    sp.add_argument("--radius", type=float, default=3.0, help="acceptance radius, m")
    sp.add_argument("--cruise-speed", type=float, default=1.5)
    sp.add_argument("--origin", help="frame origin (default: first boundary vertex)")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="fly a mission over a synthetic lake bed")
    sp.add_argument("--mission", required=True, help="waypoint file from 'plan'")
    sp.add_argument("--config", help="JSON sim config")
    sp.add_argument("--seed", type=int, help=f"RNG seed (overrides ${SEED_ENV} and config)")
    sp.add_argument("--origin", help="frame origin for the truth field")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("decode", help="dump a survey log as CSV")
    sp.add_argument("--in", dest="input", required=True, help="survey directory")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--rebuild-index", action="store_true", help="also write recovered .idx files")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("process", help="calibrate, triangulate, grid and report")
    sp.add_argument("--config", help="JSON file of defaults for these flags")
    sp.add_argument("--in", dest="input", required=True, help="survey directory")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--cell", type=float, default=5.0, help="grid cell size, m")
    sp.add_argument("--interval", type=float, default=1.0, help="band interval, m")
    sp.add_argument("--min-depth", type=float, default=0.0)
    sp.add_argument("--max-depth", type=float, default=SONAR.max_depth_m)
    sp.add_argument("--dedup-radius", type=float, default=0.5)
    sp.add_argument("--offset", type=float, help="depth offset (sonar - known), m")
    sp.add_argument("--calibration", help="file of 'sonar known' depth pairs")
    sp.add_argument("--origin", help="frame origin (default: first ping)")
    sp.add_argument("--boundary", help="clip polygon, lat/lon lines")
    sp.set_defaults(func=cmd_process)
    return p


def _apply_config_defaults(parser: argparse.ArgumentParser, argv):
    """Load ``process --config`` JSON as parser defaults so flags still win."""
    if not argv or argv[0] != "process" or "--config" not in argv:
        return
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return
    doc = json.loads(Path(argv[i + 1]).read_text())
    sub = parser._subparsers._group_actions[0].choices["process"]
    known = {a.dest for a in sub._actions}
    keys = {k.replace("-", "_") for k in doc}
    bad = keys - known
    if bad:
        raise UsageError(f"unknown keys in {argv[i + 1]}: {sorted(bad)}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:  # --help, --version and usage errors
            return e.code if isinstance(e.code, int) else 1
        return args.func(args)
    except UsageError as e:
        print(f"bathykit: error: {e}", file=sys.stderr)
        return 1
    except (SonarLogError, CoordinateError, PlanningError, CalibrationError,
            TriangulationError, OSError, ValueError, KeyError) as e:
        print(f"bathykit: data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
