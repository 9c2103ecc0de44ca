"""Command-line front end.

Subcommands write CSV tables into the output directory plus a JSON manifest
per command.  Exit status: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .atomic import (ConfigurationError, LevelRef, downward_channels, effective_n,
                     level_energy, make_channel, vacuum_lifetime, write_channels_csv)
from .cascade import build_network, evolve, max_relative_deviation
from .config import RunConfig, RunManifest, load_config
from .dynamics import (ChannelParameters, IntegrationError, RateSolverError, TruncationError, classify,
                       effective_decay_time, peak_time, simulate, total_lifetime,
                       write_trajectory_csv)
from .numerov import NumerovError
from .phasemap import (ClassifierInstability, critical_curve, default_rho_grid, map_channels,
                       minimal_superradiant_n, write_placements_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (RateSolverError, IntegrationError, TruncationError, NumerovError,
                    ClassifierInstability, FloatingPointError, ArithmeticError)

PLOT_TEMPLATE = """\
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt({csv!r}, delimiter=",", names=True)
plt.{plot}(data[{x!r}], data[{y!r}])
plt.xlabel({x!r})
plt.ylabel({y!r})
plt.savefig({png!r}, dpi=150)
"""


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _plot_script(out: Path, name: str, csv_name: str, x: str, y: str, plot: str = "plot") -> Path:
    path = out / f"plot_{name}.py"
    path.write_text(PLOT_TEMPLATE.format(csv=csv_name, x=x, y=y, png=f"{name}.png", plot=plot))
    return path


# ---------------------------------------------------------------------------
# Commands

def cmd_levels(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> None:
    table = cfg.table()
    lo = cfg.export_n_min if cfg.export_n_min is not None else table.n_min
    hi = cfg.export_n_max if cfg.export_n_max is not None else cfg.initial_level.n
    levels = [lv for lv in table.levels() if lo <= lv.n <= hi]
    if not levels:
        raise ConfigurationError(f"no levels with {lo} <= n <= {hi} in the table")
    p = out / "levels.csv"
    _write_rows(p, ("n", "l", "label", "n_star", "energy_cm-1"),
                ((lv.n, lv.l, lv.label, effective_n(lv, table), level_energy(lv, table))
                 for lv in levels))
    manifest.add(p)
    channels = [ch for lv in levels for ch in downward_channels(lv, table)]
    p = out / "channels.csv"
    write_channels_csv(channels, p)
    manifest.add(p)
    manifest.summary["levels"] = {"levels": len(levels), "channels": len(channels)}
    print(f"levels: {len(levels)} levels, {len(channels)} channels (n in [{lo}, {hi}])")


def cmd_channel(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> dict:
    table = cfg.table()
    upper, lower = LevelRef.parse(cfg.channel_upper), LevelRef.parse(cfg.channel_lower)
    ch = make_channel(upper, lower, table)
    geom = cfg.geometry()
    traj = simulate(ch, geom, cfg.settings())
    regime = classify(traj)
    tau = effective_decay_time(traj)
    params = ChannelParameters.for_channel(ch, geom)
    name = f"{upper.label}_{lower.label}"
    p = out / f"trajectory_{name}.csv"
    write_trajectory_csv(traj, p)
    manifest.add(p)
    p = out / f"intensity_{name}.csv"
    _write_rows(p, ("t_s", "t_gamma", "intensity_per_s"),
                zip(traj.t, traj.t * params.gamma, traj.intensity))
    manifest.add(p)
    record = {
        "channel": ch.label,
        "class": regime.value,
        "tau_eff_s": tau,
        "tau_vacuum_s": 1.0 / ch.einstein_A,
        "speedup": 1.0 / (ch.einstein_A * tau),
        "C": params.C,
        "rho": params.rho,
        "wavelength_m": ch.wavelength,
        "peak_time_s": peak_time(traj),
        "atom_count": traj.atom_count,
        "samples": len(traj),
    }
    p = out / f"channel_{name}.json"
    with open(p, "w", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.add(p)
    if plots:
        manifest.add(_plot_script(out, f"intensity_{name}", f"intensity_{name}.csv", "t_s",
                                  "intensity_per_s"))
    manifest.warnings.extend(f"{ch.label}: {w}" for w in traj.warnings)
    manifest.summary.setdefault("channels", {})[ch.label] = record
    print(f"channel {ch.label}: {regime.value}, tau_eff = {tau:.6g} s "
          f"(vacuum {1.0 / ch.einstein_A:.6g} s), C = {params.C:.4g}, rho = {params.rho:.4g}")
    return record


def cmd_lifetimes(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> dict:
    table = cfg.table()
    initial = cfg.initial_level
    geom = cfg.geometry()
    settings = cfg.settings()
    rows = []
    dense, vac = [], []
    for ch in downward_channels(initial, table):
        traj = simulate(ch, geom, settings)
        tau = effective_decay_time(traj)
        params = ChannelParameters.for_channel(ch, geom)
        dense.append(tau)
        vac.append(1.0 / ch.einstein_A)
        rows.append((ch.upper.n, ch.upper.l, ch.lower.n, ch.lower.l, ch.wavelength, params.C,
                     params.rho, 1.0 / ch.einstein_A, tau, 1.0 / (ch.einstein_A * tau),
                     classify(traj).value))
        manifest.warnings.extend(f"{ch.label}: {w}" for w in traj.warnings)
    p = out / "lifetimes.csv"
    _write_rows(p, ("n_upper", "l_upper", "n_lower", "l_lower", "lambda_m", "C", "rho",
                    "tau_vacuum_s", "tau_dense_s", "speedup", "class"), rows)
    manifest.add(p)
    totals = {"tau_total_dense_s": total_lifetime(dense), "tau_total_vacuum_s": total_lifetime(vac),
              "tau_vacuum_from_A_s": vacuum_lifetime(initial, table)}
    p = out / "lifetime_totals.csv"
    _write_rows(p, ("quantity", "value_s"), sorted(totals.items()))
    manifest.add(p)
    if plots:
        manifest.add(_plot_script(out, "lifetimes", "lifetimes.csv", "n_lower", "tau_dense_s",
                                  "semilogy"))
    manifest.summary["lifetimes"] = totals
    print(f"lifetimes {initial.label}: dense total = {totals['tau_total_dense_s'] * 1e6:.4g} us, "
          f"vacuum total = {totals['tau_total_vacuum_s'] * 1e6:.4g} us")
    return totals


def cmd_cascade(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> dict:
    table = cfg.table()
    geom = cfg.geometry()
    t0, t1 = cfg.t0_us * 1e-6, cfg.t_end_us * 1e-6
    n0 = cfg.initial_atoms
    caps = [cfg.cap] + ([cfg.compare_cap] if cfg.compare_cap != cfg.cap else [])
    trajs = {}
    for cap in caps:
        net = build_network(table, geom, cap=cap, initial=cfg.initial_level,
                            detection_floor=cfg.detection_floor, absorb_below=cfg.detection_floor,
                            settings=cfg.settings(), workers=cfg.workers)
        tr = evolve(net, n0, t0, t1, n_points=cfg.cascade_points)
        trajs[cap] = tr
        p = out / f"cascade_cap{cap}.csv"
        tr.write_csv(p)
        manifest.add(p)
        p = out / f"cascade_edges_cap{cap}.csv"
        net.write_edges_csv(p)
        manifest.add(p)
        if plots:
            manifest.add(_plot_script(out, f"cascade_cap{cap}", f"cascade_cap{cap}.csv", "t_us",
                                      "detected_atoms"))
    main = trajs[cfg.cap]
    summary = {"atoms_t0": float(main.detected[0]), "atoms_end": float(main.detected[-1])}
    try:
        summary["e_folding_time_us"] = main.e_folding_time() * 1e6
    except ValueError as exc:
        manifest.warnings.append(f"cascade: {exc}")
        summary["e_folding_time_us"] = None
    if len(caps) == 2:
        summary["max_relative_deviation"] = max_relative_deviation(main, trajs[cfg.compare_cap])
        summary["max_deviation_over_n0"] = float(
            np.max(np.abs(main.detected - trajs[cfg.compare_cap].detected)) / n0)
    manifest.summary["cascade"] = summary
    efold = summary["e_folding_time_us"]
    line = f"cascade from {cfg.initial}: N({cfg.t0_us:g} us) = {summary['atoms_t0']:.6g}"
    line += f", e-folding time = {efold:.4g} us" if efold is not None else ", no 1/e drop in window"
    if "max_relative_deviation" in summary:
        line += (f", cap {cfg.cap} vs {cfg.compare_cap}: max deviation "
                 f"{summary['max_relative_deviation']:.3%} of signal, "
                 f"{summary['max_deviation_over_n0']:.3%} of N0")
    print(line)
    return summary


def cmd_map(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> dict:
    table = cfg.table()
    rhos = default_rho_grid(cfg.map_points, cfg.map_rho_min, cfg.map_rho_max)
    curve = critical_curve(rhos, gamma=cfg.map_gamma_s, bisection_tol=cfg.bisection_tol,
                           settings=cfg.settings(), workers=cfg.workers, verify=cfg.map_verify)
    p = out / "critical_curve.csv"
    curve.write_csv(p)
    manifest.add(p)
    placements = map_channels(downward_channels(cfg.initial_level, table), cfg.geometry(),
                              cfg.settings())
    p = out / "map_channels.csv"
    write_placements_csv(placements, p)
    manifest.add(p)
    if plots:
        manifest.add(_plot_script(out, "critical_curve", "critical_curve.csv", "rho", "C_crit",
                                  "loglog"))
    n_min = minimal_superradiant_n(placements)
    check = curve.monotone_scan_ok()
    summary = {"minimal_superradiant_ns": n_min,
               "open_above_points": int(np.sum(~np.isfinite(curve.C_crit))),
               "monotone_scan": None if check is None else ("pass" if check else "fail")}
    if check is False:
        bad = [float(r) for r, f in zip(curve.rho, curve.flips) if f not in (1, -1)]
        manifest.warnings.append(f"map: non-monotone classification near rho = {bad}")
    manifest.summary["map"] = summary
    print(f"map: minimal superradiant ns target n = {n_min}; "
          f"monotone scan {summary['monotone_scan'] or 'skipped'}")
    return summary


def cmd_run_all(cfg: RunConfig, out: Path, manifest: RunManifest, plots: bool = False) -> None:
    cmd_levels(cfg, out, manifest, plots)
    for lower in ("39s", "37s", "6s"):
        cmd_channel(replace_channel(cfg, lower), out, manifest, plots)
    cmd_lifetimes(cfg, out, manifest, plots)
    cmd_cascade(cfg, out, manifest, plots)
    cmd_map(cfg, out, manifest, plots)


def replace_channel(cfg: RunConfig, lower: str) -> RunConfig:
    return replace(cfg, channel_upper=cfg.initial, channel_lower=lower)


COMMANDS = {
    "levels": cmd_levels,
    "channel": cmd_channel,
    "lifetimes": cmd_lifetimes,
    "cascade": cmd_cascade,
    "map": cmd_map,
    "run-all": cmd_run_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", metavar="N", type=int, help="worker processes")
    common.add_argument("--cap", metavar="K", type=int, help="channels kept per cascade level")
    common.add_argument("--density-cm3", metavar="X", type=float, help="Rydberg density in cm^-3")
    common.add_argument("--initial", metavar="NL", help="initial level, e.g. 40p")
    common.add_argument("--plot-scripts", action="store_true",
                        help="also write small matplotlib scripts next to the CSV files")
    parser = argparse.ArgumentParser(prog="rydsr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "channel":
            sp.add_argument("upper", nargs="?", help="upper level (default from config)")
            sp.add_argument("lower", nargs="?", help="lower level (default from config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config, output_dir=args.out, workers=args.workers, cap=args.cap,
                          density_cm3=args.density_cm3, initial=args.initial,
                          channel_upper=getattr(args, "upper", None),
                          channel_lower=getattr(args, "lower", None))
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = RunManifest(command=args.command, config=cfg.snapshot())
    try:
        with np.errstate(over="ignore", under="ignore"):
            COMMANDS[args.command](cfg, out, manifest, args.plot_scripts)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest.wall_clock_s = time.perf_counter() - start
    missing = manifest.missing_outputs()
    if missing:
        print(f"numerical failure: empty or missing outputs {missing}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest.write(out / f"manifest_{args.command}.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
