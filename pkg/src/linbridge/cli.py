"""Command-line front end.

Subcommands ``stats``, ``simulate``, ``validate`` and ``demo``.  Exit codes:
0 success, 1 I/O or configuration error, 2 mathematically infeasible
bridge, 3 statistical validation failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, dump_config, load_config
from .errors import SingularGramian, Unbridgeable, UnknownPreset
from .gramians import check_bridgeability, gramian_table
from .montecarlo import run_ensemble, validate
from .presets import PRESET_NAMES, preset
from .sde import SimulationPlan, simulate_states
from .stats import BridgeSpec, bridge_statistics
from .svgplot import line_chart

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_STAT = 0, 1, 2, 3


def _num(x):
    return repr(float(x))


def _prepare(cfg: RunConfig):
    sys_ = cfg.build_system()
    grid = cfg.build_grid()
    table = gramian_table(sys_, grid)
    report = check_bridgeability(table)
    if not report.bridgeable:
        raise Unbridgeable(str(report), report)
    spec = BridgeSpec(sys_, cfg.bridge.xi0, cfg.bridge.xi1)
    return sys_, grid, table, spec


def _outdir(cfg):
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_stats_csv(path, grid, stats):
    n = stats.mean.shape[1]
    header = ["t"] + [f"L_{i + 1}" for i in range(n)]
    header += [f"Q_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for k, t in enumerate(grid.nodes):
            w.writerow([_num(t)] + [_num(v) for v in stats.mean[k]] + [_num(v) for v in stats.cov_diag[k].ravel()])


def cmd_stats(cfg: RunConfig):
    sys_, grid, table, spec = _prepare(cfg)
    stats = bridge_statistics(table, sys_, spec)
    path = _outdir(cfg) / "stats.csv"
    write_stats_csv(path, grid, stats)
    return [path], stats


def _plot_paths(out, grid, paths, mean=None):
    files = []
    t = grid.nodes
    n = paths[0].shape[1]
    for i in range(n):
        series = [{"x": t, "y": p[:, i], "label": f"path {k}"} for k, p in enumerate(paths)]
        if mean is not None:
            series.append({"x": t, "y": mean[:, i], "label": "mean L(t)", "dashed": True})
        f = out / f"component_{i + 1}.svg"
        line_chart(series, f, title=f"Bridge sample paths, component {i + 1}", xlabel="t", ylabel=f"x_{i + 1}(t)")
        files.append(f)
    if n >= 2:
        series = [{"x": p[:, 0], "y": p[:, 1], "label": f"path {k}"} for k, p in enumerate(paths)]
        if mean is not None:
            series.append({"x": mean[:, 0], "y": mean[:, 1], "label": "mean L(t)", "dashed": True})
        f = out / "phase.svg"
        line_chart(series, f, title="Bridge sample paths, phase plane", xlabel="x_1", ylabel="x_2")
        files.append(f)
    return files


def cmd_simulate(cfg: RunConfig, gain_scale: float = 1.0):
    sys_, grid, table, spec = _prepare(cfg)
    n_paths = cfg.simulation.n_paths
    if n_paths < 1:
        raise ValueError("simulate needs n_paths >= 1")
    plan = SimulationPlan.build(spec, table, cfg.simulation.seed, gain_scale)
    out = _outdir(cfg)
    path = out / "paths.csv"
    keep = []
    t = [_num(v) for v in grid.nodes]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["path_id", "t"] + [f"x_{i + 1}" for i in range(sys_.n)])
        for ids, states in simulate_states(plan, n_paths, workers=cfg.simulation.workers):
            for p, st in zip(ids, states):
                if len(keep) < 10:
                    keep.append(st)
                for k in range(grid.N + 1):
                    w.writerow([p, t[k]] + [_num(v) for v in st[k]])
    files = [path]
    if "svg" in cfg.output.formats:
        mean = bridge_statistics(table, sys_, spec).mean
        files += _plot_paths(out, grid, keep, mean)
    return files


def cmd_validate(cfg: RunConfig, gain_scale: float = 1.0):
    n_paths = cfg.simulation.n_paths
    if n_paths < 1000:
        raise ValueError(f"validate needs at least 1000 paths, got {n_paths}")
    sys_, grid, table, spec = _prepare(cfg)
    query = [grid.index_of(t) for t in cfg.validation.query_times]
    pairs = [(grid.index_of(a), grid.index_of(b)) for a, b in cfg.validation.pairs]
    stats = run_ensemble(
        spec, table, cfg.simulation.seed, n_paths, query, pairs,
        workers=cfg.simulation.workers, gain_scale=gain_scale,
    )
    report = validate(stats, bridge_statistics(table, sys_, spec), cfg.validation.z_threshold)
    path = _outdir(cfg) / "validation.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["entry", "analytic", "empirical", "z"])
        for e in report.entries:
            w.writerow([e.name, _num(e.analytic), _num(e.empirical), _num(e.z)])
    return [path], report


def cmd_demo(name: str, directory=None):
    cfg = preset(name, directory)
    out = _outdir(cfg)
    dump_config(cfg, out / "config.json")
    files = [out / "config.json"]
    files += cmd_stats(cfg)[0]
    files += cmd_simulate(cfg)
    return files


def _add_common(p, sim=True):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--grid", type=int, help="number of grid steps N")
    if sim:
        p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
        p.add_argument("--paths", type=int, help="number of sample paths")
        p.add_argument("--workers", type=int, help="worker threads")
        p.add_argument("--corrupt-gain", type=float, default=1.0, metavar="FACTOR",
                       help=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="linbridge", description="Stochastic bridges of linear systems")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("stats", help="write exact bridge mean and covariance"), sim=False)
    p = sub.add_parser("simulate", help="simulate bridge sample paths")
    _add_common(p)
    p.add_argument("--svg", action="store_true", help="also write SVG plots")
    _add_common(sub.add_parser("validate", help="compare Monte Carlo statistics with theory"))
    p = sub.add_parser("demo", help="run a bundled preset")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--out", help="output directory (default: preset name)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            files = cmd_demo(args.name, args.out)
            print("\n".join(str(f) for f in files))
            return EXIT_OK
        cfg = load_config(args.config).with_overrides(
            seed=getattr(args, "seed", None),
            n_paths=getattr(args, "paths", None),
            workers=getattr(args, "workers", None),
            N=args.grid,
            directory=args.out,
            svg=getattr(args, "svg", False),
        )
        if args.command == "stats":
            files, _ = cmd_stats(cfg)
        elif args.command == "simulate":
            files = cmd_simulate(cfg, args.corrupt_gain)
        else:
            files, report = cmd_validate(cfg, args.corrupt_gain)
            print(report)
            for e in report.failures():
                print(f"  {e.name}: analytic {e.analytic:.6g}, empirical {e.empirical:.6g}, z = {e.z:.2f}")
            if not report.passed:
                return EXIT_STAT
        print("\n".join(str(f) for f in files))
        return EXIT_OK
    except Unbridgeable as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(exc.report, file=sys.stderr)
        return EXIT_INFEASIBLE
    except SingularGramian as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except UnknownPreset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
