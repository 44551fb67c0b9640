"""Batch command-line front end.

Every command resolves its configuration (flags over an optional JSON
config file over defaults), validates it in one pass, runs, and writes
machine-readable outputs plus a ``manifest`` capturing the resolved
configuration.  Exit codes: 0 success, 2 validation error, 3 computational
failure (serialized to ``errors.csv``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, backend, boxset, continuity
from .attractor import SolverSettings, approximate_attractor
from .boxset import BoxCover, GridSpec
from .continuity import ParamGrid, PairDistance, SweepResult
from .errors import BoxflowError, UsageError
from .flow import FAMILIES, get_family

DEFAULTS = {
    "dt": 0.01,
    "tstep": 1.0,
    "tol_cells": 2.0,
    "max_iter": 200,
    "consec": 3,
    "samples": None,
    "escape_factor": 0.5,
    "window": 1,
    "threads": 1,
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_manifest(path: Path, entries: dict) -> None:
    lines = [f"{k}={_fmt(entries[k])}" for k in sorted(entries)]
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: Path) -> dict[str, str]:
    out = {}
    for ln in path.read_text().splitlines():
        if "=" in ln:
            k, v = ln.split("=", 1)
            out[k] = v
    return out


def _write_failure(outdir: Path, exc: BoxflowError) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "errors.csv", ["error", "detail"],
              [[type(exc).__name__, str(exc).replace(",", ";")]])
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 3


class ConfigError(Exception):
    def __init__(self, problems):
        self.problems = problems
        super().__init__("; ".join(problems))


def _merge_config(args: argparse.Namespace) -> dict:
    """Flags override the JSON config file; defaults fill the rest."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"config file {args.config}: {exc}"])
        if not isinstance(loaded, dict):
            raise ConfigError([f"config file {args.config}: expected a JSON object"])
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("func", "config"):
            continue
        if value is not None:
            cfg[key] = value
    return cfg


def _resolve_grid(cfg: dict, problems: list[str], family) -> GridSpec | None:
    domain = cfg.get("domain")
    if domain is None and family is not None:
        domain = [v for bounds in family.default_domain for v in bounds]
        # flatten as lo1 hi1 lo2 hi2 ...
    cells = cfg.get("cells")
    if cells is None:
        problems.append("cells_per_axis is required (--cells)")
        return None
    if isinstance(cells, int):
        cells = [cells]
    if domain is None:
        problems.append("domain bounds are required (--domain)")
        return None
    if len(domain) != 2 * len(cells):
        problems.append(f"domain needs 2 bounds per axis, got {len(domain)} for {len(cells)} axes")
        return None
    lower = tuple(float(domain[2 * i]) for i in range(len(cells)))
    upper = tuple(float(domain[2 * i + 1]) for i in range(len(cells)))
    try:
        return GridSpec(lower, upper, tuple(int(n) for n in cells))
    except UsageError as exc:
        problems.append(str(exc))
        return None


def _resolve_family(cfg: dict, problems: list[str]):
    name = cfg.get("family")
    if not name:
        problems.append("family is required (--family)")
        return None
    if name not in FAMILIES:
        problems.append(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
        return None
    return get_family(name)


def _resolve_settings(cfg: dict, problems: list[str]) -> SolverSettings | None:
    try:
        return SolverSettings(
            t_step=float(cfg["tstep"]),
            dt=float(cfg["dt"]),
            tol_cells=float(cfg["tol_cells"]),
            max_iter=int(cfg["max_iter"]),
            consec=int(cfg["consec"]),
            samples_per_axis=None if cfg["samples"] is None else int(cfg["samples"]),
            escape_factor=float(cfg["escape_factor"]),
        )
    except (UsageError, ValueError) as exc:
        problems.append(str(exc))
        return None


def _resolve_seed(cfg: dict, grid: GridSpec | None, problems: list[str]) -> BoxCover | None:
    if grid is None:
        return None
    box = cfg.get("seed_box")
    if box is None:
        return BoxCover.full(grid)
    if len(box) != 2 * grid.dim:
        problems.append("seed_box needs 2 bounds per axis")
        return None
    lo = [float(box[2 * i]) for i in range(grid.dim)]
    hi = [float(box[2 * i + 1]) for i in range(grid.dim)]
    cover = BoxCover.from_box(grid, lo, hi)
    if cover.is_empty:
        problems.append("seed_box does not intersect the grid")
        return None
    return cover


def _resolve_param_grid(cfg: dict, problems: list[str]) -> ParamGrid | None:
    g = cfg.get("grid")
    if g is None:
        problems.append("parameter grid is required (--grid MIN MAX M)")
        return None
    try:
        return ParamGrid(float(g[0]), float(g[1]), int(float(g[2])))
    except (UsageError, ValueError, IndexError) as exc:
        problems.append(f"grid: {exc}")
        return None


def _base_manifest(cfg: dict, command: str) -> dict:
    entries = {"version": __version__, "backend": backend.BACKEND, "command": command}
    for k, v in cfg.items():
        if k in ("out", "func", "config"):
            continue
        if isinstance(v, (list, tuple)):
            entries[k] = " ".join(_fmt(x) for x in v)
        elif v is None:
            entries[k] = "auto"
        else:
            entries[k] = v
    return entries


def _outdir(cfg: dict, problems: list[str]) -> Path | None:
    out = cfg.get("out")
    if not out:
        problems.append("output directory is required (--out)")
        return None
    return Path(out)


def _trace_rows(approx):
    return [[e.n, e.t, e.step_dist, e.cells] for e in approx.trace.entries]


# -- commands ---------------------------------------------------------


def cmd_attractor(args) -> int:
    cfg = _merge_config(args)
    problems: list[str] = []
    family = _resolve_family(cfg, problems)
    grid = _resolve_grid(cfg, problems, family)
    settings = _resolve_settings(cfg, problems)
    seed = _resolve_seed(cfg, grid, problems)
    outdir = _outdir(cfg, problems)
    if cfg.get("lam") is None:
        problems.append("a parameter value is required (--lambda)")
    if problems:
        raise ConfigError(problems)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _base_manifest(cfg, "attractor")
    write_manifest(outdir / "manifest", manifest)
    try:
        approx = approximate_attractor(family, float(cfg["lam"]), seed, settings)
    except BoxflowError as exc:
        return _write_failure(outdir, exc)
    (outdir / "cover.txt").write_text(boxset.dump_cover(approx.cover))
    write_csv(outdir / "trace.csv", ["n", "t", "step_dist", "cells"], _trace_rows(approx))
    manifest["invariance_defect"] = approx.invariance_defect
    manifest["t_total"] = approx.t_total
    manifest["cell_width"] = grid.max_width
    write_manifest(outdir / "manifest", manifest)
    return 0


def _sweep_outputs(outdir: Path, sr: SweepResult) -> None:
    pts = sr.grid.points
    rows = []
    for i in range(sr.grid.m):
        if i in sr.approxs:
            a = sr.approxs[i]
            rows.append([float(pts[i]), len(a.cover), a.t_total, 1])
        else:
            rows.append([float(pts[i]), 0, 0.0, 0])
    write_csv(outdir / "sweep.csv", ["lambda", "cells", "t_total", "converged"], rows)
    drows = [[i, j, p.d_h, p.rho_ij, p.rho_ji] for (i, j), p in sorted(sr.pairs.items())]
    write_csv(outdir / "dist.csv", ["i", "j", "dH", "rho_ij", "rho_ji"], drows)
    for i in sorted(sr.approxs):
        (outdir / f"cover_{i:03d}.txt").write_text(boxset.dump_cover(sr.approxs[i].cover))


def cmd_sweep(args) -> int:
    cfg = _merge_config(args)
    problems: list[str] = []
    family = _resolve_family(cfg, problems)
    grid = _resolve_grid(cfg, problems, family)
    settings = _resolve_settings(cfg, problems)
    seed = _resolve_seed(cfg, grid, problems)
    pgrid = _resolve_param_grid(cfg, problems)
    outdir = _outdir(cfg, problems)
    if problems:
        raise ConfigError(problems)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _base_manifest(cfg, "sweep")
    write_manifest(outdir / "manifest", manifest)
    try:
        sr = continuity.sweep(family, pgrid, seed, settings,
                              window=int(cfg["window"]), threads=int(cfg["threads"]))
    except BoxflowError as exc:
        return _write_failure(outdir, exc)
    _sweep_outputs(outdir, sr)
    manifest["cell_width"] = sr.cell_width
    manifest["failures"] = len(sr.failures)
    write_manifest(outdir / "manifest", manifest)
    return 0


def cmd_equi(args) -> int:
    cfg = _merge_config(args)
    problems: list[str] = []
    family = _resolve_family(cfg, problems)
    grid = _resolve_grid(cfg, problems, family)
    settings = _resolve_settings(cfg, problems)
    seed = _resolve_seed(cfg, grid, problems)
    pgrid = _resolve_param_grid(cfg, problems)
    outdir = _outdir(cfg, problems)
    times = cfg.get("times")
    if not times:
        problems.append("a times list is required (--times)")
    if problems:
        raise ConfigError(problems)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _base_manifest(cfg, "equi")
    write_manifest(outdir / "manifest", manifest)
    try:
        curve = continuity.equi_attraction_curve(family, pgrid, seed, times, settings,
                                                 threads=int(cfg["threads"]))
    except BoxflowError as exc:
        return _write_failure(outdir, exc)
    write_csv(outdir / "equi.csv", ["t", "e", "argmax_lambda"],
              [[t, e, l] for t, e, l in zip(curve.times, curve.values, curve.argmax_lambda)])
    manifest["cell_width"] = seed.grid.max_width
    manifest["failed_lambdas"] = len(curve.failed)
    write_manifest(outdir / "manifest", manifest)
    return 0


def cmd_dini(args) -> int:
    cfg = _merge_config(args)
    problems: list[str] = []
    family = _resolve_family(cfg, problems)
    grid = _resolve_grid(cfg, problems, family)
    settings = _resolve_settings(cfg, problems)
    seed = _resolve_seed(cfg, grid, problems)
    pgrid = _resolve_param_grid(cfg, problems)
    outdir = _outdir(cfg, problems)
    t_unit = cfg.get("t_unit")
    if t_unit is None or float(t_unit) <= 0:
        problems.append("a positive t_unit is required (--t-unit)")
    iters = int(cfg.get("iters", 10))
    max_steps = int(cfg.get("max_steps", 20))
    if problems:
        raise ConfigError(problems)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _base_manifest(cfg, "dini")
    manifest["iters"] = iters
    manifest["max_steps"] = max_steps
    write_manifest(outdir / "manifest", manifest)
    try:
        sel = continuity.select_T(family, pgrid, seed, float(t_unit), max_steps,
                                  settings.cfg, settings.samples_per_axis,
                                  threads=int(cfg["threads"]))
        report = continuity.dini_check(family, pgrid, seed, sel.T, iters, settings,
                                       threads=int(cfg["threads"]))
    except BoxflowError as exc:
        return _write_failure(outdir, exc)
    write_csv(outdir / "dini.csv", ["lambda", "n", "dH_to_final", "subset_ok"],
              [[r.lam, r.n, r.dist_to_attractor, int(r.subset_ok)] for r in report.rows])
    manifest["selected_T"] = sel.T
    manifest["max_monotonicity_violation"] = report.max_monotonicity_violation
    manifest["subset_violations"] = report.subset_violations
    manifest["cell_width"] = seed.grid.max_width
    write_manifest(outdir / "manifest", manifest)
    return 0


def load_sweep_dir(path: Path) -> SweepResult:
    """Rebuild the scan-relevant part of a sweep from its output files."""
    manifest = read_manifest(path / "manifest")
    if manifest.get("command") != "sweep":
        raise UsageError(f"{path} does not contain sweep outputs")
    gmin, gmax, gm = manifest["grid"].split()
    pgrid = ParamGrid(float(gmin), float(gmax), int(float(gm)))
    approxs = {}
    for i, ln in enumerate((path / "sweep.csv").read_text().splitlines()[1:]):
        parts = ln.split(",")
        if int(parts[3]):
            approxs[i] = None  # placeholder: only membership is needed
    pairs = {}
    for ln in (path / "dist.csv").read_text().splitlines()[1:]:
        i, j, dh, rij, rji = ln.split(",")
        pairs[(int(i), int(j))] = PairDistance(float(dh), float(rij), float(rji))
    return SweepResult(grid=pgrid, window=int(manifest["window"]), approxs=approxs,
                       pairs=pairs, failures=[], cell_width=float(manifest["cell_width"]))


def cmd_scan(args) -> int:
    cfg = _merge_config(args)
    problems: list[str] = []
    outdir = _outdir(cfg, problems)
    indir = Path(cfg["sweep_dir"]) if cfg.get("sweep_dir") else outdir
    delta = cfg.get("delta")
    if delta is None or float(delta) <= 0:
        problems.append("a positive delta is required (--delta)")
    if indir is not None and not (indir / "dist.csv").exists():
        problems.append(f"no sweep outputs found in {indir} (run `sweep` first)")
    if problems:
        raise ConfigError(problems)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _base_manifest(cfg, "scan")
    if outdir != indir:
        write_manifest(outdir / "manifest", manifest)
    try:
        sr = load_sweep_dir(indir)
        report = continuity.discontinuity_scan(sr, float(delta), int(cfg["window"]))
    except BoxflowError as exc:
        return _write_failure(outdir, exc)
    write_csv(outdir / "scan.csv", ["lambda", "osc", "flagged"],
              [[p.lam, p.osc, int(p.flagged)] for p in report.points])
    manifest["flagged_fraction"] = report.flagged_fraction
    manifest["gaps"] = len(report.gaps)
    write_manifest(outdir / "manifest", manifest)
    return 0


def cmd_report(args) -> int:
    path = Path(args.dir)
    manifest_path = path / "manifest"
    if not manifest_path.exists():
        print(f"no manifest in {path}", file=sys.stderr)
        return 2
    manifest = read_manifest(manifest_path)
    print(f"boxflow {manifest.get('version', '?')} -- {manifest.get('command', '?')} run in {path}")
    for key in sorted(manifest):
        if key in ("version", "command"):
            continue
        print(f"  {key} = {manifest[key]}")
    for name in ("sweep.csv", "trace.csv", "equi.csv", "dini.csv", "scan.csv", "dist.csv", "errors.csv"):
        f = path / name
        if f.exists():
            n = max(0, len(f.read_text().splitlines()) - 1)
            print(f"  {name}: {n} rows")
    if (path / "errors.csv").exists():
        print("  status: FAILED (see errors.csv)")
    else:
        print("  status: ok")
    return 0


# -- parser -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boxflow",
                                description="Box-covering attractor experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, param_grid=False):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--family", choices=sorted(FAMILIES))
        sp.add_argument("--domain", type=float, nargs="+", metavar="B",
                        help="domain bounds: lo hi per axis")
        sp.add_argument("--cells", type=int, nargs="+", metavar="N")
        sp.add_argument("--seed-box", dest="seed_box", type=float, nargs="+", metavar="B",
                        help="seed cover bounds (default: full grid)")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--tstep", type=float)
        sp.add_argument("--tol-cells", dest="tol_cells", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--consec", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--escape-factor", dest="escape_factor", type=float)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help="output directory")
        if param_grid:
            sp.add_argument("--grid", type=float, nargs=3, metavar=("MIN", "MAX", "M"))
            sp.add_argument("--window", type=int)

    sp = sub.add_parser("attractor", help="approximate one attractor")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.set_defaults(func=cmd_attractor)

    sp = sub.add_parser("sweep", help="attractors over a parameter grid")
    common(sp, param_grid=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("equi", help="equi-attraction curve over a grid")
    common(sp, param_grid=True)
    sp.add_argument("--times", type=float, nargs="+", metavar="T")
    sp.set_defaults(func=cmd_equi)

    sp = sub.add_parser("dini", help="common absorption time + monotone convergence")
    common(sp, param_grid=True)
    sp.add_argument("--t-unit", dest="t_unit", type=float)
    sp.add_argument("--iters", type=int)
    sp.add_argument("--max-steps", dest="max_steps", type=int)
    sp.set_defaults(func=cmd_dini)

    sp = sub.add_parser("scan", help="oscillation scan of a finished sweep")
    sp.add_argument("--config", help="JSON config file; flags override it")
    sp.add_argument("--sweep-dir", dest="sweep_dir", help="directory with sweep outputs (default: --out)")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--window", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("report", help="summarize an output directory")
    sp.add_argument("dir")
    sp.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  - {prob}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
