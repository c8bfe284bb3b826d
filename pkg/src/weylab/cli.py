"""Command line experiment runner.

Configs are strict-mode INI files (UTF-8) with three sections:

    [experiment]   name, seed, tolerance, out_dir
    [grid]         dim, L, npts
    [params]       experiment-specific numeric parameters

Unknown sections or keys are rejected with line diagnostics. Every run
writes results.csv (plot-ready data series, RFC 4180, 17 significant
digits), summary.json (predicted, measured, relative error, pass/fail,
wall time, anchor string), and manifest.ini echoing the resolved
config. Exit status: 0 pass, 2 tolerance failure, 1 execution or
config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

from .experiments import (ANCHORS, SCHEMAS, ExperimentConfig,
                          ExperimentResult, run_experiment_pipeline)


class ConfigError(Exception):
    """Invalid experiment configuration."""


def _key_line(text: str, section: str, key: str) -> int:
    """Best-effort line number of a key inside a section, for messages."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return 0


def parse_config(path: str) -> ExperimentConfig:
    """Parse and validate a config file against the experiment schema."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(strict=True, interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    known_sections = {"experiment", "grid", "params"}
    for section in parser.sections():
        if section not in known_sections:
            line = _key_line(text, section, "") or 1
            raise ConfigError(
                f"{path}: unknown section [{section}] "
                f"(expected one of {sorted(known_sections)})")
    if "experiment" not in parser:
        raise ConfigError(f"{path}: missing required section [experiment]")

    exp = dict(parser["experiment"])
    name = exp.pop("name", None)
    if name is None:
        raise ConfigError(f"{path}: [experiment] needs a 'name' field")
    if name not in SCHEMAS:
        raise ConfigError(
            f"{path}: unknown experiment {name!r} "
            f"(expected one of {sorted(SCHEMAS)})")
    schema = SCHEMAS[name]

    def bad_field(section: str, key: str, reason: str) -> ConfigError:
        line = _key_line(text, section, key)
        where = f"{path}:{line}" if line else path
        return ConfigError(f"{where}: field {key!r} in [{section}]: {reason}")

    try:
        seed = int(exp.pop("seed", 0))
    except ValueError:
        raise bad_field("experiment", "seed", "must be an integer")
    try:
        tolerance = float(exp.pop("tolerance", schema["tolerance"]))
    except ValueError:
        raise bad_field("experiment", "tolerance", "must be a number")
    out_dir = exp.pop("out_dir", ".")
    if exp:
        key = sorted(exp)[0]
        raise bad_field("experiment", key, "unknown field")
    if tolerance <= 0:
        raise bad_field("experiment", "tolerance", "must be positive")

    grid = dict(schema["grid"])
    for key, raw in (parser["grid"] if "grid" in parser else {}).items():
        if key not in grid:
            raise bad_field("grid", key,
                            f"unknown field (expected {sorted(grid)})")
        try:
            grid[key] = int(raw) if key in ("dim", "npts") else float(raw)
        except ValueError:
            raise bad_field("grid", key, f"could not parse {raw!r}")

    spec = schema["params"]
    params = {key: default for key, (_, default) in spec.items()}
    for key, raw in (parser["params"] if "params" in parser else {}).items():
        if key not in spec:
            raise bad_field("params", key,
                            f"unknown field (expected {sorted(spec)})")
        conv = spec[key][0]
        try:
            params[key] = conv(raw)
        except (ValueError, TypeError):
            raise bad_field("params", key, f"could not parse {raw!r}")

    return ExperimentConfig(experiment=name, grid=grid, params=params,
                            tolerance=tolerance, seed=seed, out_dir=out_dir)


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return float(value)


def write_outputs(result: ExperimentResult, cfg: ExperimentConfig,
                  out_dir: Path) -> None:
    """Emit results.csv, summary.json, and manifest.ini for one run."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(result.series_header)
        for row in result.series:
            writer.writerow([_fmt(v) for v in row])

    summary = {
        "experiment": result.name,
        "anchor": result.anchor,
        "predicted": result.predicted,
        "measured": result.measured,
        "relative_error": result.rel_error,
        "tolerance": result.tolerance,
        "passed": result.passed,
        "wall_time_s": result.wall_time,
        "seed": cfg.seed,
        "details": _jsonable(result.details),
        "config": {"grid": _jsonable(cfg.grid),
                   "params": _jsonable(cfg.params)},
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = configparser.ConfigParser(interpolation=None)
    manifest.optionxform = str
    manifest["experiment"] ={"name": cfg.experiment, "seed": str(cfg.seed),
                              "tolerance": _fmt(cfg.tolerance),
                              "out_dir": str(out_dir)}
    manifest["grid"] = {k: _fmt(v) for k, v in cfg.grid.items()}
    manifest["params"] = {
        k: ";".join(",".join(_fmt(u) for u in pair) for pair in v)
        if v and isinstance(v, tuple) and isinstance(v[0], tuple)
        else ",".join(_fmt(u) for u in v) if isinstance(v, tuple)
        else _fmt(v)
        for k, v in cfg.params.items()}
    with open(out_dir / "manifest.ini", "w", encoding="utf-8") as fh:
        manifest.write(fh)


def _run_one(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    result = run_experiment_pipeline(cfg, workers=workers)
    write_outputs(result, cfg, out_dir)
    status = "PASS" if result.passed else "FAIL"
    print(f"{result.name}: {status} predicted={result.predicted:.6g} "
          f"measured={result.measured:.6g} rel_error={result.rel_error:.3e} "
          f"tolerance={result.tolerance:g} ({result.wall_time:.1f} s) "
          f"-> {out_dir}")
    return 0 if result.passed else 2


def _override(cfg: ExperimentConfig, param: str, raw: str
              ) -> ExperimentConfig:
    if param in cfg.grid:
        value = int(raw) if param in ("dim", "npts") else float(raw)
        grid = dict(cfg.grid, **{param: value})
        return ExperimentConfig(cfg.experiment, grid, cfg.params,
                                cfg.tolerance, cfg.seed, cfg.out_dir)
    spec = SCHEMAS[cfg.experiment]["params"]
    if param in spec:
        params = dict(cfg.params, **{param: spec[param][0](raw)})
        return ExperimentConfig(cfg.experiment, cfg.grid, params,
                                cfg.tolerance, cfg.seed, cfg.out_dir)
    if param == "seed":
        return ExperimentConfig(cfg.experiment, cfg.grid, cfg.params,
                                cfg.tolerance, int(raw), cfg.out_dir)
    raise ConfigError(
        f"sweep parameter {param!r} is not a grid or experiment field of "
        f"{cfg.experiment} (expected one of "
        f"{sorted(list(cfg.grid) + list(spec) + ['seed'])})")


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = ExperimentConfig(cfg.experiment, cfg.grid, cfg.params,
                               cfg.tolerance, args.seed, cfg.out_dir)
    out_dir = Path(args.out if args.out is not None else cfg.out_dir)
    return _run_one(cfg, out_dir, args.workers)


def _cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = ExperimentConfig(cfg.experiment, cfg.grid, cfg.params,
                               cfg.tolerance, args.seed, cfg.out_dir)
    values = [v for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs a non-empty --values list")
    base = Path(args.out if args.out is not None else cfg.out_dir)
    rows = []
    worst = 0
    for raw in values:
        sub = _override(cfg, args.param, raw.strip())
        out_dir = base / f"{args.param}_{raw.strip()}"
        result = run_experiment_pipeline(sub, workers=args.workers)
        write_outputs(result, sub, out_dir)
        rows.append((raw.strip(), result.predicted, result.measured,
                     result.rel_error, result.passed))
        worst = max(worst, 0 if result.passed else 2)
        status = "PASS" if result.passed else "FAIL"
        print(f"{cfg.experiment}[{args.param}={raw.strip()}]: {status} "
              f"rel_error={result.rel_error:.3e} ({result.wall_time:.1f} s)")
    base.mkdir(parents=True, exist_ok=True)
    with open(base / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow((args.param, "predicted", "measured", "rel_error",
                         "passed"))
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weylab",
        description="Spectral-asymptotics experiments on discretized "
                    "pseudo-differential operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config", help="path to the INI config file")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser(
        "sweep", help="run a config repeatedly over parameter values")
    sweep_p.add_argument("config", help="path to the INI config file")
    sweep_p.add_argument("--param", required=True,
                         help="grid or params field to vary")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values")
    sweep_p.set_defaults(func=_cmd_sweep)

    for p in (run_p, sweep_p):
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes for parallel sections")
        p.add_argument("--out", default=None,
                       help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
