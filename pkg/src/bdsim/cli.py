"""Batch experiment runner.

Loads JSON run configs, executes single points or parameter sweeps
(optionally across worker processes), and writes deterministic CSV,
JSON, or plot-ready data files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, observables, scenarios, solver

__all__ = [
    "ConfigError",
    "RunConfig",
    "ResultTable",
    "run",
    "emit_csv",
    "emit_json",
    "emit_plotdata",
    "list_scenarios",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
WORKER_ENV = "BDSIM_WORKERS"

_CONFIG_KEYS = {"scenario", "overrides", "bias", "sweep", "observables",
                "solver", "seed", "out", "format", "workers"}
_SOLVER_KEYS = {"strict", "method", "max_harmonics", "truncation_tol",
                "ground_state", "dt"}


class ConfigError(Exception):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one batch run."""

    scenario: str
    overrides: dict = field(default_factory=dict)
    bias: str = "n/a"
    sweep: tuple = ()                 # ((parameter, grid), ...)
    observables: tuple = ()
    solver: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None
    format: str = "csv"
    workers: int = 1

    def canonical(self):
        """Stable dict for hashing and metadata."""
        return {
            "scenario": self.scenario,
            "overrides": {k: self.overrides[k]
                          for k in sorted(self.overrides)},
            "bias": self.bias,
            "sweep": [[p, list(g)] for p, g in self.sweep],
            "observables": list(self.observables),
            "solver": {k: self.solver[k] for k in sorted(self.solver)},
            "seed": self.seed,
        }


def _check_keys(mapping, allowed, where):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def load_config(path):
    """Read and validate a JSON run config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, _CONFIG_KEYS, "config")
    if "scenario" not in raw:
        raise ConfigError("config is missing the 'scenario' key")
    scenario = raw["scenario"]
    if scenario not in scenarios.SCENARIO_IDS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError("'overrides' must be an object")
    known = set(scenarios.DEFAULTS[scenario])
    _check_keys(overrides, known, f"overrides for {scenario}")
    bias = raw.get("bias", "n/a")
    if bias not in ("forward", "reverse", "n/a"):
        raise ConfigError("'bias' must be forward, reverse, or n/a")
    sweep = []
    for entry in raw.get("sweep", []):
        if (not isinstance(entry, dict)
                or set(entry) != {"parameter", "grid"}):
            raise ConfigError(
                "each sweep entry needs exactly 'parameter' and 'grid'")
        param = entry["parameter"]
        if param not in known:
            raise ConfigError(
                f"unknown sweep parameter {param!r} for {scenario}")
        grid = entry["grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError(f"sweep grid for {param!r} must be non-empty")
        vals = []
        for g in grid:
            try:
                v = float(g)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"sweep grid for {param!r} contains a non-number")
            if not np.isfinite(v):
                raise ConfigError(
                    f"sweep grid for {param!r} contains a non-finite value")
            vals.append(v)
        sweep.append((param, tuple(vals)))
    obs = raw.get("observables", [])
    if not isinstance(obs, list):
        raise ConfigError("'observables' must be a list")
    solver_settings = raw.get("solver", {})
    if not isinstance(solver_settings, dict):
        raise ConfigError("'solver' must be an object")
    _check_keys(solver_settings, _SOLVER_KEYS, "solver settings")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("'seed' must be a non-negative integer")
    workers = raw.get("workers", 0)
    if not isinstance(workers, int) or workers < 0:
        raise ConfigError("'workers' must be a non-negative integer")
    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "json", "plotdata"):
        raise ConfigError("'format' must be csv, json, or plotdata")
    return RunConfig(scenario=scenario, overrides=dict(overrides), bias=bias,
                     sweep=tuple(sweep), observables=tuple(obs),
                     solver=dict(solver_settings), seed=seed,
                     out=raw.get("out"), format=fmt, workers=workers)


@dataclass
class ResultTable:
    """Sweep-parameter columns followed by observable columns."""

    columns: list
    rows: list                        # list of lists of float-or-None
    errors: list                      # one message or "" per row
    metadata: dict


# ---------------------------------------------------------------------------
# point evaluation


def _steady_state_for(scenario_id, sc, settings):
    """Representative state for expectation values, per scenario kind."""
    if scenario_id == "qutrit_diode":
        l0, l1 = sc.extras["L0"], sc.extras["L1"]
        pss = solver.periodic_steady_state(
            l0, l1, sc.params["delta_omega"],
            max_harmonics=int(settings.get("max_harmonics", 3)),
            truncation_tol=float(settings.get("truncation_tol", 1e-8)))
        return pss.average, pss
    if scenario_id == "fwbr":
        rho = solver.steady_state_direct(sc.extras["upper_liouvillian"])
        return rho, None
    if scenario_id == "maxwell":
        seg = sc.extras["segment_liouvillian"]
        rho = solver.steady_state_direct(seg("none", True))
        return rho, None
    if scenario_id == "bose_hubbard":
        if settings.get("ground_state", True):
            ham = sc.extras["hamiltonian"]()
            _e, vec = solver.ground_state(ham)
            return np.outer(vec, vec.conj()), None
        raise ConfigError("bose_hubbard only supports ground-state runs")
    method = settings.get("method", "auto")
    return solver.steady_state_direct(sc.liouvillian, method=method), None


def _reverse_overrides(scenario_id, params):
    """Occupation/temperature swap used for numeric rectification."""
    swaps = {
        "two_level": ("n_L", "n_R"),
        "interference_local": ("lambda_1", "lambda_6"),
        "interference_global": ("T_1", "T_6"),
        "gmr": None,
    }
    pair = swaps.get(scenario_id)
    if pair is None:
        raise ConfigError(
            f"observable 'R' is not defined for scenario {scenario_id}")
    full = dict(scenarios.DEFAULTS[scenario_id])
    full.update(params)
    full[pair[0]], full[pair[1]] = full[pair[1]], full[pair[0]]
    return full


def _evaluate_point(config, point):
    """Compute one grid point; returns (values, error-message)."""
    params = dict(config.overrides)
    params.update(point)
    if config.scenario == "bose_hubbard" and "seed" in scenarios.DEFAULTS[
            "bose_hubbard"] and "seed" not in params:
        params["seed"] = config.seed
    try:
        cfg = scenarios.config(config.scenario, overrides=params,
                               bias=config.bias, seed=config.seed)
        sc = scenarios.build(cfg)
        rho, pss = _steady_state_for(config.scenario, sc, config.solver)
        values = []
        for name in config.observables:
            if name == "R" and name not in sc.observables:
                values.append(_numeric_rectification(config, params))
                continue
            if name == "W" and config.scenario == "qutrit_diode":
                values.append(float(sc.extras["average_work"](pss)))
                continue
            if name not in sc.observables:
                raise KeyError(
                    f"unknown observable {name!r} for {config.scenario}")
            op = sc.observables[name]
            if callable(op):
                val = op(rho)
            else:
                val = observables.expect(op, rho)
            values.append(float(np.real(val)))
        return values, ""
    except (solver.SolverError, np.linalg.LinAlgError) as exc:
        return [None] * len(config.observables), f"solver: {exc}"
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _numeric_rectification(config, params):
    """-J_forward/J_reverse from two steady-state solves."""
    currents = []
    for p in (params, _reverse_overrides(config.scenario, params)):
        cfg = scenarios.config(config.scenario, overrides=p,
                               bias=config.bias, seed=config.seed)
        sc = scenarios.build(cfg)
        rho, _ = _steady_state_for(config.scenario, sc, config.solver)
        key = "J_spin" if "J_spin" in sc.observables else "J_L"
        op = sc.observables[key]
        val = op(rho) if callable(op) else observables.expect(op, rho)
        currents.append(float(np.real(val)))
    r, _contrast = observables.rectification_and_contrast(
        currents[0], currents[1])
    return r


def _point_task(args):
    config, idx, point = args
    values, err = _evaluate_point(config, dict(point))
    return idx, values, err


def run(config):
    """Execute a RunConfig and return the assembled ResultTable."""
    t_start = time.time()
    axes = config.sweep
    names = [p for p, _ in axes]
    grids = [g for _, g in axes]
    points = [dict(zip(names, combo))
              for combo in _grid_product(grids, names)]
    if not points:
        points = [{}]
    tasks = [(config, i, tuple(sorted(p.items())))
             for i, p in enumerate(points)]
    workers = _effective_workers(config.workers)
    results = [None] * len(points)
    if workers > 1 and len(points) > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            for idx, values, err in pool.map(_point_task, tasks):
                results[idx] = (values, err)
    else:
        for task in tasks:
            idx, values, err = _point_task(task)
            results[idx] = (values, err)
    columns = names + list(config.observables)
    rows = []
    errors = []
    for point, (values, err) in zip(points, results):
        rows.append([point[n] for n in names] + values)
        errors.append(err)
    meta = {
        "config_hash": config_hash(config),
        "version": __version__,
        "scenario": config.scenario,
        "sweep_axes": names,
        "wall_time_s": round(time.time() - t_start, 3),
    }
    return ResultTable(columns, rows, errors, meta)


def _grid_product(grids, names):
    if not grids:
        return []
    out = [()]
    for grid in grids:
        out = [combo + (val,) for combo in out for val in grid]
    return out


def _effective_workers(config_workers):
    if config_workers:
        return config_workers
    env = os.environ.get(WORKER_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(
                f"{WORKER_ENV} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError(f"{WORKER_ENV} must be >= 1")
        return n
    return 1


def config_hash(config):
    blob = json.dumps(config.canonical(), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    if value is None:
        return "nan"
    return format(float(value), ".17g")


def emit_csv(table, path):
    """Deterministic CSV: metadata comments, header, 17-digit floats."""
    buf = io.StringIO()
    buf.write(f"# config_hash={table.metadata['config_hash']}\n")
    buf.write(f"# version={table.metadata['version']}\n")
    buf.write(",".join(table.columns + ["error"]) + "\n")
    for row, err in zip(table.rows, table.errors):
        buf.write(",".join(_fmt(v) for v in row) + "," + err + "\n")
    _write_text(path, buf.getvalue())


def emit_json(table, path):
    payload = {
        "columns": table.columns,
        "rows": [[None if v is None else float(v) for v in row]
                 for row in table.rows],
        "errors": table.errors,
        "metadata": table.metadata,
    }
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def emit_plotdata(table, out_dir, scenario):
    """One two-column .dat file per observable curve.

    The first sweep axis is the x coordinate; any remaining axes split
    the rows into separate curves keyed by their values.
    """
    os.makedirs(out_dir, exist_ok=True)
    axes = table.metadata.get("sweep_axes", [])
    n_ax = len(axes)
    obs_names = table.columns[n_ax:]
    written = []
    for k, name in enumerate(obs_names):
        col = n_ax + k
        curves = {}
        for row in table.rows:
            key = tuple(row[1:n_ax])
            x = row[0] if n_ax else 0.0
            curves.setdefault(key, []).append((x, row[col]))
        for key, pts in sorted(curves.items()):
            tag = "_".join(f"{axes[i + 1]}{key[i]:g}"
                           for i in range(len(key)))
            tag = tag or "curve"
            fname = f"{scenario}_{name}_{tag}.dat"
            lines = [f"{_fmt(x)} {_fmt(y)}" for x, y in pts]
            _write_text(os.path.join(out_dir, fname),
                        "\n".join(lines) + "\n")
            written.append(fname)
    return written


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def list_scenarios():
    """Catalog of presets with their default parameter values."""
    catalog = {}
    for sid in scenarios.SCENARIO_IDS:
        catalog[sid] = {
            "defaults": {k: (list(v) if isinstance(v, tuple) else v)
                         for k, v in scenarios.DEFAULTS[sid].items()},
        }
    return catalog


# ---------------------------------------------------------------------------
# entry point


def _apply_flags(config, args):
    updates = {}
    if args.out is not None:
        updates["out"] = args.out
    if args.format is not None:
        updates["format"] = args.format
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        updates["workers"] = args.workers
    if args.seed is not None:
        updates["seed"] = args.seed
    if not updates:
        return config
    raw = config.canonical()
    raw["out"] = updates.get("out", config.out)
    raw["format"] = updates.get("format", config.format)
    raw["workers"] = updates.get("workers", config.workers)
    raw["seed"] = updates.get("seed", config.seed)
    raw["sweep"] = [{"parameter": p, "grid": list(g)}
                    for p, g in config.sweep]
    return parse_config(raw)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="bdsim", description="boundary-driven system simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json", "plotdata"))
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int)
    sub.add_parser("list-scenarios")
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        print(json.dumps(list_scenarios(), indent=2, sort_keys=True))
        return EXIT_OK

    try:
        config = load_config(args.config)
        config = _apply_flags(config, args)
        if args.command == "run" and config.sweep:
            raise ConfigError(
                "'run' takes a single-point config; use 'sweep'")
        if args.command == "sweep" and not config.sweep:
            raise ConfigError("'sweep' needs at least one sweep axis")
        table = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    strict = bool(config.solver.get("strict", False))
    failed = [e for e in table.errors if e]
    out = config.out or "results." + (
        "json" if config.format == "json" else "csv")
    if config.format == "csv":
        emit_csv(table, out)
    elif config.format == "json":
        emit_json(table, out)
    else:
        emit_plotdata(table, config.out or ".", config.scenario)
    if failed and strict:
        print(f"solver failure on {len(failed)} grid point(s)",
              file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
