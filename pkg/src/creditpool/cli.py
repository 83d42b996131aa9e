"""Command-line interface: config parsing, CSV/manifest output.

The only module that touches files and process arguments.  Subcommands:

* ``limit``     solve the large-pool limit, write t,F,Q,b_* columns
* ``simulate``  run replications of the finite pool, write paths + aggregate
* ``converge``  distance-versus-pool-size study, one CSV row per pool size
* ``figures``   the three baked-in parameter-sweep curve families

Configuration is one JSON object with sections ``measure``, ``factor``,
``grid``, ``solver``, ``sim``, ``converge``; every field is optional and
defaults are materialized into the manifest written next to each output.
A manifest can itself be passed back as ``--config`` to reproduce a run.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .convergence import (
    contagion_sweep,
    figure_sweep,
    lln_experiment,
    reversion_level_sweep,
    reversion_speed_sweep,
)
from .errors import (
    ConfigError,
    CreditPoolError,
    NoConvergenceError,
    NonFiniteResultError,
    NonFiniteStateError,
    ValidationError,
)
from .limit import solve_limit
from .model import (
    DiscreteTypeMeasure,
    EpsSchedule,
    FirmType,
    SystematicFactorConfig,
    TimeGrid,
    TypeAtom,
    validate_measure,
)
from .simulate import SimConfig, run_replications

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_NONFINITE = 4
EXIT_IO = 5

THREADS_ENV = "CREDITPOOL_THREADS"

DEFAULT_CONFIG = {
    "measure": {
        "cap": 100.0,
        "atoms": [
            {
                "alpha": 4.0,
                "lambda_bar": 0.5,
                "sigma": 0.9,
                "beta_c": 2.0,
                "beta_s": 0.0,
                "lambda_init": 0.5,
                "weight": 1.0,
            }
        ],
    },
    "factor": {"gamma": 1.0, "x_init": 0.0, "eps": {"kind": "inverse_sqrt", "value": 1.0}},
    "grid": {"t_end": 1.0, "n_steps": 1000},
    "solver": {"tol": 1e-10, "max_iter": 200, "method": "closed_form", "relaxation": 1.0},
    "sim": {
        "n_firms": 10000,
        "n_reps": 20,
        "seed": 20260810,
        "assignment": "proportional",
        "record_moments": True,
    },
    "converge": {"n_values": [100, 1000, 10000], "n_reps": 20},
}

_ATOM_KEYS = {"alpha", "lambda_bar", "sigma", "beta_c", "beta_s", "lambda_init", "weight"}


# ---------------------------------------------------------------------------
# configuration plumbing


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_set(expr: str) -> tuple[list[str], object]:
    if "=" not in expr:
        raise ConfigError(f"--set expects key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _apply_set(config: dict, segments: list[str], value, expr: str) -> None:
    node = config
    for i, seg in enumerate(segments):
        last = i == len(segments) - 1
        if isinstance(node, list):
            try:
                idx = int(seg)
                node[idx]  # noqa: B018 - bounds check
            except (ValueError, IndexError):
                raise ConfigError(f"bad list index {seg!r} in --set {expr!r}") from None
            if last:
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if seg not in node:
                raise ConfigError(f"unknown config key {seg!r} in --set {expr!r}")
            if last:
                node[seg] = value
            else:
                node = node[seg]
        else:
            raise ConfigError(f"cannot descend into scalar at {seg!r} in --set {expr!r}")


def load_config(path: str | None, sets: list[str], seed: int | None) -> dict:
    """Defaults, overlaid by the config file, --set overrides, then --seed."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")
        if "command" in loaded and "config" in loaded:
            loaded = loaded["config"]  # accept a manifest as a config
        config = _deep_merge(config, loaded)
    for expr in sets:
        segments, value = _parse_set(expr)
        _apply_set(config, segments, value, expr)
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed must be a nonnegative integer")
        config["sim"]["seed"] = seed
    return config


def _require(section: dict, key: str, kind, where: str):
    value = section[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key}: {exc}") from exc


def build_measure(config: dict) -> tuple[DiscreteTypeMeasure, float]:
    section = config["measure"]
    cap = _require(section, "cap", float, "measure")
    atoms = []
    for i, entry in enumerate(section["atoms"]):
        if not isinstance(entry, dict):
            raise ConfigError(f"measure.atoms[{i}] must be an object")
        unknown = set(entry) - _ATOM_KEYS
        if unknown:
            raise ConfigError(f"measure.atoms[{i}] has unknown keys: {sorted(unknown)}")
        try:
            atoms.append(
                TypeAtom(
                    firm_type=FirmType(
                        alpha=entry.get("alpha", 0.0),
                        lambda_bar=entry.get("lambda_bar", 0.0),
                        sigma=entry.get("sigma", 0.0),
                        beta_c=entry.get("beta_c", 0.0),
                        beta_s=entry.get("beta_s", 0.0),
                    ),
                    lambda_init=entry.get("lambda_init", 0.0),
                    weight=entry.get("weight", 1.0),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"measure.atoms[{i}]: {exc}") from exc
    try:
        measure = DiscreteTypeMeasure(atoms=tuple(atoms))
    except ValueError as exc:
        raise ConfigError(f"measure: {exc}") from exc
    return validate_measure(measure, cap=cap), cap


def build_factor(config: dict) -> SystematicFactorConfig:
    section = config["factor"]
    eps = section["eps"]
    if not isinstance(eps, dict) or set(eps) - {"kind", "value"}:
        raise ConfigError("factor.eps must be {kind, value}")
    try:
        return SystematicFactorConfig(
            gamma=section["gamma"],
            x_init=section["x_init"],
            eps=EpsSchedule(kind=eps.get("kind", "inverse_sqrt"),
                            value=eps.get("value", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"factor: {exc}") from exc


def build_grid(config: dict) -> TimeGrid:
    section = config["grid"]
    try:
        return TimeGrid(t_end=section["t_end"], n_steps=section["n_steps"])
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


@dataclass(frozen=True)
class SolverSettings:
    tol: float
    max_iter: int
    method: str
    relaxation: float


def build_solver(config: dict) -> SolverSettings:
    section = config["solver"]
    return SolverSettings(
        tol=_require(section, "tol", float, "solver"),
        max_iter=_require(section, "max_iter", int, "solver"),
        method=section["method"],
        relaxation=_require(section, "relaxation", float, "solver"),
    )


def thread_hint() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_manifest(path: Path, command: str, config: dict, grid: TimeGrid,
                    seconds: float, threads: int, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": config["sim"]["seed"],
        "config": config,
        "grid": {"t_end": grid.t_end, "n_steps": grid.n_steps, "dt": grid.dt},
        "threads_hint": threads,
        "timing": {"seconds": seconds},
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def _cmd_limit(config: dict, out: Path, threads: int) -> None:
    measure, _ = build_measure(config)
    grid = build_grid(config)
    solver = build_solver(config)
    started = time.perf_counter()
    sol = solve_limit(measure, grid, tol=solver.tol, max_iter=solver.max_iter,
                      method=solver.method, relaxation=solver.relaxation)
    seconds = time.perf_counter() - started
    t = grid.points()
    header = ["t", "F", "Q"] + [f"b_{i}" for i in range(len(measure))]
    rows = (
        [_fmt(t[k]), _fmt(sol.f.values[k]), _fmt(sol.q.values[k])]
        + [_fmt(r.b.values[k]) for r in sol.riccati]
        for k in range(grid.n_points)
    )
    _write_csv(out / "limit.csv", header, rows)
    _write_manifest(out / "limit_manifest.json", "limit", config, grid, seconds,
                    threads, {"solver_iterations": sol.iterations,
                              "solver_residual": sol.residual})


def _cmd_simulate(config: dict, out: Path, threads: int) -> None:
    measure, _ = build_measure(config)
    grid = build_grid(config)
    factor = build_factor(config)
    sim = config["sim"]
    sim_config = SimConfig(
        n_firms=_require(sim, "n_firms", int, "sim"),
        measure=measure,
        factor=factor,
        grid=grid,
        seed=_require(sim, "seed", int, "sim"),
        assignment=sim["assignment"],
        record_moments=bool(sim["record_moments"]),
    )
    n_reps = _require(sim, "n_reps", int, "sim")
    started = time.perf_counter()
    reps = run_replications(sim_config, n_reps, threads=threads)
    seconds = time.perf_counter() - started
    t = grid.points()
    rows = (
        [_fmt(t[k]), str(r.replication), _fmt(r.l_path.values[k])]
        for r in reps.results
        for k in range(grid.n_points)
    )
    _write_csv(out / "paths.csv", ["t", "rep", "L"], rows)
    agg = (
        [_fmt(t[k]), _fmt(reps.mean.values[k]), _fmt(reps.q10.values[k]),
         _fmt(reps.q90.values[k])]
        for k in range(grid.n_points)
    )
    _write_csv(out / "aggregate.csv", ["t", "mean", "q10", "q90"], agg)
    _write_manifest(out / "simulate_manifest.json", "simulate", config, grid,
                    seconds, threads)


def _cmd_converge(config: dict, out: Path, threads: int) -> None:
    measure, _ = build_measure(config)
    grid = build_grid(config)
    factor = build_factor(config)
    solver = build_solver(config)
    section = config["converge"]
    n_values = [int(n) for n in section["n_values"]]
    n_reps = _require(section, "n_reps", int, "converge")
    started = time.perf_counter()
    report = lln_experiment(
        measure, factor, grid, n_values, n_reps, seed=config["sim"]["seed"],
        tol=solver.tol, max_iter=solver.max_iter, method=solver.method,
        threads=threads,
    )
    seconds = time.perf_counter() - started
    rows = (
        [str(c.n_firms), str(c.n_reps), _fmt(c.mean), _fmt(c.median),
         _fmt(c.q10), _fmt(c.q90), _fmt(c.seconds)]
        for c in report.cells
    )
    _write_csv(out / "convergence.csv",
               ["N", "reps", "mean", "median", "q10", "q90", "seconds"], rows)
    _write_manifest(out / "converge_manifest.json", "converge", config, grid,
                    seconds, threads,
                    {"solver_iterations": report.solver_iterations,
                     "solver_residual": report.solver_residual,
                     "median_violations": list(report.median_violations)})


_FIGURE_FILES = (
    ("fig1_betaC.csv", contagion_sweep),
    ("fig2_alpha.csv", reversion_speed_sweep),
    ("fig3_lambdabar.csv", reversion_level_sweep),
)


def _cmd_figures(config: dict, out: Path, threads: int) -> None:
    grid = build_grid(config)
    solver = build_solver(config)
    t = grid.points()
    started = time.perf_counter()
    for filename, sweep_builder in _FIGURE_FILES:
        rows = []
        for value, f in figure_sweep(sweep_builder(grid), tol=solver.tol,
                                     max_iter=solver.max_iter, method=solver.method):
            rows.extend(
                [_fmt(t[k]), _fmt(value), _fmt(f.values[k])]
                for k in range(grid.n_points)
            )
        _write_csv(out / filename, ["t", "param_value", "F"], rows)
    seconds = time.perf_counter() - started
    _write_manifest(out / "figures_manifest.json", "figures", config, grid,
                    seconds, threads)


_COMMANDS = {
    "limit": _cmd_limit,
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
    "figures": _cmd_figures,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="creditpool",
        description="Default clustering in large pools: simulate the finite "
                    "pool and solve its deterministic limit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("limit", "solve the large-pool limit curves F, Q, b"),
        ("simulate", "Monte Carlo replications of the finite pool"),
        ("converge", "sup-distance to the limit across pool sizes"),
        ("figures", "baked-in parameter-sweep curve families"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config (or manifest) path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override sim.seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config entry (repeatable, JSON values)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.set, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](config, out, thread_hint())
        return EXIT_OK
    except (ConfigError, ValidationError) as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (NonFiniteResultError, NonFiniteStateError) as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except OSError as exc:
        print(f"error (IO): {exc}", file=sys.stderr)
        return EXIT_IO
    except CreditPoolError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
