"""Batch experiment front end.

Reads an INI-style config (sections [model], [run], [sweep], [output]),
or a named preset, runs trajectories / steady-state sweeps, and emits
deterministic CSV or JSON tables for plotting and regression testing.
There is no randomness anywhere: identical configs produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .engine import (
    SX,
    SY,
    SZ,
    CollisionModel,
    PropagationError,
    PropagatorKind,
    SteadyStateError,
    exact_collision,
    l1_coherence,
    run_trajectory,
    steady_state,
)
from .models import TwoQubitAncillaParams, example1_model, example2_model
from .qcore import HilbertSpace, Operator, StateValidityError, gibbs_state
from .thermo import collision_thermo


class ConfigError(Exception):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "example2"
    omega_s: float = 1.0
    omega1: float = 0.5
    omega2: float = 1.5
    kappa12: float = 0.3
    alpha: float = 0.1
    alpha1: float = 0.1
    alpha2: float = 0.1
    beta: float = 1.0
    beta_sys: float = 1.0
    dt: float = 0.1
    n_collisions: int = 2000
    propagator: str = "exact"
    outputs: tuple[str, ...] = ("trajectory",)
    sweep: SweepSpec | None = None

    def validate(self) -> "ExperimentConfig":
        if self.model not in ("example1", "example2"):
            raise ConfigError(f"unknown model '{self.model}'")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.n_collisions < 1:
            raise ConfigError("n_collisions must be >= 1")
        if self.beta < 0 or self.beta_sys < 0:
            raise ConfigError("inverse temperatures must be >= 0")
        if self.propagator not in ("exact", "second-order", "analytic"):
            raise ConfigError(f"unknown propagator '{self.propagator}'")
        if self.propagator == "analytic" and self.model != "example2":
            raise ConfigError("the analytic propagator exists only for example2")
        for out in self.outputs:
            if out not in ("trajectory", "steady_state"):
                raise ConfigError(f"unknown output table '{out}'")
        if not self.outputs:
            raise ConfigError("at least one output table is required")
        if self.sweep is not None:
            if self.sweep.param not in _SWEEPABLE:
                raise ConfigError(f"cannot sweep parameter '{self.sweep.param}'")
            if not self.sweep.values:
                raise ConfigError("sweep values must be nonempty")
        return self


_SWEEPABLE = ("kappa12", "beta", "beta_sys", "alpha", "dt", "omega_s", "omega1", "omega2")

_MODEL_KEYS = {
    "model": str,
    "omega_s": float,
    "omega1": float,
    "omega2": float,
    "kappa12": float,
    "alpha": float,
    "alpha1": float,
    "alpha2": float,
    "beta": float,
    "beta_sys": float,
}
_RUN_KEYS = {"dt": float, "n_collisions": int, "propagator": str}


def _find_line(source: str, key: str) -> int:
    for lineno, line in enumerate(source.splitlines(), start=1):
        if line.strip().lower().startswith(key.lower()):
            return lineno
    return 0


def parse_config(source: str) -> ExperimentConfig:
    """Parse INI-style configuration text; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(source)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    fields: dict = {}

    def take(section: str, allowed: dict):
        if not parser.has_section(section):
            return
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(
                    f"unknown key '{key}' in [{section}] (line {_find_line(source, key)})"
                )
            try:
                fields[key] = allowed[key](raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for '{key}' (line {_find_line(source, key)}): {raw!r}"
                ) from exc

    take("model", _MODEL_KEYS)
    take("run", _RUN_KEYS)

    if parser.has_section("sweep"):
        entries = dict(parser.items("sweep"))
        unknown = set(entries) - {"param", "values"}
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown key '{key}' in [sweep] (line {_find_line(source, key)})")
        if "param" not in entries or "values" not in entries:
            raise ConfigError("[sweep] needs both 'param' and 'values'")
        try:
            values = tuple(float(v) for v in entries["values"].split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"bad sweep values (line {_find_line(source, 'values')})") from exc
        fields["sweep"] = SweepSpec(entries["param"].strip(), values)

    if parser.has_section("output"):
        entries = dict(parser.items("output"))
        unknown = set(entries) - {"tables"}
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown key '{key}' in [output] (line {_find_line(source, key)})")
        if "tables" in entries:
            fields["outputs"] = tuple(t.strip() for t in entries["tables"].split(",") if t.strip())

    for section in parser.sections():
        if section not in ("model", "run", "sweep", "output"):
            lineno = _find_line(source, "[" + section)
            raise ConfigError(f"unknown section [{section}] (line {lineno})")

    return ExperimentConfig(**fields).validate()


# figure presets: parameter sets straight from the experiments the CSVs feed
PRESETS: dict[str, dict] = {
    "example1": {"model": "example1"},
    "example2": {"model": "example2"},
    # relaxation and coherence build-up at several bath temperatures
    "fig3": {
        "model": "example2",
        "alpha": 0.1,
        "sweep": SweepSpec("beta", (0.5, 1.0, 2.0)),
        "outputs": ("trajectory",),
    },
    # short-time detail of the same evolution at stronger coupling
    "fig4": {
        "model": "example2",
        "alpha": 0.2,
        "n_collisions": 400,
        "sweep": SweepSpec("beta", (0.5, 1.0, 2.0)),
        "outputs": ("trajectory",),
    },
    # steady-state coherence versus the ancilla exchange coupling
    "fig5": {
        "model": "example2",
        "alpha": 0.2,
        "sweep": SweepSpec("kappa12", tuple(round(0.1 * i, 10) for i in range(1, 51))),
        "outputs": ("steady_state",),
    },
    # steady-state work/heat balance along the same sweep
    "fig6": {
        "model": "example2",
        "alpha": 0.2,
        "sweep": SweepSpec("kappa12", tuple(round(0.2 * i, 10) for i in range(1, 26))),
        "outputs": ("steady_state",),
    },
    # per-collision entropy production at several bath temperatures
    "fig7": {
        "model": "example2",
        "alpha": 0.2,
        "n_collisions": 2000,
        "sweep": SweepSpec("beta", (0.2, 1.0, 2.0, 5.0)),
        "outputs": ("trajectory",),
    },
}


@dataclass(frozen=True)
class ResultTable:
    name: str
    header: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("ragged result table")
            if not all(np.isfinite(v) for v in row):
                raise ValueError("non-finite entry in result table")


def _config_metadata(cfg: ExperimentConfig) -> dict:
    meta = {
        "model": cfg.model,
        "omega_s": cfg.omega_s,
        "omega1": cfg.omega1,
        "omega2": cfg.omega2,
        "kappa12": cfg.kappa12,
        "beta": cfg.beta,
        "beta_sys": cfg.beta_sys,
        "dt": cfg.dt,
        "n_collisions": cfg.n_collisions,
        "propagator": cfg.propagator,
        "outputs": ",".join(cfg.outputs),
        "version": __version__,
    }
    if cfg.model == "example1":
        meta["alpha1"] = cfg.alpha1
        meta["alpha2"] = cfg.alpha2
    else:
        meta["alpha"] = cfg.alpha
    if cfg.sweep is not None:
        meta["sweep_param"] = cfg.sweep.param
        meta["sweep_values"] = ",".join(repr(float(v)) for v in cfg.sweep.values)
    return meta


def build_model(cfg: ExperimentConfig) -> CollisionModel:
    p = TwoQubitAncillaParams(cfg.omega1, cfg.omega2, cfg.kappa12)
    if cfg.model == "example1":
        return example1_model(p, cfg.omega_s, cfg.alpha1, cfg.alpha2, cfg.beta, cfg.dt)
    return example2_model(p, cfg.omega_s, cfg.alpha, cfg.beta, cfg.dt)


def _initial_state(cfg: ExperimentConfig):
    h = Operator(HilbertSpace((2,)), 0.5 * cfg.omega_s * SZ)
    return gibbs_state(h, cfg.beta_sys)


def _sweep_points(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    if cfg.sweep is None:
        return [cfg]
    out = []
    for value in cfg.sweep.values:
        point = replace(cfg, **{cfg.sweep.param: value})
        out.append(point)
    return out


_KIND = {
    "exact": PropagatorKind.EXACT,
    "second-order": PropagatorKind.SECOND_ORDER,
    "analytic": PropagatorKind.ANALYTIC,
}

TRAJECTORY_COLUMNS = (
    "step", "sx", "sy", "sz", "c_l1", "dU", "dQ", "w_sw", "dS", "sigma", "sigma_cumulative",
)
STEADY_COLUMNS = ("sx", "sy", "sz", "c_l1", "w_sw_ss", "dQ_ss", "sigma_ss")


def _trajectory_table(cfg: ExperimentConfig, name: str, extra_meta: dict) -> ResultTable:
    model = build_model(cfg)
    kind = _KIND[cfg.propagator]
    traj = run_trajectory(model, _initial_state(cfg), cfg.n_collisions, kind)
    rows = []
    cumulative = 0.0
    for step in range(len(traj.states)):
        sx, sy, sz = traj.bloch[step]
        if step == 0 or not traj.thermo:
            thermo_cols = (0.0,) * 5
        else:
            rec = traj.thermo[step - 1]
            cumulative += rec.sigma
            thermo_cols = (rec.dU, rec.dQ, rec.w_sw, rec.dS_sys, rec.sigma)
        rows.append(
            (float(step), float(sx), float(sy), float(sz), float(traj.c_l1[step]))
            + thermo_cols
            + (cumulative,)
        )
    meta = _config_metadata(cfg) | extra_meta
    return ResultTable(name, TRAJECTORY_COLUMNS, tuple(rows), meta)


def _steady_row(cfg: ExperimentConfig) -> tuple[float, ...]:
    model = build_model(cfg)
    ss = steady_state(model, _KIND[cfg.propagator] if cfg.propagator != "analytic"
                      else PropagatorKind.ANALYTIC)
    # thermodynamic balance always from the exact map's own fixed point
    ss_exact = ss if cfg.propagator == "exact" else steady_state(model, PropagatorKind.EXACT)
    record = collision_thermo(exact_collision(ss_exact, model), model)
    mat = ss.matrix
    sx = float(np.trace(SX @ mat).real)
    sy = float(np.trace(SY @ mat).real)
    sz = float(np.trace(SZ @ mat).real)
    return (sx, sy, sz, l1_coherence(ss), record.w_sw, record.dQ, record.sigma)


def run_experiment(cfg: ExperimentConfig) -> list[ResultTable]:
    """Run all requested tables; sweep points execute concurrently."""
    cfg = cfg.validate()
    points = _sweep_points(cfg)
    tables: list[ResultTable] = []

    if "trajectory" in cfg.outputs:
        def traj_job(item):
            idx, point = item
            if cfg.sweep is None:
                name, extra = "trajectory", {}
            else:
                name = f"trajectory_{idx:03d}"
                extra = {
                    "sweep_index": idx,
                    "sweep_param": cfg.sweep.param,
                    "sweep_value": cfg.sweep.values[idx],
                }
            try:
                return _trajectory_table(point, name, extra)
            except Exception as exc:
                raise type(exc)(f"sweep point {idx}: {exc}") from exc

        with ThreadPoolExecutor(max_workers=4) as pool:
            tables.extend(pool.map(traj_job, enumerate(points)))

    if "steady_state" in cfg.outputs:
        def steady_job(item):
            idx, point = item
            try:
                return _steady_row(point)
            except Exception as exc:
                raise type(exc)(f"sweep point {idx}: {exc}") from exc

        with ThreadPoolExecutor(max_workers=4) as pool:
            rows = list(pool.map(steady_job, enumerate(points)))
        if cfg.sweep is None:
            header = STEADY_COLUMNS
            table_rows = tuple(tuple(r) for r in rows)
        else:
            header = (cfg.sweep.param,) + STEADY_COLUMNS
            table_rows = tuple(
                (cfg.sweep.values[i],) + tuple(r) for i, r in enumerate(rows)
            )
        tables.append(ResultTable("steady_state", header, table_rows, _config_metadata(cfg)))

    return tables


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def render(table: ResultTable, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        for key in sorted(table.metadata):
            buf.write(f"# {key} = {table.metadata[key]}\n")
        buf.write(",".join(table.header) + "\n")
        for row in table.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "metadata": table.metadata,
            "columns": list(table.header),
            "rows": [list(row) for row in table.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    raise ConfigError(f"unknown output format '{fmt}'")


def emit(table: ResultTable, fmt: str, destination) -> None:
    text = render(table, fmt)
    if destination == "-":
        sys.stdout.write(text)
    else:
        Path(destination).write_text(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run collision-model experiments and emit CSV/JSON tables.",
    )
    parser.add_argument("config", nargs="?", help="INI-style config file")
    parser.add_argument("--out", default=".", help="output directory (default: cwd)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    parser.add_argument("--steps", type=int, help="override n_collisions")
    parser.add_argument("--beta", type=float, help="override ancilla inverse temperature")
    parser.add_argument("--kappa", type=float, help="override kappa12")
    parser.add_argument("--dt", type=float, help="override collision time")
    parser.add_argument(
        "--propagator", choices=("exact", "second-order", "analytic"), help="override propagator"
    )
    args = parser.parse_args(argv)

    try:
        if args.config is None and args.preset is None:
            raise ConfigError("provide a config file and/or --preset")
        if args.config is not None:
            try:
                source = Path(args.config).read_text()
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return 2
            cfg = parse_config(source)
        else:
            cfg = ExperimentConfig()
        if args.preset is not None:
            overrides = PRESETS[args.preset]
            cfg = replace(cfg, **overrides)
        flag_overrides = {}
        if args.steps is not None:
            flag_overrides["n_collisions"] = args.steps
        if args.beta is not None:
            flag_overrides["beta"] = args.beta
        if args.kappa is not None:
            flag_overrides["kappa12"] = args.kappa
        if args.dt is not None:
            flag_overrides["dt"] = args.dt
        if args.propagator is not None:
            flag_overrides["propagator"] = args.propagator
        if flag_overrides:
            cfg = replace(cfg, **flag_overrides)
        cfg = cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        tables = run_experiment(cfg)
    except (SteadyStateError, PropagationError, StateValidityError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in tables:
            dest = out_dir / f"{table.name}.{args.format}"
            emit(table, args.format, dest)
            print(dest)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
