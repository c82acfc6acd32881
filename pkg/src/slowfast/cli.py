"""Command-line entry point.

Usage::

    slowfast simulate CONFIG [-o OUT.csv]
    slowfast limit    CONFIG [-o OUT.csv]
    slowfast converge CONFIG [-o REPORT.json]
    slowfast validate CONFIG [-o REPORT.json]

CONFIG is a YAML file whose sections (``grid``, ``kernel``, ``model``,
``integrator``, ``initial``, ``study``, ``output``, ``seed``) override the
defaults in :data:`DEFAULTS`. Every value is validated before any
integration starts; a bad value exits with status 1 and names its field.

Exit codes: 0 success, 1 validation error, 2 integration failure,
3 invariant or hypothesis failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import yaml

from .analysis import compute_constants, convergence_study, decay_study, smooth_perturbation, _validate_eps_list
from .errors import ConfigurationError, StepFailure
from .grid import Field, Grid, build_grid
from .integrator import FULL_SCHEMES, LIMIT_SCHEMES, SystemState, solve_full, solve_limit
from .kernels import Kernel, boundary_mass, make_kernel, validate_kernel
from .model import RossMacdonaldParams, check_hypotheses, equilibria
from .operators import SpatialOperators, build_operators

EXIT_OK, EXIT_VALIDATION, EXIT_INTEGRATION, EXIT_INVARIANT = 0, 1, 2, 3

DEFAULTS: dict = {
    "grid": {"dim": 1, "extent": 1.0, "n_points": 101},
    "kernel": {"preset": "smooth_bump", "params": {"radius": 0.2}},
    "model": {
        "alpha_h": 1.0,
        "beta_h": 0.25,
        "alpha_v": 1.0,
        "beta_v": 0.5,
        "d1": 0.1,
        "d2": 0.01,
        "eps": 0.1,
    },
    "integrator": {
        "scheme": "imex",
        "limit_scheme": "ssprk3",
        "dt": 1e-3,
        "T": 5.0,
        "snapshots": 201,
        "strategy": "auto",
    },
    "initial": {
        "i": {"kind": "cosine", "mean": 0.3, "amplitude": 0.2, "mode": 1},
        "j": {"kind": "cosine", "mean": 0.7, "amplitude": 0.2, "mode": 1},
    },
    "study": {
        "kind": "convergence",
        "eps_list": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
        "dt": 1e-3,
        "limit_initial": None,
        "rho": 1.0,
    },
    "output": {"path": None, "report": None},
    "seed": 0,
}

FIELD_KINDS = {
    "constant": {"value"},
    "cosine": {"mean", "amplitude", "mode"},
    "random": {"mean", "amplitude"},
    "on_manifold": set(),
}


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    """A validated configuration plus the objects built from it."""

    raw: dict
    grid: Grid
    kernel: Kernel
    model: RossMacdonaldParams
    ops: SpatialOperators
    initial: SystemState
    limit_initial: Field | None
    output_times: np.ndarray
    warnings: list[str]

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# values at these paths replace the default wholesale instead of merging
REPLACED = {"kernel.params", "initial.i", "initial.j"}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigurationError("unknown key", where)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError("expected a mapping", where)
            out[key] = dict(value) if where in REPLACED else _merge(base[key], value, f"{where}.")
        else:
            out[key] = value
    return out


def _number(value, where: str, positive: bool = False, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"expected a number, got {value!r}", where)
    if integer and (not float(value).is_integer()):
        raise ConfigurationError(f"expected an integer, got {value!r}", where)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigurationError(f"must be {'positive' if positive else 'finite'}, got {value!r}", where)
    return int(value) if integer else float(value)


def _choice(value, options, where: str) -> str:
    if not isinstance(value, str) or value not in options:
        raise ConfigurationError(f"expected one of {tuple(options)}, got {value!r}", where)
    return value


def _build_field(spec: dict, grid: Grid, where: str, seed: int, base: np.ndarray | None = None, model=None):
    kind = _choice(spec.get("kind"), FIELD_KINDS, f"{where}.kind")
    extra = set(spec) - FIELD_KINDS[kind] - {"kind"}
    if extra:
        raise ConfigurationError("unknown key", f"{where}.{sorted(extra)[0]}")
    if kind == "on_manifold":
        if base is None:
            raise ConfigurationError("on_manifold is only valid for j", f"{where}.kind")
        values = model.m(base)
    elif kind == "constant":
        values = np.full(grid.shape, _number(spec.get("value"), f"{where}.value"))
    elif kind == "cosine":
        mean = _number(spec.get("mean"), f"{where}.mean")
        amp = _number(spec.get("amplitude", 0.0), f"{where}.amplitude")
        mode = _number(spec.get("mode", 1), f"{where}.mode", integer=True)
        if mode < 0:
            raise ConfigurationError(f"must be >= 0, got {mode}", f"{where}.mode")
        values = np.full(grid.shape, amp)
        for c, L in zip(grid.mesh(), grid.extent):
            values = values * np.cos(np.pi * mode * c / L)
        values = mean + values
    else:
        mean = _number(spec.get("mean"), f"{where}.mean")
        amp = _number(spec.get("amplitude", 0.0), f"{where}.amplitude")
        values = mean + smooth_perturbation(grid, abs(amp), seed)
    if values.min() < 0 or values.max() > 1:
        raise ConfigurationError(
            f"values must lie in [0, 1] node-wise (range [{values.min():g}, {values.max():g}])", where
        )
    return values


def _build_kernel(section: dict, grid: Grid) -> Kernel:
    preset = section.get("preset")
    params = section.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigurationError("expected a mapping", "kernel.params")
    if preset == "table":
        if set(params) != {"table"}:
            raise ConfigurationError("table preset takes exactly one parameter 'table'", "kernel.params")
        try:
            table = np.asarray(params["table"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"not a numeric array: {exc}", "kernel.params.table") from exc
        if table.ndim != grid.dim:
            raise ConfigurationError(f"expected a {grid.dim}D table, got {table.ndim}D", "kernel.params.table")
        if any(n % 2 == 0 for n in table.shape):
            raise ConfigurationError("table must have odd length per axis", "kernel.params.table")
        return Kernel.from_table(table, grid.spacing)
    return make_kernel(preset, params, grid)


def load_config(source) -> RunConfig:
    """Parse and validate a config given as a YAML file path or a mapping."""
    if isinstance(source, dict):
        user = source
    else:
        try:
            user = yaml.safe_load(Path(source).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"invalid YAML: {exc}", "config") from exc
    if not isinstance(user, dict):
        raise ConfigurationError("top level must be a mapping", "config")
    raw = _merge(DEFAULTS, user)
    warnings: list[str] = []

    gs = raw["grid"]
    grid = build_grid(gs["dim"], gs["extent"], gs["n_points"])
    kernel = _build_kernel(raw["kernel"], grid)
    if not kernel.c1:
        warnings.append("kernel is not C1: the uniform H1 bound is not covered for this run")

    ms = raw["model"]
    model = RossMacdonaldParams(**{k: _number(ms[k], f"model.{k}") for k in DEFAULTS["model"]})

    it = raw["integrator"]
    T = _number(it["T"], "integrator.T", positive=True)
    dt = _number(it["dt"], "integrator.dt", positive=True)
    if dt > T:
        raise ConfigurationError(f"must not exceed T = {T:g}, got {dt:g}", "integrator.dt")
    _choice(it["scheme"], FULL_SCHEMES, "integrator.scheme")
    _choice(it["limit_scheme"], LIMIT_SCHEMES, "integrator.limit_scheme")
    strategy = _choice(it["strategy"], ("auto", "direct", "fft"), "integrator.strategy")
    n_snap = _number(it["snapshots"], "integrator.snapshots", positive=True, integer=True)
    output_times = np.array([T]) if n_snap == 1 else np.linspace(0.0, T, n_snap)

    seed = _number(raw["seed"], "seed", integer=True)
    i0 = _build_field(raw["initial"]["i"], grid, "initial.i", seed)
    j0 = _build_field(raw["initial"]["j"], grid, "initial.j", seed + 1, base=i0, model=model)

    st = raw["study"]
    _choice(st["kind"], ("convergence", "decay"), "study.kind")
    if not isinstance(st["eps_list"], list):
        raise ConfigurationError("expected a list", "study.eps_list")
    _validate_eps_list([_number(e, "study.eps_list") for e in st["eps_list"]])
    _number(st["rho"], "study.rho", positive=True)
    study_dt = _number(st["dt"], "study.dt", positive=True)
    if study_dt > T:
        raise ConfigurationError(f"must not exceed T = {T:g}, got {study_dt:g}", "study.dt")
    limit_initial = None
    if st["limit_initial"] is not None:
        if not isinstance(st["limit_initial"], dict):
            raise ConfigurationError("expected a mapping", "study.limit_initial")
        limit_initial = Field(grid, _build_field(st["limit_initial"], grid, "study.limit_initial", seed + 2))

    for key in ("path", "report"):
        if raw["output"][key] is not None and not isinstance(raw["output"][key], str):
            raise ConfigurationError("expected a file path", f"output.{key}")

    ops = build_operators(grid, kernel, model.d2, strategy)
    initial = SystemState(0.0, Field(grid, i0), Field(grid, j0))
    return RunConfig(raw, grid, kernel, model, ops, initial, limit_initial, output_times, warnings)


# ---------------------------------------------------------------- output


def _fmt(x: float) -> str:
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _package_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def trajectory_csv(cfg: RunConfig, traj, command: str) -> str:
    grid = cfg.grid
    coords = [c.ravel() for c in grid.mesh()]
    names = ["x", "y"][: grid.dim]
    meta = {
        "command": command,
        "version": _package_version(),
        "config_sha256": cfg.digest,
        "seed": cfg.raw["seed"],
        "grid": f"dim={grid.dim} extent={list(grid.extent)} n_points={list(grid.n_points)}",
        "kernel": cfg.kernel.preset,
        "model": " ".join(f"{k}={_fmt(getattr(cfg.model, k))}" for k in DEFAULTS["model"]),
        "scheme": traj.scheme,
        "dt": _fmt(traj.dt),
        "n_steps": traj.n_steps,
        "n_snapshots": len(traj),
        "n_nodes": grid.size,
    }
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(["t", *names, "i", "j", "eta"]))
    for t, i, j in zip(traj.times, traj.i, traj.j):
        i, j = i.ravel(), j.ravel()
        eta = j - cfg.model.m(i)
        ts = _fmt(t)
        for k in range(grid.size):
            row = [ts, *(_fmt(c[k]) for c in coords), _fmt(i[k]), _fmt(j[k]), _fmt(eta[k])]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _warn(cfg: RunConfig) -> None:
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)


# ---------------------------------------------------------------- commands


def hypothesis_summary(cfg: RunConfig) -> dict:
    """Verdicts for every structural hypothesis, with margins, plus R0 and i*."""
    model = cfg.model
    kv = validate_kernel(cfg.kernel)
    _, min_mass = boundary_mass(cfg.kernel, cfg.grid)
    fg = model.to_general()
    hyp = check_hypotheses(fg, eps=model.eps)
    eq = equilibria(model)
    const = compute_constants(fg, float(cfg.raw["study"]["rho"]))
    hc_margin = model.alpha_h * model.alpha_v - model.beta_h * model.beta_v
    verdicts = {
        "H_J": bool(kv.passed and min_mass > 0),
        "H_fg": hyp.group_passed("H_fg"),
        "H_m": hyp.group_passed("H_m"),
        "H_inf": hyp.group_passed("H_inf"),
        "H_C": bool(hc_margin > 0),
        "contraction": const.contraction_holds,
    }
    return {
        "verdicts": verdicts,
        "required": ["H_J", "H_fg", "H_m", "H_inf"],
        "kernel": {**kv.to_dict(), "min_boundary_mass": min_mass, "preset": cfg.kernel.preset},
        "hypotheses": hyp.to_dict(),
        "H_C_margin": hc_margin,
        "constants": const.to_dict(),
        "equilibria": eq.to_dict(),
    }


def _required_ok(summary: dict) -> bool:
    return all(summary["verdicts"][k] for k in summary["required"])


def cmd_simulate(cfg: RunConfig, out: str | None = None) -> int:
    it = cfg.raw["integrator"]
    traj = solve_full(cfg.model, cfg.ops, cfg.initial, float(it["T"]), float(it["dt"]), cfg.output_times, it["scheme"])
    _emit(trajectory_csv(cfg, traj, "simulate"), out or cfg.raw["output"]["path"])
    return EXIT_OK


def cmd_limit(cfg: RunConfig, out: str | None = None) -> int:
    it = cfg.raw["integrator"]
    traj = solve_limit(
        cfg.model, cfg.ops, cfg.initial.i, float(it["T"]), float(it["dt"]), cfg.output_times, it["limit_scheme"]
    )
    _emit(trajectory_csv(cfg, traj, "limit"), out or cfg.raw["output"]["path"])
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: str | None = None) -> int:
    st = cfg.raw["study"]
    T = float(cfg.raw["integrator"]["T"])
    runner = convergence_study if st["kind"] == "convergence" else decay_study
    study = runner(
        cfg.model, cfg.ops, cfg.initial, T, st["eps_list"], dt=float(st["dt"]), limit_initial=cfg.limit_initial
    )
    summary = hypothesis_summary(cfg)
    invariants = dict(study.invariants)
    invariants["kernel_valid"] = summary["verdicts"]["H_J"]
    report = {
        "config_sha256": cfg.digest,
        "version": _package_version(),
        "warnings": cfg.warnings,
        "validation": summary,
        "study": study.to_dict(),
        "invariants": invariants,
    }
    path = out or cfg.raw["output"]["report"]
    _emit(dump_report(report), path)
    human = sys.stdout if path is not None else sys.stderr
    print(_study_text(study, invariants), file=human)
    if study.partial:
        return EXIT_INTEGRATION
    return EXIT_OK if all(invariants.values()) else EXIT_INVARIANT


def _study_text(study, invariants) -> str:
    lines = [f"{study.kind} study, T = {study.T:g}, dt = {study.dt:g}"]
    lines.append(f"{'eps':>12} {'sup error':>14} {'eta plateau':>14} {'t*/(eps/delta)':>15}")
    for r in study.runs:
        lines.append(f"{r.eps:12.4g} {r.sup_error:14.6g} {r.eta.plateau:14.6g} {r.eta.layer_time_scaled:15.4g}")
    if study.fit is not None:
        lines.append(f"fitted order p = {study.fit.order:.4f} (largest eps discarded: {study.fit.discarded_largest})")
    if study.error:
        lines.append(f"aborted: {study.error}")
    for k, v in sorted(invariants.items()):
        lines.append(f"  [{'ok' if v else 'FAIL'}] {k}")
    return "\n".join(lines)


def cmd_validate(cfg: RunConfig, out: str | None = None) -> int:
    summary = hypothesis_summary(cfg)
    report = {"config_sha256": cfg.digest, "warnings": cfg.warnings, **summary}
    path = out or cfg.raw["output"]["report"]
    if path is not None:
        _emit(dump_report(report), path)
    eq = summary["equilibria"]
    for name, ok in summary["verdicts"].items():
        if name in summary["required"]:
            print(f"{name:6s} {'pass' if ok else 'FAIL'}")
        else:
            print(f"{name:6s} {'holds' if ok else 'does not hold'}")
    for name, chk in summary["hypotheses"]["checks"].items():
        tag = " (informational)" if chk["informational"] else ""
        print(f"  {name:28s} {'pass' if chk['passed'] else 'FAIL'}  margin {chk['margin']:.6g}{tag}")
    print(f"  {'H_C margin':28s} {summary['H_C_margin']:.6g}")
    print(f"  {'contraction margin':28s} {summary['constants']['contraction_margin']:.6g}")
    print(f"  {'kernel c1':28s} {summary['kernel']['c1']}")
    print(f"R0 = {eq['r0']:.12g}")
    print("i* = none (no endemic equilibrium)" if eq["endemic_i"] is None else f"i* = {eq['endemic_i']:.12g}")
    return EXIT_OK if _required_ok(summary) else EXIT_INVARIANT


COMMANDS = {"simulate": cmd_simulate, "limit": cmd_limit, "converge": cmd_converge, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowfast", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("config", help="YAML config file")
        p.add_argument("-o", "--output", help="output file (default: the config's output section, else stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(Path(args.config))
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _warn(cfg)
    try:
        return COMMANDS[args.command](cfg, args.output)
    except StepFailure as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
