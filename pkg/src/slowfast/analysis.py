"""Verification harness: boundary-layer traces, eps sweeps, decay envelopes.

All studies run the full system (IMEX) and the limit equation in lockstep on
the same time nodes, so per-step quantities (``||x - X||``, ``||eta||``, the
discrete growth rate of ``||x - X||^2``) are available without interpolation.
The limit equation is advanced with the same forward-Euler treatment the
IMEX scheme applies to the slow variable, so the measured difference is the
model error rather than a mismatch between time integrators.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionViolation, ConfigurationError, StepFailure
from .grid import Field, check_same_grid
from .integrator import (
    RECT_TOL,
    SystemState,
    Trajectory,
    full_step_arrays,
    limit_step_arrays,
    solve_full,
    time_nodes,
)
from .model import GeneralFG, equilibria
from .operators import SpatialOperators

GRONWALL_TOL = 1e-6
MONOTONE_TOL = 0.05
ORDER_RANGE = (0.45, 1.5)
H1_RATIO_MAX = 2.0
LAYER_FACTOR = 10.0


# ---------------------------------------------------------------- constants


@dataclass(frozen=True)
class Constants:
    rho: float
    c1: float
    c2: float
    contraction_margin: float
    contraction_holds: bool
    rho_decay: float | None
    c1_decay: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compute_constants(fg: GeneralFG, rho: float = 1.0) -> Constants:
    """Gronwall constants ``C1 = bN (gM/d + rho^2) - a`` and ``C2 = bN / rho^2``.

    ``contraction_margin = a / (bN) - gM / d``. When it is positive, any
    ``rho^2 < contraction_margin`` gives ``C1 < 0``; the midpoint ``rho^2 = margin / 2``
    is reported as ``rho_decay``.
    """
    if not rho > 0:
        raise ConfigurationError(f"rho must be positive, got {rho!r}", "study.rho")
    bN = fg.beta * fg.N
    slope = fg.gamma * fg.M / fg.delta
    c1 = bN * (slope + rho**2) - fg.alpha
    c2 = bN / rho**2
    margin = fg.alpha / bN - slope
    if margin > 0:
        rho_d = float(np.sqrt(margin / 2))
        c1_d = bN * (slope + rho_d**2) - fg.alpha
    else:
        rho_d = c1_d = None
    return Constants(rho, c1, c2, margin, margin > 0, rho_d, c1_d)


# ---------------------------------------------------------------- eta traces


@dataclass
class EtaTrace:
    times: np.ndarray
    eta_sq: np.ndarray
    eps: float
    delta: float
    on_manifold: bool
    layer_time: float
    plateau: float
    bound: np.ndarray | None = None
    d0: float | None = None
    d1: float | None = None

    @property
    def layer_time_scaled(self) -> float:
        """``t*`` in units of the layer width ``eps / delta``."""
        return self.layer_time * self.delta / self.eps

    @property
    def bound_holds(self) -> bool | None:
        if self.bound is None:
            return None
        return bool(np.all(self.eta_sq <= self.bound * (1 + 1e-9) + 1e-15))

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "delta": self.delta,
            "on_manifold": self.on_manifold,
            "eta0_sq": float(self.eta_sq[0]),
            "layer_time": self.layer_time,
            "layer_time_scaled": self.layer_time_scaled,
            "plateau": self.plateau,
            "d0": self.d0,
            "d1": self.d1,
            "bound_holds": self.bound_holds,
        }


def _layer_and_plateau(times, eta_sq, T):
    plateau = float(np.mean(eta_sq[times >= 0.5 * T]))
    below = np.flatnonzero(eta_sq <= 2.0 * plateau)
    layer = float(times[below[0]]) if below.size else float("inf")
    return layer, plateau


def _eta_bound(times, eta0_sq, eps, delta, d0, d1):
    decay = np.exp(-times * delta / eps)
    return eps / delta * (eps / (2 * delta) * d0**2 + d1) * (1 - decay) + decay * eta0_sq


def _bound_constants(fg: GeneralFG, model, ops: SpatialOperators, sup_x, sup_grad_x):
    """Empirical stand-ins for the constants absorbing ``||x||`` and ``||grad x||``.

    ``D0 = 2 (gM/d) (k |Omega|^(1/2) + d1 sup||x|| (|Omega| ||J||_inf + 1))`` and
    ``D1 = d2 (gM/d)^2 sup||grad x||^2 / 2`` (Young's inequality with weight 2
    on the gradient cross term).
    """
    slope = fg.gamma * fg.M / fg.delta
    omega = ops.grid.measure
    d0 = 2 * slope * (fg.k * np.sqrt(omega) + model.d1 * sup_x * ops.nonlocal_op.continuum_bound)
    d1 = model.d2 * slope**2 * sup_grad_x**2 / 2
    return float(d0), float(d1)


def eta_trace(traj: Trajectory, model, ops: SpatialOperators | None = None, T: float | None = None) -> EtaTrace:
    """``||j - m(i)||^2`` along a full-system trajectory.

    ``layer_time`` is the first snapshot where the trace is within twice its
    plateau (mean over the last half of the run). With ``ops`` the decay bound
    is evaluated using constants measured from the trajectory.
    """
    if traj.system != "full":
        raise ConfigurationError("eta_trace needs a full-system trajectory")
    w = traj.grid.weights
    eta = traj.j - model.m(traj.i)
    axes = tuple(range(1, eta.ndim))
    eta_sq = np.sum(w * eta**2, axis=axes)
    T = float(traj.times[-1]) if T is None else T
    fg = model.to_general()
    layer, plateau = _layer_and_plateau(traj.times, eta_sq, T)
    out = EtaTrace(traj.times, eta_sq, model.eps, fg.delta, bool(eta_sq[0] <= 1e-28), layer, plateau)
    if ops is not None:
        from .grid import h1_seminorm, l2_norm

        sup_x = max(l2_norm(Field(traj.grid, v)) for v in traj.i)
        sup_g = max(h1_seminorm(Field(traj.grid, v)) for v in traj.i)
        out.d0, out.d1 = _bound_constants(fg, model, ops, sup_x, sup_g)
        out.bound = _eta_bound(traj.times - traj.times[0], eta_sq[0], model.eps, fg.delta, out.d0, out.d1)
    return out


# ---------------------------------------------------------------- paired runs


@dataclass
class PairedRun:
    """Lockstep run of the full system and the limit equation for one eps."""

    eps: float
    times: np.ndarray
    err_sq: np.ndarray
    eta_sq: np.ndarray
    snap_times: np.ndarray
    snap_i: np.ndarray
    snap_j: np.ndarray
    snap_X: np.ndarray
    rect_min: float
    rect_max: float
    gronwall_excess: float
    n_steps: int

    @property
    def sup_error(self) -> float:
        return float(np.sqrt(self.err_sq.max()))

    @property
    def in_rectangle(self) -> bool:
        return self.rect_min >= -RECT_TOL and self.rect_max <= 1 + RECT_TOL


def _layer_schedule(model, eps, T, dt, n_snapshots, layer_snapshots):
    fg = model.to_general()
    span = min(T, LAYER_FACTOR * eps / fg.delta)
    # resolve the fastest relaxation rate sup|g_y| / eps
    s = np.linspace(0, 1, 51)
    X, Y = np.meshgrid(s * fg.N, s * fg.M, indexing="ij")
    fastest = float(np.max(np.abs(fg.g_y(X, Y))))
    layer_dt = min(dt, eps / (10 * fastest))
    outs = np.union1d(np.linspace(0, T, n_snapshots + 1), np.linspace(0, span, layer_snapshots + 1))
    return outs, layer_dt, span


def paired_run(
    model,
    ops: SpatialOperators,
    i0: np.ndarray,
    j0: np.ndarray,
    X0: np.ndarray,
    T: float,
    dt: float,
    n_snapshots: int = 200,
    layer_snapshots: int = 20,
    constants: Constants | None = None,
) -> PairedRun:
    outs, layer_dt, span = _layer_schedule(model, model.eps, T, dt, n_snapshots, layer_snapshots)
    nodes, outs = time_nodes(T, dt, outs, layer_dt, span)
    w = ops.grid.weights
    i, j, X = i0.copy(), j0.copy(), X0.copy()

    n = nodes.size + 1
    times = np.concatenate([[0.0], nodes])
    err_sq = np.empty(n)
    eta_sq = np.empty(n)
    err_sq[0] = np.sum(w * (i - X) ** 2)
    eta_sq[0] = np.sum(w * (j - model.m(i)) ** 2)
    snaps = [(i.copy(), j.copy(), X.copy())]
    lo, hi = min(i.min(), j.min()), max(i.max(), j.max())
    excess = -np.inf
    c1 = c2 = None
    if constants is not None:
        c1, c2 = constants.c1, constants.c2
    k_out = 1
    t = 0.0
    for k, t_next in enumerate(nodes, start=1):
        h = t_next - t
        i, j = full_step_arrays(i, j, model, ops, h, "imex", t)
        X = limit_step_arrays(X, model, ops, h, "euler")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(j))):
            raise StepFailure(f"non-finite state at t={t_next:g} (eps={model.eps:g})")
        err_sq[k] = np.sum(w * (i - X) ** 2)
        eta_sq[k] = np.sum(w * (j - model.m(i)) ** 2)
        lo = min(lo, i.min(), j.min())
        hi = max(hi, i.max(), j.max())
        if c1 is not None:
            rate = (err_sq[k] - err_sq[k - 1]) / h
            excess = max(excess, rate - (2 * c1 * err_sq[k - 1] + 2 * c2 * eta_sq[k - 1]))
        t = t_next
        if k_out < len(outs) and t == outs[k_out]:
            snaps.append((i.copy(), j.copy(), X.copy()))
            k_out += 1
    si, sj, sX = (np.array(a) for a in zip(*snaps))
    return PairedRun(
        model.eps, times, err_sq, eta_sq, outs, si, sj, sX, float(lo), float(hi), float(excess), int(nodes.size)
    )


# ---------------------------------------------------------------- order fitting


@dataclass(frozen=True)
class OrderFit:
    order: float
    log_constant: float
    discarded_largest: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def fit_order(eps, errors) -> OrderFit:
    """Least-squares slope of ``log error`` against ``log eps``.

    The largest-eps entry is dropped when its residual against the fit of the
    remaining entries exceeds three standard deviations of their residuals.
    """
    le, lr = np.log(np.asarray(eps, float)), np.log(np.asarray(errors, float))
    order = np.argsort(le)[::-1]
    le, lr = le[order], lr[order]
    discarded = False
    if le.size >= 5:
        p = np.polyfit(le[1:], lr[1:], 1)
        res = lr[1:] - np.polyval(p, le[1:])
        sigma = np.std(res, ddof=2)
        if sigma > 0 and abs(lr[0] - np.polyval(p, le[0])) > 3 * sigma:
            discarded = True
            le, lr = le[1:], lr[1:]
    slope, icpt = np.polyfit(le, lr, 1)
    return OrderFit(float(slope), float(icpt), discarded)


# ---------------------------------------------------------------- reports


@dataclass
class EpsResult:
    eps: float
    sup_error: float
    error_at_0: float
    eta: EtaTrace
    h1_max_i: float
    h1_max_j: float
    h1_late_i: float
    h1_late_j: float
    rect_min: float
    rect_max: float
    gronwall_excess: float | None
    n_steps: int
    decay_rate: float | None = None
    final_sup_i: float | None = None
    final_sup_X: float | None = None

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "eta"}
        out["eta"] = self.eta.to_dict()
        return out


@dataclass
class StudyReport:
    kind: str
    eps: list[float]
    runs: list[EpsResult]
    T: float
    dt: float
    same_initial: bool
    constants: Constants
    fit: OrderFit | None
    invariants: dict[str, bool]
    diagnostics: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    partial: bool = False
    error: str | None = None

    @property
    def errors(self) -> list[float]:
        return [r.sup_error for r in self.runs]

    @property
    def passed(self) -> bool:
        return not self.partial and all(self.invariants.values())

    def to_dict(self, include_timing: bool = False) -> dict:
        runtime = dict(self.runtime)
        if not include_timing:
            runtime.pop("wall_seconds", None)
        return {
            "kind": self.kind,
            "eps": list(self.eps),
            "T": self.T,
            "dt": self.dt,
            "same_initial": self.same_initial,
            "sup_errors": self.errors,
            "fit": None if self.fit is None else self.fit.to_dict(),
            "constants": self.constants.to_dict(),
            "invariants": dict(self.invariants),
            "passed": self.passed,
            "partial": self.partial,
            "error": self.error,
            "diagnostics": self.diagnostics,
            "runtime": runtime,
            "runs": [r.to_dict() for r in self.runs],
        }


def _validate_eps_list(eps_list):
    eps = [float(e) for e in eps_list]
    if len(eps) < 4:
        raise ConfigurationError(f"need at least 4 eps values, got {len(eps)}", "study.eps_list")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigurationError("eps values must be strictly decreasing", "study.eps_list")
    if eps[-1] <= 0 or eps[0] > 1:
        raise ConfigurationError("eps values must lie in (0, 1]", "study.eps_list")
    return eps


def _initial_arrays(initial: SystemState, ops, limit_initial: Field | None):
    check_same_grid(initial.grid, ops.grid)
    i0, j0 = initial.i.values, initial.j.values
    if min(i0.min(), j0.min()) < -RECT_TOL or max(i0.max(), j0.max()) > 1 + RECT_TOL:
        raise ConfigurationError("initial data must lie in [0, 1]^2 node-wise")
    X0 = i0 if limit_initial is None else limit_initial.values
    return i0, j0, X0


def _eps_result(run: PairedRun, model, ops, T) -> EpsResult:
    from .grid import h1_seminorm, l2_norm

    g = ops.grid
    fg = model.to_general()
    layer, plateau = _layer_and_plateau(run.times, run.eta_sq, T)
    trace = EtaTrace(run.times, run.eta_sq, model.eps, fg.delta, bool(run.eta_sq[0] <= 1e-28), layer, plateau)
    h1_i = [h1_seminorm(Field(g, v)) for v in run.snap_i]
    h1_j = [h1_seminorm(Field(g, v)) for v in run.snap_j]
    sup_x = max(l2_norm(Field(g, v)) for v in run.snap_i)
    trace.d0, trace.d1 = _bound_constants(fg, model, ops, sup_x, max(h1_i))
    trace.bound = _eta_bound(run.times, run.eta_sq[0], model.eps, fg.delta, trace.d0, trace.d1)
    return EpsResult(
        eps=model.eps,
        sup_error=run.sup_error,
        error_at_0=float(np.sqrt(run.err_sq[0])),
        eta=trace,
        h1_max_i=float(max(h1_i)),
        h1_max_j=float(max(h1_j)),
        h1_late_i=float(max(h1_i[1:], default=h1_i[0])),
        h1_late_j=float(max(h1_j[1:], default=h1_j[0])),
        rect_min=run.rect_min,
        rect_max=run.rect_max,
        gronwall_excess=None if not np.isfinite(run.gronwall_excess) else run.gronwall_excess,
        n_steps=run.n_steps,
    )


def _ratios(values):
    return [float(b / a) if a > 0 else float("inf") for a, b in zip(values, values[1:])]


def convergence_study(
    model,
    ops: SpatialOperators,
    initial: SystemState,
    T: float,
    eps_list,
    dt: float = 1e-3,
    limit_initial: Field | None = None,
    rho: float = 1.0,
    n_snapshots: int = 200,
    layer_snapshots: int = 20,
) -> StudyReport:
    """Sweep eps and measure ``sup_t ||i_eps - i_0||`` against the limit equation.

    ``limit_initial`` defaults to ``initial.i`` (equal slow data). Invariant
    flags: decreasing errors (5% slack), fitted order in ``[0.45, 1.5]``
    (equal data only), the discrete Gronwall inequality, H1 seminorm maxima
    within a factor 2 between neighbouring eps, the invariant square, and the
    eta decay bound.
    """
    eps = _validate_eps_list(eps_list)
    i0, j0, X0 = _initial_arrays(initial, ops, limit_initial)
    same = limit_initial is None or np.array_equal(X0, i0)
    fg = model.to_general()
    constants = compute_constants(fg, rho)
    runs: list[EpsResult] = []
    started = time.perf_counter()
    failure = None
    for e in eps:
        m = model.with_eps(e)
        try:
            run = paired_run(m, ops, i0, j0, X0, T, dt, n_snapshots, layer_snapshots, constants)
        except (StepFailure, ConfigurationError) as exc:
            failure = f"eps={e:g}: {exc}"
            break
        runs.append(_eps_result(run, m, ops, T))
    wall = time.perf_counter() - started
    return _assemble("convergence", eps, runs, T, dt, same, constants, failure, wall)


def _assemble(kind, eps, runs, T, dt, same, constants, failure, wall):
    errors = [r.sup_error for r in runs]
    fit = fit_order([r.eps for r in runs], errors) if len(runs) >= 3 and all(e > 0 for e in errors) else None
    h1_i = _ratios([r.h1_max_i for r in runs])
    h1_j = _ratios([r.h1_max_j for r in runs])
    plateaus = [r.eta.plateau for r in runs]
    invariants = {
        "errors_decreasing": all(b < a * (1 + MONOTONE_TOL) for a, b in zip(errors, errors[1:])),
        "invariant_rectangle": all(r.rect_min >= -RECT_TOL and r.rect_max <= 1 + RECT_TOL for r in runs),
        "gronwall_envelope": all(r.gronwall_excess is None or r.gronwall_excess <= GRONWALL_TOL for r in runs),
        "h1_uniform": all(max(q, 1 / q) < H1_RATIO_MAX for q in h1_i + h1_j),
        "eta_bound": all(r.eta.bound_holds for r in runs),
    }
    if same and fit is not None:
        invariants["order_in_range"] = ORDER_RANGE[0] <= fit.order <= ORDER_RANGE[1]
    eps_run = [r.eps for r in runs]
    plateau_fit = (
        fit_order(eps_run, plateaus) if len(runs) >= 3 and all(p > 0 for p in plateaus) else None
    )
    diagnostics = {
        "order_vs_candidates": None
        if fit is None
        else {"linear": abs(fit.order - 1.0), "sqrt": abs(fit.order - 0.5)},
        "eta_plateaus": plateaus,
        "eta_plateau_ratios": _ratios(plateaus),
        "eta_plateau_exponent": None if plateau_fit is None else plateau_fit.order,
        "eta_layer_time_scaled": [r.eta.layer_time_scaled for r in runs],
        "h1_ratios_i": h1_i,
        "h1_ratios_j": h1_j,
        # the maxima above include t = 0, where the data are shared by every run
        "h1_ratios_after_start": _ratios([r.h1_late_i for r in runs]) + _ratios([r.h1_late_j for r in runs]),
        "d0_max": max((r.eta.d0 for r in runs), default=None),
        "d1_max": max((r.eta.d1 for r in runs), default=None),
    }
    if not same and runs:
        # M2 is calibrated on the largest eps and checked on the others
        m1 = float(np.exp(constants.c1 * T)) if constants.c1 > 0 else 1.0
        m2 = max(0.0, (runs[0].sup_error - m1 * runs[0].error_at_0) / runs[0].eps)
        diagnostics["m1"] = m1
        diagnostics["m2_empirical"] = m2
        invariants["separation_bound"] = all(r.sup_error <= m1 * r.error_at_0 + r.eps * m2 + 1e-12 for r in runs)
    return StudyReport(
        kind=kind,
        eps=list(eps),
        runs=runs,
        T=T,
        dt=dt,
        same_initial=same,
        constants=constants,
        fit=fit,
        invariants=invariants,
        diagnostics=diagnostics,
        runtime={"n_steps": [r.n_steps for r in runs], "wall_seconds": wall},
        partial=failure is not None,
        error=failure,
    )


def decay_study(
    model,
    ops: SpatialOperators,
    initial: SystemState,
    T: float,
    eps_list,
    dt: float = 1e-3,
    limit_initial: Field | None = None,
    decay_floor: float = 1e-4,
) -> StudyReport:
    """Exponential envelope ``||x - X||^2 <= exp(-m t) (||x0 - X0||^2 + eps M2)``.

    Refuses parameters that violate the contraction condition. The decay rate
    ``m`` is the smallest log-linear slope of ``||x - X||^2`` over the second
    half of each run; ``M2`` is calibrated on the largest eps and the envelope
    is then checked, with the same ``(m, M2)``, on every run.
    """
    fg = model.to_general()
    constants = compute_constants(fg, 1.0)
    if not constants.contraction_holds:
        raise ContractionViolation(
            f"contraction condition fails: alpha/(beta N) - gamma M/delta = {constants.contraction_margin:.6g} <= 0",
            constants,
        )
    eps = _validate_eps_list(eps_list)
    i0, j0, X0 = _initial_arrays(initial, ops, limit_initial)
    same = limit_initial is None or np.array_equal(X0, i0)
    started = time.perf_counter()
    runs, paired, failure = [], [], None
    for e in eps:
        m = model.with_eps(e)
        try:
            run = paired_run(m, ops, i0, j0, X0, T, dt, constants=constants)
        except (StepFailure, ConfigurationError) as exc:
            failure = f"eps={e:g}: {exc}"
            break
        res = _eps_result(run, m, ops, T)
        late = (run.times >= 0.5 * T) & (run.err_sq > 0)
        slope = np.polyfit(run.times[late], np.log(run.err_sq[late]), 1)[0] if late.sum() > 2 else np.nan
        res.decay_rate = float(-slope)
        res.final_sup_i = float(np.abs(run.snap_i[-1]).max())
        res.final_sup_X = float(np.abs(run.snap_X[-1]).max())
        runs.append(res)
        paired.append(run)
    wall = time.perf_counter() - started
    report = _assemble("decay", eps, runs, T, dt, same, constants, failure, wall)

    rates = [r.decay_rate for r in runs if np.isfinite(r.decay_rate)]
    rate = min(rates) if rates else float("nan")
    envelope_ok = False
    m2 = None
    if paired and np.isfinite(rate):
        first = paired[0]
        m2 = float(max(0.0, np.max(first.err_sq * np.exp(rate * first.times) - first.err_sq[0])) / first.eps)
        envelope_ok = all(
            np.all(run.err_sq <= np.exp(-rate * run.times) * (run.err_sq[0] + run.eps * m2) * (1 + 1e-9) + 1e-300)
            for run in paired
        )
    report.invariants["decay_rate_positive"] = bool(np.isfinite(rate) and rate > 0)
    report.invariants["decay_envelope"] = bool(envelope_ok)
    report.invariants["decays_to_zero"] = all(
        r.final_sup_i <= decay_floor and r.final_sup_X <= decay_floor for r in runs
    )
    report.diagnostics.update(
        decay_rate=rate,
        decay_rate_theory=None if constants.c1_decay is None else -2 * constants.c1_decay,
        m2=m2,
        sqrt_eps_m2=None if m2 is None else [float(np.sqrt(e * m2)) for e in eps],
    )
    return report


# ---------------------------------------------------------------- stability probe


@dataclass(frozen=True)
class ProbeReport:
    mode: str
    applicable: bool
    r0: float
    T: float
    initial_deviation: float
    final_deviation: float
    final_sup_i: float
    decayed: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def smooth_perturbation(grid, amplitude: float, seed: int = 0, modes: int = 4) -> np.ndarray:
    """Random combination of Neumann cosine modes, sup-normalized to ``amplitude``."""
    rng = np.random.default_rng(seed)
    coords = grid.mesh()
    out = np.zeros(grid.shape)
    for _ in range(modes):
        ks = rng.integers(1, 5, size=grid.dim)
        term = np.ones(grid.shape)
        for c, k, L in zip(coords, ks, grid.extent):
            term = term * np.cos(np.pi * k * c / L)
        out += rng.normal() * term
    peak = np.abs(out).max()
    return amplitude * out / peak if peak > 0 else out


def stability_probe(
    model,
    ops: SpatialOperators,
    mode: str,
    T: float | None = None,
    dt: float = 0.01,
    amplitude: float = 1e-3,
    seed: int = 0,
    threshold: float = 1e-6,
) -> ProbeReport:
    """Perturb a constant equilibrium by a non-constant field and integrate.

    ``endemic``: reports the L2 distance to ``(i*, m(i*))`` at ``T``.
    ``disease_free``: perturbs zero by a nonnegative field and reports
    ``||i||_inf`` at ``T``. ``T`` defaults to ``50 / beta_h``.
    """
    if mode not in ("endemic", "disease_free"):
        raise ConfigurationError(f"mode must be 'endemic' or 'disease_free', got {mode!r}", "probe.mode")
    eq = equilibria(model)
    T = 50.0 / model.beta_h if T is None else T
    g = ops.grid
    pert = smooth_perturbation(g, amplitude, seed)
    if mode == "endemic":
        if not eq.has_endemic:
            return ProbeReport(mode, False, eq.r0, T, 0.0, 0.0, 0.0, False, "no endemic equilibrium (R0 <= 1)")
        i_star, j_star = eq.endemic_i, eq.endemic_j
        i0 = np.clip(i_star + pert, 0, 1)
        j0 = np.full(g.shape, j_star)
    else:
        i_star = j_star = 0.0
        i0 = np.abs(pert)
        j0 = np.zeros(g.shape)
    w = g.weights

    def deviation(i, j):
        return float(np.sqrt(np.sum(w * ((i - i_star) ** 2 + (j - j_star) ** 2))))

    traj = solve_full(
        model, ops, SystemState(0.0, Field(g, i0), Field(g, j0)), T, min(dt, T), output_times=[0.0, T]
    )
    dev0 = deviation(traj.i[0], traj.j[0])
    dev = deviation(traj.i[-1], traj.j[-1])
    sup_i = float(np.abs(traj.i[-1]).max())
    decayed = (dev < threshold) if mode == "endemic" else (sup_i < threshold)
    if mode == "disease_free" and eq.has_endemic:
        return ProbeReport(mode, False, eq.r0, T, dev0, dev, sup_i, decayed, "zero is unstable for R0 > 1")
    return ProbeReport(mode, True, eq.r0, T, dev0, dev, sup_i, decayed)
