"""Time stepping for the full slow/fast system and for its limit equation.

Full system (``model`` supplies ``f``, ``g``, ``m``, ``d1``, ``d2``, ``eps``)::

    i_t = f(i, j) + d1 K i
    j_t = g(i, j) / eps + d2 Lap j

Schemes:

``imex`` (default, first order)
    The slow equation is advanced by forward Euler. The fast equation is then
    solved implicitly in both the reaction ``g / eps`` and the Laplacian, with
    ``i`` taken at the new level so that ``j`` relaxes onto ``m(i_new)``
    without a one-step lag. For the prototype ``g`` is affine in ``j`` and this
    is a single linear solve; a general ``g`` goes through Newton. Any ``dt``
    below the slow-equation bound of :func:`step_size_audit` keeps the state in
    ``[0, 1]^2`` for every ``eps``.

``ssprk3``
    Explicit three-stage strong-stability-preserving Runge-Kutta. Accurate but
    needs ``dt = O(eps)`` and ``dt = O(h^2)``; used as a reference integrator.

The limit equation ``X_t = f(X, m(X)) + d1 K X`` has no stiff term and is
advanced with ``euler`` or ``ssprk3`` (default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import spsolve

from .errors import ConfigurationError, StepFailure
from .grid import Field, Grid, check_same_grid
from .operators import SpatialOperators

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-13
RECT_TOL = 1e-8

FULL_SCHEMES = ("imex", "ssprk3")
LIMIT_SCHEMES = ("euler", "ssprk3")


@dataclass(frozen=True)
class SystemState:
    t: float
    i: Field
    j: Field

    def __post_init__(self):
        check_same_grid(self.i.grid, self.j.grid)

    @property
    def grid(self) -> Grid:
        return self.i.grid


@dataclass
class Trajectory:
    """Snapshots of a run. ``i`` and ``j`` have shape ``(n_snapshots, *grid.shape)``."""

    grid: Grid
    times: np.ndarray
    i: np.ndarray
    j: np.ndarray
    system: str
    scheme: str
    dt: float
    n_steps: int
    rejected_steps: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> SystemState:
        return SystemState(float(self.times[k]), Field(self.grid, self.i[k]), Field(self.grid, self.j[k]))

    @property
    def snapshots(self) -> list[SystemState]:
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> SystemState:
        return self.state(len(self) - 1)

    def metadata(self) -> dict:
        return {
            "system": self.system,
            "scheme": self.scheme,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "rejected_steps": self.rejected_steps,
            "n_snapshots": len(self),
        }


# ---------------------------------------------------------------- time grids


def time_nodes(T: float, dt: float, output_times, layer_dt: float | None = None, layer_span: float = 0.0):
    """Step end times on ``(0, T]``.

    Uniform steps of ``dt``, refined to ``layer_dt`` on ``[0, layer_span)``,
    with every output time hit exactly. Returns ``(nodes, output_times)``.
    """
    if not (T > 0 and np.isfinite(T)):
        raise ConfigurationError(f"T must be positive, got {T!r}", "integrator.T")
    if not (dt > 0) or dt > T:
        raise ConfigurationError(f"dt must satisfy 0 < dt <= T, got {dt!r}", "integrator.dt")
    outs = np.asarray(sorted(set(float(t) for t in output_times)), dtype=float)
    if outs.size == 0 or outs[0] < 0 or outs[-1] > T * (1 + 1e-12):
        raise ConfigurationError("output times must lie in [0, T]", "integrator.output_times")
    outs[-1] = min(outs[-1], T)

    parts = [np.arange(1, int(np.ceil(T / dt - 1e-9)) + 1) * dt, outs, [T]]
    small = dt
    if layer_dt is not None and layer_span > 0 and layer_dt < dt:
        small = layer_dt
        parts.append(np.arange(1, int(np.ceil(layer_span / layer_dt - 1e-9)) + 1) * layer_dt)
    nodes = np.unique(np.concatenate(parts))
    nodes = nodes[(nodes > 0) & (nodes <= T)]

    # drop step nodes that would create a sliver next to an output time
    tol = 1e-6 * small
    is_out = np.isin(nodes, outs)
    keep = np.ones(nodes.size, dtype=bool)
    pos = np.searchsorted(outs, nodes)
    for k in np.flatnonzero(~is_out):
        near = [outs[q] for q in (pos[k] - 1, pos[k]) if 0 <= q < outs.size]
        if any(abs(nodes[k] - o) < tol for o in near):
            keep[k] = False
    return nodes[keep], outs


def default_output_times(T: float, n: int = 200) -> np.ndarray:
    return np.linspace(0.0, T, n + 1)


# ---------------------------------------------------------------- full system


def _check_rectangle(i, j, what="state"):
    lo = min(i.min(), j.min())
    hi = max(i.max(), j.max())
    if lo < -RECT_TOL or hi > 1 + RECT_TOL:
        raise ConfigurationError(f"{what} must lie in [0, 1]^2 node-wise (range [{lo:g}, {hi:g}])")


def _linear_fast_solve(j, a, b, model, ops: SpatialOperators, dt):
    """Solve ``(1 + dt b / eps) u - dt d2 Lap u = j + dt a / eps``."""
    diag = 1.0 + dt * b.ravel() / model.eps
    rhs = (j + dt * a / model.eps).ravel()
    c = dt * model.d2
    try:
        if ops.grid.dim == 1:
            ab = -c * ops.laplacian.banded
            ab[1] += diag
            out = solve_banded((1, 1), ab, rhs)
        else:
            A = sp.diags(diag) - c * ops.laplacian.stencil
            out = spsolve(A.tocsc(), rhs)
    except (LinAlgError, ValueError) as exc:
        raise ConfigurationError(f"fast-equation linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise ConfigurationError("fast-equation linear solve returned non-finite values")
    return out.reshape(j.shape)


def _newton_fast_solve(i, j, model, ops: SpatialOperators, dt, t):
    """Newton on ``u - j - dt g(i, u) / eps - dt d2 Lap u = 0``."""
    L = ops.laplacian.stencil
    c = dt * model.d2
    u = j.copy()
    for _ in range(NEWTON_MAX_ITER):
        resid = (u - j - dt * model.g(i, u) / model.eps).ravel() - c * (L @ u.ravel())
        jac = sp.diags(1.0 - dt * np.ravel(model.g_y(i, u)) / model.eps) - c * L
        try:
            du = spsolve(jac.tocsc(), resid).reshape(u.shape)
        except (LinAlgError, ValueError) as exc:
            raise ConfigurationError(f"Newton linear solve failed: {exc}") from exc
        u = u - du
        if not np.all(np.isfinite(u)):
            break
        if np.max(np.abs(du)) <= NEWTON_TOL * max(1.0, np.max(np.abs(u))):
            return u
    grid = ops.grid
    raise StepFailure(
        f"Newton did not converge in {NEWTON_MAX_ITER} iterations at t={t:g}",
        SystemState(t, Field(grid, i), Field(grid, j)),
    )


def _full_rhs(i, j, model, ops):
    di = model.f(i, j) + model.d1 * ops.nonlocal_op.apply_array(i)
    dj = model.g(i, j) / model.eps + model.d2 * (ops.laplacian.stencil @ j.ravel()).reshape(j.shape)
    return di, dj


def full_step_arrays(i, j, model, ops: SpatialOperators, dt, scheme: str = "imex", t: float = 0.0):
    """One step on raw arrays; returns ``(i_new, j_new)``."""
    if scheme == "imex":
        i_new = i + dt * (model.f(i, j) + model.d1 * ops.nonlocal_op.apply_array(i))
        affine = model.fast_affine(i_new)
        if affine is not None:
            j_new = _linear_fast_solve(j, *affine, model, ops, dt)
        else:
            j_new = _newton_fast_solve(i_new, j, model, ops, dt, t)
        return i_new, j_new
    if scheme == "ssprk3":
        di, dj = _full_rhs(i, j, model, ops)
        i1, j1 = i + dt * di, j + dt * dj
        di, dj = _full_rhs(i1, j1, model, ops)
        i2, j2 = 0.75 * i + 0.25 * (i1 + dt * di), 0.75 * j + 0.25 * (j1 + dt * dj)
        di, dj = _full_rhs(i2, j2, model, ops)
        return i / 3 + 2 / 3 * (i2 + dt * di), j / 3 + 2 / 3 * (j2 + dt * dj)
    raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {FULL_SCHEMES}", "integrator.scheme")


def step_full(state: SystemState, model, ops: SpatialOperators, dt: float, scheme: str = "imex") -> SystemState:
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt!r}", "integrator.dt")
    check_same_grid(state.grid, ops.grid)
    _check_rectangle(state.i.values, state.j.values)
    i, j = full_step_arrays(state.i.values, state.j.values, model, ops, dt, scheme, state.t)
    return SystemState(state.t + dt, Field(ops.grid, i), Field(ops.grid, j))


def solve_full(
    model,
    ops: SpatialOperators,
    initial: SystemState,
    T: float,
    dt: float,
    output_times=None,
    scheme: str = "imex",
    layer_dt: float | None = None,
    layer_span: float = 0.0,
) -> Trajectory:
    """Integrate the full system from ``initial`` (taken at t = 0) to ``T``."""
    check_same_grid(initial.grid, ops.grid)
    _check_rectangle(initial.i.values, initial.j.values, "initial data")
    if scheme not in FULL_SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {FULL_SCHEMES}", "integrator.scheme")
    outs = default_output_times(T) if output_times is None else output_times
    nodes, outs = time_nodes(T, dt, outs, layer_dt, layer_span)
    i, j = initial.i.values.copy(), initial.j.values.copy()
    snaps_i, snaps_j = [], []
    if outs[0] == 0.0:
        snaps_i.append(i.copy())
        snaps_j.append(j.copy())
    k_out = int(outs[0] == 0.0)
    t = 0.0
    for t_next in nodes:
        i, j = full_step_arrays(i, j, model, ops, t_next - t, scheme, t)
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(j))):
            raise StepFailure(f"non-finite state at t={t_next:g}", None)
        t = t_next
        if k_out < len(outs) and t == outs[k_out]:
            snaps_i.append(i.copy())
            snaps_j.append(j.copy())
            k_out += 1
    return Trajectory(ops.grid, outs, np.array(snaps_i), np.array(snaps_j), "full", scheme, dt, len(nodes))


# ---------------------------------------------------------------- limit equation


def _limit_rhs(x, model, ops):
    return model.f(x, model.m(x)) + model.d1 * ops.nonlocal_op.apply_array(x)


def limit_step_arrays(x, model, ops: SpatialOperators, dt, scheme: str = "ssprk3"):
    if scheme == "euler":
        return x + dt * _limit_rhs(x, model, ops)
    if scheme == "ssprk3":
        x1 = x + dt * _limit_rhs(x, model, ops)
        x2 = 0.75 * x + 0.25 * (x1 + dt * _limit_rhs(x1, model, ops))
        return x / 3 + 2 / 3 * (x2 + dt * _limit_rhs(x2, model, ops))
    raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {LIMIT_SCHEMES}", "integrator.limit_scheme")


def step_limit(state: SystemState, model, ops: SpatialOperators, dt: float, scheme: str = "ssprk3") -> SystemState:
    check_same_grid(state.grid, ops.grid)
    x = limit_step_arrays(state.i.values, model, ops, dt, scheme)
    return SystemState(state.t + dt, Field(ops.grid, x), Field(ops.grid, model.m(x)))


def solve_limit(
    model,
    ops: SpatialOperators,
    initial_i: Field,
    T: float,
    dt: float,
    output_times=None,
    scheme: str = "ssprk3",
    layer_dt: float | None = None,
    layer_span: float = 0.0,
) -> Trajectory:
    """Integrate the limit equation; the ``j`` snapshots hold ``m(i)``."""
    check_same_grid(initial_i.grid, ops.grid)
    x = initial_i.values.copy()
    if x.min() < -RECT_TOL or x.max() > 1 + RECT_TOL:
        raise ConfigurationError("initial data must lie in [0, 1] node-wise")
    if scheme not in LIMIT_SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {LIMIT_SCHEMES}", "integrator.limit_scheme")
    outs = default_output_times(T) if output_times is None else output_times
    nodes, outs = time_nodes(T, dt, outs, layer_dt, layer_span)
    snaps = [x.copy()] if outs[0] == 0.0 else []
    k_out = int(outs[0] == 0.0)
    t = 0.0
    for t_next in nodes:
        x = limit_step_arrays(x, model, ops, t_next - t, scheme)
        if not np.all(np.isfinite(x)):
            raise StepFailure(f"non-finite state at t={t_next:g}", None)
        t = t_next
        if k_out < len(outs) and t == outs[k_out]:
            snaps.append(x.copy())
            k_out += 1
    snaps = np.array(snaps)
    return Trajectory(ops.grid, outs, snaps, model.m(snaps), "limit", scheme, dt, len(nodes))


# ---------------------------------------------------------------- step size audit


@dataclass(frozen=True)
class StepSizeAudit:
    dt_max: float
    scheme: str
    reaction_lipschitz: float
    nonlocal_lipschitz: float
    nonlocal_continuum_bound: float
    fast_bound: float | None
    rationale: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def step_size_audit(model, ops: SpatialOperators | None = None, scheme: str = "imex", density: int = 101) -> StepSizeAudit:
    """Report the largest explicit step that keeps forward Euler pieces monotone.

    The slow equation is explicit in every scheme; forward Euler on it stays in
    ``[0, 1]`` when ``dt (L_f + d1 L_K) <= 1`` with ``L_f = sup |df/dx|`` on the
    unit square and ``L_K = 2 max A`` the row-sum norm of the nonlocal
    operator. ``ssprk3`` also treats the fast equation explicitly and adds the
    bound ``dt (sup |g_y| / eps + 2 dim d2 / h^2) <= 1``. Nothing is applied
    automatically.
    """
    if scheme not in FULL_SCHEMES + LIMIT_SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}", "integrator.scheme")
    fg = model.to_general()
    s = np.linspace(0.0, 1.0, density)
    X, Y = np.meshgrid(s * fg.N, s * fg.M, indexing="ij")
    if scheme == "euler":
        # limit equation: d/dx f(x, m(x))
        xs = s * fg.N
        lf = float(np.max(np.abs(fg.f_x(xs, fg.m(xs)) + fg.f_y(xs, fg.m(xs)) * fg.m_prime(xs))))
    else:
        lf = float(np.max(np.abs(fg.f_x(X, Y))))
    if ops is None:
        lk, cont = 0.0, 0.0
    else:
        lk = ops.nonlocal_op.row_sum_bound
        cont = 2.0 * ops.nonlocal_op.kernel.sup_norm * ops.grid.measure
    dt_max = 1.0 / (lf + model.d1 * lk)
    fast = None
    why = f"explicit slow step: 1 / (L_f={lf:.4g} + d1={model.d1:.4g} * L_K={lk:.4g})"
    if scheme == "ssprk3":
        lg = float(np.max(np.abs(fg.g_y(X, Y))))
        diff = 0.0 if ops is None else sum(2.0 * model.d2 / h**2 for h in ops.grid.spacing)
        fast = lg / model.eps + diff
        dt_max = min(dt_max, 1.0 / fast)
        why += f"; explicit fast step: 1 / (|g_y|/eps={lg / model.eps:.4g} + diffusion={diff:.4g})"
    elif scheme == "imex":
        why += "; fast equation implicit, no eps restriction"
    return StepSizeAudit(dt_max, scheme, lf, lk, cont, fast, why)
