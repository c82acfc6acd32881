"""Reaction terms, slow manifold, hypothesis checks and equilibria.

The prototype is the normalized Ross-Macdonald host/vector system

    f(x, y) = a_h (1 - x) y - b_h x        (host, slow)
    g(x, y) = a_v (1 - y) x - b_v y        (vector, fast, divided by eps)

whose fast nullcline is ``y = m(x) = a_v x / (a_v x + b_v)``.
:class:`GeneralFG` carries an arbitrary smooth pair together with the
constants of the structural hypotheses so both can be checked numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .errors import ConfigurationError

MANIFOLD_ROOT_TOL = 1e-10
MARGIN_TOL = 1e-12


@dataclass(frozen=True)
class RossMacdonaldParams:
    alpha_h: float
    beta_h: float
    alpha_v: float
    beta_v: float
    d1: float
    d2: float
    eps: float

    def __post_init__(self):
        for name in ("alpha_h", "beta_h", "alpha_v", "beta_v", "d1", "d2", "eps"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigurationError(f"must be strictly positive, got {v!r}", f"model.{name}")
        if self.eps > 1:
            raise ConfigurationError(f"must lie in (0, 1], got {self.eps!r}", "model.eps")

    def with_eps(self, eps: float) -> "RossMacdonaldParams":
        return replace(self, eps=eps)

    @property
    def r0(self) -> float:
        return self.alpha_h * self.alpha_v / (self.beta_h * self.beta_v)

    # reaction interface used by the integrator
    def f(self, x, y):
        return f_host(self, x, y)

    def g(self, x, y):
        return g_vector(self, x, y)

    def g_y(self, x, y):
        return -self.alpha_v * x - self.beta_v

    def m(self, x):
        return slow_manifold(self, x)

    def fast_affine(self, x):
        """``g(x, y) = a(x) - b(x) y``; returns ``(a, b)``."""
        return self.alpha_v * x, self.alpha_v * x + self.beta_v

    def to_general(self) -> "GeneralFG":
        """The prototype as a :class:`GeneralFG` on the unit square.

        With ``M = N = 1`` the sharp constants are ``alpha = b_h``,
        ``beta = a_h``, ``gamma = a_v``, ``delta = b_v`` and
        ``k = max`` of the four rates.
        """
        a_h, b_h, a_v, b_v = self.alpha_h, self.beta_h, self.alpha_v, self.beta_v
        return GeneralFG(
            f=lambda x, y: a_h * (1 - x) * y - b_h * x,
            g=lambda x, y: a_v * (1 - y) * x - b_v * y,
            f_x=lambda x, y: -a_h * y - b_h + 0 * x,
            f_y=lambda x, y: a_h * (1 - x) + 0 * y,
            g_x=lambda x, y: a_v * (1 - y) + 0 * x,
            g_y=lambda x, y: -a_v * x - b_v + 0 * y,
            m=lambda x: a_v * x / (a_v * x + b_v),
            m_prime=lambda x: a_v * b_v / (a_v * x + b_v) ** 2,
            M=1.0,
            N=1.0,
            alpha=b_h,
            beta=a_h,
            gamma=a_v,
            delta=b_v,
            k=max(a_h, b_h, a_v, b_v),
        )


def f_host(p: RossMacdonaldParams, x, y):
    return p.alpha_h * (1 - x) * y - p.beta_h * x


def g_vector(p: RossMacdonaldParams, x, y):
    return p.alpha_v * (1 - y) * x - p.beta_v * y


def slow_manifold(p: RossMacdonaldParams, x):
    return p.alpha_v * x / (p.alpha_v * x + p.beta_v)


def slow_manifold_deriv(p: RossMacdonaldParams, x):
    return p.alpha_v * p.beta_v / (p.alpha_v * x + p.beta_v) ** 2


@dataclass(frozen=True)
class GeneralFG:
    """A smooth reaction pair with its partials, slow manifold and constants."""

    f: Callable
    g: Callable
    f_x: Callable
    f_y: Callable
    g_x: Callable
    g_y: Callable
    m: Callable
    m_prime: Callable
    M: float
    N: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    k: float


@dataclass(frozen=True)
class GeneralModel:
    """Full-system parameters for a general reaction pair."""

    fg: GeneralFG
    d1: float
    d2: float
    eps: float

    def with_eps(self, eps: float) -> "GeneralModel":
        return replace(self, eps=eps)

    def f(self, x, y):
        return self.fg.f(x, y)

    def g(self, x, y):
        return self.fg.g(x, y)

    def g_y(self, x, y):
        return self.fg.g_y(x, y)

    def m(self, x):
        return self.fg.m(x)

    def fast_affine(self, x):
        return None

    def to_general(self) -> GeneralFG:
        return self.fg


@dataclass(frozen=True)
class HypothesisCheck:
    """One sampled inequality. ``margin >= 0`` means satisfied at the worst point."""

    name: str
    passed: bool
    margin: float
    location: tuple[float, ...]
    informational: bool = False


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[HypothesisCheck, ...]
    rho_hat: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed and not c.informational]

    def group_passed(self, prefix: str) -> bool:
        return all(c.passed for c in self.checks if c.name.startswith(prefix) and not c.informational)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "rho_hat": self.rho_hat,
            "checks": {
                c.name: {
                    "passed": c.passed,
                    "margin": c.margin,
                    "location": list(c.location),
                    "informational": c.informational,
                }
                for c in self.checks
            },
        }


def _worst(name, margin, points, tol=MARGIN_TOL, informational=False) -> HypothesisCheck:
    margin = np.broadcast_to(np.asarray(margin, dtype=float), points[0].shape)
    idx = np.unravel_index(np.argmin(margin), margin.shape)
    worst = float(margin[idx])
    return HypothesisCheck(
        name, bool(worst >= -tol), worst, tuple(float(p[idx]) for p in points), informational
    )


def inward_dot(fg: GeneralFG, x, y, eps: float = 1.0):
    """``(f, g / eps) . (x, y)``; negative means the field points toward the origin side."""
    return fg.f(x, y) * x + fg.g(x, y) / eps * y


def check_hypotheses(fg: GeneralFG, lattice_density: int = 101, eps: float = 1.0, shell: float = 0.1) -> HypothesisReport:
    """Sample every structural inequality on ``[0, N] x [0, M]``.

    Invariance of the rectangle is tested face by face: the outward normal
    component of ``(f, g / eps)`` must be nonpositive on each side. The
    radial dot-product form is evaluated on a shell ``shell * (N, M)`` outside
    the rectangle and reported for information only, because it can fail
    near the origin or beside the fast nullcline even when every face points
    inward.
    """
    if lattice_density < 50:
        raise ConfigurationError(f"lattice_density must be >= 50, got {lattice_density}", "lattice_density")
    N, M = fg.N, fg.M
    xs = np.linspace(0.0, N, lattice_density)
    ys = np.linspace(0.0, M, lattice_density)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = (X, Y)
    fx, fy, gx, gy = fg.f_x(X, Y), fg.f_y(X, Y), fg.g_x(X, Y), fg.g_y(X, Y)

    checks = [
        _worst("H_fg.i.f_bounded", fg.k - np.abs(fg.f(X, Y)), P),
        _worst("H_fg.i.g_bounded", fg.k - np.abs(fg.g(X, Y)), P),
        _worst("H_fg.ii.f_x_upper", -fg.alpha - fx, P),
        _worst("H_fg.ii.f_y_nonneg", fy, P),
        _worst("H_fg.ii.f_y_upper", fg.beta * N - fy, P),
        _worst("H_fg.iii.g_y_upper", -fg.delta - gy, P),
        _worst("H_fg.iii.g_x_nonneg", gx, P),
        _worst("H_fg.iii.g_x_upper", fg.gamma * M - gx, P),
    ]

    mx = fg.m(xs)
    mp = fg.m_prime(xs)
    P1 = (xs,)
    checks += [
        _worst("H_m.m_nonneg", mx, P1),
        _worst("H_m.m_upper", fg.gamma / fg.delta * M * N - mx, P1),
        _worst("H_m.m_prime_nonneg", mp, P1),
        _worst("H_m.m_prime_upper", fg.gamma * M / fg.delta - mp, P1),
        _worst("H_m.manifold_root", MANIFOLD_ROOT_TOL - np.abs(fg.g(xs, mx)), P1, tol=0.0),
    ]

    # quasi-monotone shift: f + rho x increasing in x, g + rho y increasing in y
    rho_hat = float(max(0.0, np.max(-fx), np.max(-gy)))
    checks.append(_worst("H_inf.i.cooperative", np.minimum(fy, gx), P))

    zeros = np.zeros_like(ys)
    faces = [
        ((zeros, ys), -fg.f(zeros, ys)),  # x = 0, normal (-1, 0)
        ((zeros + N, ys), fg.f(zeros + N, ys)),  # x = N, normal (+1, 0)
        ((xs, zeros), -fg.g(xs, zeros) / eps),  # y = 0, normal (0, -1)
        ((xs, zeros + M), fg.g(xs, zeros + M) / eps),  # y = M, normal (0, +1)
    ]
    pts = tuple(np.concatenate([p[k] for p, _ in faces]) for k in range(2))
    flux = np.concatenate([fl for _, fl in faces])
    checks.append(_worst("H_inf.ii.inward_faces", -flux, pts))

    sx, sy = shell * N, shell * M
    t = np.linspace(-sy, M + sy, lattice_density)
    s = np.linspace(-sx, N + sx, lattice_density)
    shell_x = np.concatenate([np.full_like(t, -sx), np.full_like(t, N + sx), s, s])
    shell_y = np.concatenate([t, t, np.full_like(s, -sy), np.full_like(s, M + sy)])
    checks.append(
        _worst("H_inf.ii.radial_dot", -inward_dot(fg, shell_x, shell_y, eps), (shell_x, shell_y), informational=True)
    )
    return HypothesisReport(tuple(checks), rho_hat)


@dataclass(frozen=True)
class EquilibriumReport:
    r0: float
    disease_free: tuple[float, float]
    endemic_i: float | None
    endemic_j: float | None
    stability: dict = field(default_factory=dict)

    @property
    def has_endemic(self) -> bool:
        return self.endemic_i is not None

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "disease_free": list(self.disease_free),
            "endemic_i": self.endemic_i,
            "endemic_j": self.endemic_j,
            "stability": dict(self.stability),
        }


def endemic_residual(p: RossMacdonaldParams, z):
    """``a_h (1 - z) m(z) - b_h z``: zero at constant equilibria of the limit equation."""
    return p.alpha_h * (1 - z) * slow_manifold(p, z) - p.beta_h * z


def equilibria(p: RossMacdonaldParams, xtol: float = 1e-14) -> EquilibriumReport:
    """Constant equilibria and their stability labels.

    The endemic level is bracketed by bisection on ``endemic_residual(z) / z``,
    which is decreasing on ``[0, 1]``, positive at 0 iff ``R0 > 1``, and equal
    to ``-b_h`` at 1.
    """
    def reduced(z):
        return p.alpha_h * (1 - z) * p.alpha_v / (p.alpha_v * z + p.beta_v) - p.beta_h

    # compare products directly so R0 == 1 is not decided by rounding
    if p.alpha_h * p.alpha_v > p.beta_h * p.beta_v and reduced(0.0) > 0:
        z = bisect(reduced, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
        return EquilibriumReport(
            p.r0, (0.0, 0.0), float(z), float(slow_manifold(p, z)),
            {"disease_free": "unstable", "endemic": "globally stable"},
        )
    return EquilibriumReport(p.r0, (0.0, 0.0), None, None, {"disease_free": "globally stable"})
