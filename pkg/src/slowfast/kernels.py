"""Radial dispersal kernels sampled on grid offsets.

A kernel is stored as a table of values at the offsets ``k * h`` for
``|k| <= K`` along each axis, centred so that ``table[K]`` (or ``table[Kx, Ky]``)
is the value at zero. Tables are rescaled after sampling so that the
lattice quadrature ``prod(h) * sum(table)`` is exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError, ResolutionError
from .grid import Field, Grid

PRESETS = ("gaussian_truncated", "smooth_bump", "tent")

MASS_TOL = 1e-10


def _gaussian(r, sigma, cutoff):
    return np.where(r <= cutoff, np.exp(-0.5 * (r / sigma) ** 2), 0.0)


def _smooth_bump(r, radius):
    s = np.clip(r / radius, 0.0, 1.0)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _tent(r, radius):
    return np.maximum(0.0, 1.0 - r / radius)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Sampled kernel table plus provenance.

    ``normalization`` is the factor applied to the raw profile to reach unit
    discrete mass. ``truncation_jump`` is the profile value at the cut relative
    to the peak (nonzero only for the truncated Gaussian).
    """

    dim: int
    spacing: tuple[float, ...]
    table: np.ndarray
    preset: str = "table"
    params: Mapping[str, float] = field(default_factory=dict)
    normalization: float = 1.0
    c1: bool = False
    truncation_jump: float = 0.0

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != self.dim or any(n % 2 == 0 for n in t.shape):
            raise ConfigurationError(f"kernel table must have odd length per axis, got shape {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))

    @classmethod
    def from_table(cls, table, spacing, c1: bool = False) -> "Kernel":
        """Wrap a hand-built table without normalization or checks."""
        table = np.asarray(table, dtype=float)
        spacing = (spacing,) * table.ndim if np.ndim(spacing) == 0 else tuple(spacing)
        return cls(dim=table.ndim, spacing=spacing, table=table, c1=c1)

    @property
    def half_width(self) -> tuple[int, ...]:
        return tuple((n - 1) // 2 for n in self.table.shape)

    @property
    def center(self) -> float:
        return float(self.table[self.half_width])

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.table)))

    @property
    def support_radius(self) -> float:
        return float(self.params.get("support_radius", max(k * h for k, h in zip(self.half_width, self.spacing))))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def mass(self) -> float:
        return self.cell_volume * float(np.sum(self.table))


def make_kernel(preset: str, params: Mapping[str, float], grid: Grid) -> Kernel:
    """Sample a named radial profile on the offsets of ``grid`` and renormalize.

    Presets and their parameters:

    - ``gaussian_truncated``: ``sigma``, optional ``truncation`` (multiples of
      sigma, default 4, must be >= 4)
    - ``smooth_bump``: ``radius``; C-infinity with compact support
    - ``tent``: ``radius``; continuous only
    """
    params = dict(params)
    if preset == "gaussian_truncated":
        sigma = _positive(params, "sigma")
        trunc = float(params.get("truncation", 4.0))
        if trunc < 4.0:
            raise ConfigurationError(f"truncation must be >= 4 sigma, got {trunc}", "kernel.params.truncation")
        radius = trunc * sigma
        profile = lambda r: _gaussian(r, sigma, radius)  # noqa: E731
        jump = float(np.exp(-0.5 * trunc**2))
        c1 = True
    elif preset == "smooth_bump":
        radius = _positive(params, "radius")
        profile = lambda r: _smooth_bump(r, radius)  # noqa: E731
        jump, c1 = 0.0, True
    elif preset == "tent":
        radius = _positive(params, "radius")
        profile = lambda r: _tent(r, radius)  # noqa: E731
        jump, c1 = 0.0, False
    else:
        raise ConfigurationError(f"unknown preset {preset!r}; expected one of {PRESETS}", "kernel.preset")

    hmax = max(grid.spacing)
    if radius < 3 * hmax:
        raise ResolutionError(
            f"kernel support radius {radius:g} is below 3 grid cells (3h = {3 * hmax:g})", "kernel.params"
        )
    if 2 * radius >= grid.diameter:
        raise ConfigurationError(
            f"kernel support diameter {2 * radius:g} must be smaller than the domain diameter {grid.diameter:g}",
            "kernel.params",
        )

    half = [int(np.floor(radius / h + 1e-12)) for h in grid.spacing]
    offsets = np.meshgrid(*[np.arange(-k, k + 1) * h for k, h in zip(half, grid.spacing)], indexing="ij")
    r = np.sqrt(sum(o**2 for o in offsets))
    raw = profile(r)
    scale = 1.0 / (np.prod(grid.spacing) * raw.sum())
    params["support_radius"] = radius
    return Kernel(
        dim=grid.dim,
        spacing=grid.spacing,
        table=raw * scale,
        preset=preset,
        params=params,
        normalization=float(scale),
        c1=c1,
        truncation_jump=jump,
    )


def _positive(params, name) -> float:
    if name not in params:
        raise ConfigurationError("missing parameter", f"kernel.params.{name}")
    v = float(params[name])
    if not np.isfinite(v) or v <= 0:
        raise ConfigurationError(f"must be positive, got {v!r}", f"kernel.params.{name}")
    return v


@dataclass(frozen=True)
class Check:
    passed: bool
    residual: float


@dataclass(frozen=True)
class KernelValidationReport:
    nonnegativity: Check
    positive_at_zero: Check
    symmetry: Check
    unit_mass: Check
    c1: bool
    truncation_jump: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in (self.nonnegativity, self.positive_at_zero, self.symmetry, self.unit_mass))

    def to_dict(self) -> dict:
        out = {
            name: {"passed": c.passed, "residual": c.residual}
            for name, c in (
                ("nonnegativity", self.nonnegativity),
                ("positive_at_zero", self.positive_at_zero),
                ("symmetry", self.symmetry),
                ("unit_mass", self.unit_mass),
            )
        }
        out.update(passed=self.passed, c1=self.c1, truncation_jump=self.truncation_jump)
        return out


def validate_kernel(kernel: Kernel) -> KernelValidationReport:
    """Check nonnegativity, J(0) > 0, evenness and unit discrete mass."""
    t = kernel.table
    peak = max(kernel.sup_norm, np.finfo(float).tiny)
    neg = float(max(0.0, -t.min()))
    j0 = kernel.center
    asym = float(np.max(np.abs(t - t[tuple(slice(None, None, -1) for _ in range(t.ndim))])))
    mass_err = abs(kernel.mass() - 1.0)
    return KernelValidationReport(
        nonnegativity=Check(neg == 0.0, neg),
        positive_at_zero=Check(j0 > 0.0, max(0.0, -j0)),
        symmetry=Check(asym <= 1e-14 * peak, asym),
        unit_mass=Check(mass_err <= MASS_TOL, mass_err),
        c1=kernel.c1,
        truncation_jump=kernel.truncation_jump,
    )


def check_kernel_grid(kernel: Kernel, grid: Grid) -> None:
    if kernel.dim != grid.dim or not np.allclose(kernel.spacing, grid.spacing, rtol=1e-12, atol=0):
        raise ConfigurationError(
            f"kernel sampled at spacing {kernel.spacing} does not match grid spacing {grid.spacing}"
        )


def boundary_mass(kernel: Kernel, grid: Grid) -> tuple[Field, float]:
    """Return ``A(u) = int_Omega J(u - v) dv`` as a field, and its minimum over the grid."""
    check_kernel_grid(kernel, grid)
    A = fftconvolve(grid.weights, kernel.table, mode="same")
    field = Field(grid, A)
    return field, float(A.min())
