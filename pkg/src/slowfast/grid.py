"""Uniform 1D/2D grids with trapezoid quadrature, and fields sampled on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError


def _per_axis(value, dim: int, name: str) -> tuple:
    if np.ndim(value) == 0:
        return (value,) * dim
    value = tuple(value)
    if len(value) != dim:
        raise ConfigurationError(f"expected {dim} entries, got {len(value)}", name)
    return value


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``[0, L_1] x ... x [0, L_dim]``.

    Nodes include the boundary; ``spacing = extent / (n_points - 1)``.
    """

    dim: int
    extent: tuple[float, ...]
    n_points: tuple[int, ...]
    spacing: tuple[float, ...] = field(init=False)
    axes: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spacing = tuple(L / (n - 1) for L, n in zip(self.extent, self.n_points))
        axes = tuple(np.linspace(0.0, L, n) for L, n in zip(self.extent, self.n_points))
        w = _trapezoid_weights(self.n_points[0], spacing[0])
        for n, h in zip(self.n_points[1:], spacing[1:]):
            w = np.multiply.outer(w, _trapezoid_weights(n, h))
        w.setflags(write=False)
        for a in axes:
            a.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.n_points)

    @property
    def size(self) -> int:
        return int(np.prod(self.n_points))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(np.sum(np.square(self.extent))))

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape`` (``ij`` indexing)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def field(self, values) -> "Field":
        return Field(self, values)

    def constant(self, c: float) -> "Field":
        return Field(self, np.full(self.shape, float(c)))

    def sample(self, func) -> "Field":
        """Evaluate ``func(*coords)`` on the nodes."""
        return Field(self, np.broadcast_to(func(*self.mesh()), self.shape).astype(float))


def build_grid(dim: int, extent, n_points) -> Grid:
    """Validate inputs and build a :class:`Grid`."""
    if dim not in (1, 2):
        raise ConfigurationError(f"dim must be 1 or 2, got {dim!r}", "grid.dim")
    extent = tuple(float(e) for e in _per_axis(extent, dim, "grid.extent"))
    n_points = _per_axis(n_points, dim, "grid.n_points")
    for e in extent:
        if not np.isfinite(e) or e <= 0:
            raise ConfigurationError(f"extent must be positive, got {e!r}", "grid.extent")
    for n in n_points:
        if int(n) != n or n < 3:
            raise ConfigurationError(f"need at least 3 points per axis, got {n!r}", "grid.n_points")
    return Grid(dim, extent, tuple(int(n) for n in n_points))


@dataclass(frozen=True, eq=False)
class Field:
    """Real values on the nodes of a grid. Values are read-only and finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != self.grid.size:
                raise ConfigurationError(f"{v.size} values for a grid of {self.grid.size} nodes")
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __add__(self, other):
        return self.with_values(self.values + _raw(other, self.grid))

    def __sub__(self, other):
        return self.with_values(self.values - _raw(other, self.grid))

    def __mul__(self, other):
        return self.with_values(self.values * _raw(other, self.grid))

    __rmul__ = __mul__
    __radd__ = __add__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _raw(other, grid: Grid):
    if isinstance(other, Field):
        check_same_grid(grid, other.grid)
        return other.values
    return other


def check_same_grid(a: Grid, b: Grid) -> None:
    if a is not b and a != b:
        raise ConfigurationError(f"grid mismatch: {a} vs {b}")


def integrate(field: Field) -> float:
    """Trapezoid quadrature of a field over the domain."""
    return float(np.sum(field.grid.weights * field.values))


def l2_norm(field: Field) -> float:
    return float(np.sqrt(np.sum(field.grid.weights * field.values**2)))


def gradient(field: Field) -> Sequence[np.ndarray]:
    """Centered differences inside, one-sided first-order at the boundary."""
    g = np.gradient(field.values, *field.grid.spacing, edge_order=1)
    return [g] if field.grid.dim == 1 else g


def h1_seminorm(field: Field) -> float:
    w = field.grid.weights
    return float(np.sqrt(sum(np.sum(w * g**2) for g in gradient(field))))
