"""Discrete nonlocal dispersal operator and Neumann Laplacian."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.signal import fftconvolve

from .errors import ConfigurationError
from .grid import Field, Grid, check_same_grid
from .kernels import Kernel, boundary_mass, check_kernel_grid

# Dense direct quadrature is cheaper than FFT on small grids.
DIRECT_MAX_NODES = 1024


class NonlocalOperator:
    """``(K u)(x) = sum_y w_y J(x - y) (u(y) - u(x))`` over the grid nodes.

    ``strategy`` is ``"direct"`` (dense matrix), ``"fft"`` (zero-padded
    convolution) or ``"auto"``. Both compute the same quadrature sum.
    """

    def __init__(self, kernel: Kernel, grid: Grid, strategy: str = "auto"):
        check_kernel_grid(kernel, grid)
        if strategy == "auto":
            strategy = "direct" if grid.size <= DIRECT_MAX_NODES else "fft"
        if strategy not in ("direct", "fft"):
            raise ConfigurationError(f"unknown strategy {strategy!r}", "operators.strategy")
        self.kernel = kernel
        self.grid = grid
        self.strategy = strategy
        A, self.min_mass = boundary_mass(kernel, grid)
        self.mass = A.values
        self._matrix = _direct_matrix(kernel, grid) if strategy == "direct" else None

    def convolve(self, values: np.ndarray) -> np.ndarray:
        """``sum_y w_y J(x - y) u(y)`` for raw node values."""
        if self._matrix is not None:
            return (self._matrix @ values.ravel()).reshape(self.grid.shape)
        return fftconvolve(self.grid.weights * values, self.kernel.table, mode="same")

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        return self.convolve(values) - self.mass * values

    def apply(self, u: Field) -> Field:
        check_same_grid(self.grid, u.grid)
        return Field(self.grid, self.apply_array(u.values))

    def dense_matrix(self) -> np.ndarray:
        """Matrix of ``K`` acting on flattened node values."""
        W = self._matrix if self._matrix is not None else _direct_matrix(self.kernel, self.grid)
        return W - np.diag(self.mass.ravel())

    @property
    def row_sum_bound(self) -> float:
        """Max absolute row sum of ``K`` (``2 max A``): a Lipschitz bound in the sup norm."""
        return 2.0 * float(self.mass.max())

    @property
    def continuum_bound(self) -> float:
        """``|Omega| ||J||_inf + 1``: bound on the L2 bilinear form."""
        return self.grid.measure * self.kernel.sup_norm + 1.0


def _direct_matrix(kernel: Kernel, grid: Grid) -> np.ndarray:
    idx = np.indices(grid.shape).reshape(grid.dim, -1)
    K = np.asarray(kernel.half_width)[:, None, None]
    diff = idx[:, :, None] - idx[:, None, :]
    inside = np.all(np.abs(diff) <= K, axis=0)
    lookup = tuple(np.where(inside, d + k, 0) for d, k in zip(diff, K[:, 0, 0]))
    J = np.where(inside, kernel.table[lookup], 0.0)
    return J * grid.weights.ravel()[None, :]


def _neumann_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    # reflecting ghost node: u_{-1} = u_1, u_n = u_{n-2}
    upper[0] = 2.0
    lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / h**2


@dataclass(eq=False)
class NeumannLaplacian:
    """Second-order Laplacian with homogeneous Neumann condition via reflection.

    ``stencil`` is the unscaled matrix on flattened node values; ``apply``
    multiplies by the diffusion coefficient ``d``.
    """

    grid: Grid
    d: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.d) or self.d <= 0:
            raise ConfigurationError(f"diffusion coefficient must be positive, got {self.d!r}", "model.d2")
        mats = [_neumann_1d(n, h) for n, h in zip(self.grid.n_points, self.grid.spacing)]
        if self.grid.dim == 1:
            self.stencil = mats[0]
        else:
            nx, ny = self.grid.n_points
            self.stencil = (sp.kron(mats[0], sp.identity(ny)) + sp.kron(sp.identity(nx), mats[1])).tocsr()

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        return self.d * (self.stencil @ values.ravel()).reshape(self.grid.shape)

    def apply(self, u: Field) -> Field:
        check_same_grid(self.grid, u.grid)
        return Field(self.grid, self.apply_array(u.values))

    @cached_property
    def banded(self) -> np.ndarray:
        """Unscaled 1D stencil in ``scipy.linalg.solve_banded`` (1, 1) layout."""
        if self.grid.dim != 1:
            raise ConfigurationError("banded layout only exists for 1D grids")
        n = self.grid.n_points[0]
        ab = np.zeros((3, n))
        S = self.stencil
        ab[0, 1:] = S.diagonal(1)
        ab[1] = S.diagonal(0)
        ab[2, :-1] = S.diagonal(-1)
        ab.setflags(write=False)
        return ab


def apply_nonlocal(op: NonlocalOperator, u: Field) -> Field:
    return op.apply(u)


def apply_laplacian(op: NeumannLaplacian, u: Field) -> Field:
    return op.apply(u)


def pairing(u: Field, v: Field) -> float:
    """Quadrature inner product ``sum w u v``."""
    check_same_grid(u.grid, v.grid)
    return float(np.sum(u.grid.weights * u.values * v.values))


@dataclass(eq=False)
class SpatialOperators:
    """The pair of spatial operators a simulation needs, on one grid."""

    nonlocal_op: NonlocalOperator
    laplacian: NeumannLaplacian

    def __post_init__(self):
        check_same_grid(self.nonlocal_op.grid, self.laplacian.grid)

    @property
    def grid(self) -> Grid:
        return self.nonlocal_op.grid


def build_operators(grid: Grid, kernel: Kernel, d2: float = 1.0, strategy: str = "auto") -> SpatialOperators:
    return SpatialOperators(NonlocalOperator(kernel, grid, strategy), NeumannLaplacian(grid, d2))
