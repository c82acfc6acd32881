import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slowfast.errors import ConfigurationError
from slowfast.grid import build_grid
from slowfast.kernels import make_kernel
from slowfast.operators import NeumannLaplacian, NonlocalOperator, build_operators, pairing


def brute_force_form(op, u):
    """-1/2 sum_x sum_y w_x w_y J(x - y) (u(y) - u(x))^2 by explicit loops over node pairs."""
    g, k = op.grid, op.kernel
    w = g.weights.ravel()
    idx = np.indices(g.shape).reshape(g.dim, -1).T
    uu = u.ravel()
    hw = np.array(k.half_width)
    total = 0.0
    for a in range(g.size):
        for b in range(g.size):
            d = idx[b] - idx[a]
            if np.all(np.abs(d) <= hw):
                total += w[a] * w[b] * k.table[tuple(d + hw)] * (uu[b] - uu[a]) ** 2
    return -0.5 * total


@pytest.fixture(scope="module")
def op201():
    g = build_grid(1, 1.0, 201)
    return NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, g), g)


def test_constants_are_annihilated(op201):
    for c in (0.0, 1.0, -3.5):
        assert np.max(np.abs(op201.apply_array(np.full(201, c)))) <= 1e-12


def test_quadratic_form_matches_double_sum_oracle():
    g = build_grid(1, 1.0, 41)
    op = NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, g), g)
    rng = np.random.default_rng(3)
    for _ in range(3):
        u = rng.normal(size=41)
        form = float(np.sum(g.weights * u * op.apply_array(u)))
        assert form == pytest.approx(brute_force_form(op, u), rel=1e-12, abs=1e-14)


def test_quadratic_form_2d_matches_oracle():
    g = build_grid(2, 1.0, 15)
    op = NonlocalOperator(make_kernel("tent", {"radius": 0.3}, g), g)
    u = np.random.default_rng(4).normal(size=g.shape)
    form = float(np.sum(g.weights * u * op.apply_array(u)))
    assert form == pytest.approx(brute_force_form(op, u), rel=1e-12)


@pytest.mark.parametrize("dim, n", [(1, 201), (2, 33)])
def test_fft_matches_direct(dim, n):
    g = build_grid(dim, 1.0, n)
    k = make_kernel("gaussian_truncated", {"sigma": 0.05}, g)
    direct = NonlocalOperator(k, g, "direct")
    fft = NonlocalOperator(k, g, "fft")
    u = np.random.default_rng(0).uniform(size=g.shape)
    a, b = direct.apply_array(u), fft.apply_array(u)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_auto_strategy_threshold():
    small = build_grid(1, 1.0, 101)
    big = build_grid(2, 1.0, 41)
    assert NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, small), small).strategy == "direct"
    assert NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, big), big).strategy == "fft"
    with pytest.raises(ConfigurationError):
        NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, small), small, "spectral")


def test_dense_matrix_is_symmetric_in_weighted_inner_product(op201):
    K = op201.dense_matrix()
    W = np.diag(op201.grid.weights)
    np.testing.assert_allclose(W @ K, (W @ K).T, atol=1e-12)
    assert np.max(np.abs(K.sum(axis=1))) <= 1e-12
    assert op201.row_sum_bound == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("n", [51, 101, 201])
def test_laplacian_of_neumann_cosine_is_second_order(n):
    g = build_grid(1, 1.0, n)
    L = NeumannLaplacian(g)
    x = g.axes[0]
    err = np.max(np.abs(L.apply_array(np.cos(np.pi * x)) + np.pi**2 * np.cos(np.pi * x)))
    h = g.spacing[0]
    # leading truncation term pi^4 h^2 / 12
    assert err <= np.pi**4 * h**2 / 12 * 1.01


def test_laplacian_2d_separable_eigenfunction():
    g = build_grid(2, (1.0, 2.0), (81, 161))
    L = NeumannLaplacian(g, d=0.5)
    u = g.sample(lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y / 2))
    lam = -0.5 * (np.pi**2 + np.pi**2 / 4)
    assert np.max(np.abs(L.apply(u).values - lam * u.values)) <= 5e-3


def test_laplacian_conservation_and_symmetry():
    g = build_grid(1, 1.0, 31)
    L = NeumannLaplacian(g)
    S = L.stencil.toarray()
    W = np.diag(g.weights)
    np.testing.assert_allclose(W @ S, (W @ S).T, atol=1e-9)
    u = np.random.default_rng(1).normal(size=31)
    assert abs(np.sum(g.weights * L.apply_array(u))) <= 1e-9
    assert L.banded.shape == (3, 31)
    with pytest.raises(ValueError):
        L.banded[0, 0] = 1.0
    with pytest.raises(ConfigurationError):
        NeumannLaplacian(g, d=0.0)
    with pytest.raises(ConfigurationError):
        NeumannLaplacian(build_grid(2, 1.0, 5)).banded


def test_build_operators_and_pairing(grid101, bump101):
    ops = build_operators(grid101, bump101, 0.01)
    assert ops.grid is grid101
    assert ops.laplacian.d == 0.01
    u = grid101.constant(2.0)
    assert pairing(u, u) == pytest.approx(4.0)


@settings(max_examples=40, deadline=None)
@given(u=arrays(np.float64, 61, elements=st.floats(-1e3, 1e3)))
def test_both_operators_are_dissipative(u):
    g = build_grid(1, 1.0, 61)
    K = NonlocalOperator(make_kernel("smooth_bump", {"radius": 0.2}, g), g)
    L = NeumannLaplacian(g)
    scale = max(1.0, float(np.sum(g.weights * u**2)))
    assert np.sum(g.weights * u * K.apply_array(u)) <= 1e-12 * scale
    assert np.sum(g.weights * u * L.apply_array(u)) <= 1e-9 * scale
