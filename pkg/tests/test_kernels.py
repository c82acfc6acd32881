import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowfast.errors import ConfigurationError, ResolutionError
from slowfast.grid import build_grid
from slowfast.kernels import Kernel, boundary_mass, make_kernel, validate_kernel


@pytest.mark.parametrize(
    "preset, params",
    [
        ("smooth_bump", {"radius": 0.2}),
        ("tent", {"radius": 0.1}),
        ("gaussian_truncated", {"sigma": 0.04}),
        ("gaussian_truncated", {"sigma": 0.03, "truncation": 5}),
    ],
)
@pytest.mark.parametrize("dim", [1, 2])
def test_presets_have_unit_discrete_mass(preset, params, dim):
    g = build_grid(dim, 1.0, 101 if dim == 1 else 51)
    if dim == 2 and preset == "tent":
        params = {"radius": 0.15}
    k = make_kernel(preset, params, g)
    assert abs(k.mass() - 1.0) <= 1e-10
    rep = validate_kernel(k)
    assert rep.passed, rep.to_dict()
    assert k.table.shape == tuple(2 * kk + 1 for kk in k.half_width)


def test_bump_radius_02_matches_continuum_profile():
    # independent oracle: the continuum normalization of exp(1 - 1/(1 - s^2))
    from scipy.integrate import quad

    g = build_grid(1, 1.0, 201)
    k = make_kernel("smooth_bump", {"radius": 0.2}, g)
    Z, _ = quad(lambda r: np.exp(1 - 1 / (1 - (r / 0.2) ** 2)), -0.2, 0.2, epsabs=1e-14)
    # the discrete and continuum normalizations agree to quadrature accuracy
    assert k.center == pytest.approx(1.0 / Z, rel=1e-8)


def test_c1_flags_and_truncation_jump(grid101):
    assert make_kernel("smooth_bump", {"radius": 0.2}, grid101).c1
    assert not make_kernel("tent", {"radius": 0.2}, grid101).c1
    gk = make_kernel("gaussian_truncated", {"sigma": 0.05}, grid101)
    assert gk.c1
    assert gk.truncation_jump == pytest.approx(np.exp(-8.0))
    assert validate_kernel(gk).truncation_jump == gk.truncation_jump


def test_tent_below_three_cells_is_a_resolution_error():
    g = build_grid(1, 1.0, 101)
    with pytest.raises(ResolutionError):
        make_kernel("tent", {"radius": 0.005}, g)


@pytest.mark.parametrize(
    "preset, params, where",
    [
        ("smooth_bump", {"radius": 0.6}, "kernel.params"),
        ("gaussian_truncated", {"sigma": 0.05, "truncation": 3}, "kernel.params.truncation"),
        ("smooth_bump", {}, "kernel.params.radius"),
        ("smooth_bump", {"radius": -1.0}, "kernel.params.radius"),
        ("cauchy", {"radius": 0.2}, "kernel.preset"),
    ],
)
def test_invalid_kernel_specs(grid101, preset, params, where):
    with pytest.raises(ConfigurationError) as exc:
        make_kernel(preset, params, grid101)
    assert exc.value.field == where


def test_validation_flags_asymmetric_and_negative_tables():
    asym = Kernel.from_table([0.0, 1.0, 2.0, 3.0, 0.0], 0.1)
    rep = validate_kernel(asym)
    assert not rep.symmetry.passed
    assert rep.symmetry.residual == pytest.approx(2.0)
    neg = Kernel.from_table([-1.0, 4.0, 4.0, 4.0, -1.0], 0.1)
    rep = validate_kernel(neg)
    assert not rep.nonnegativity.passed and rep.nonnegativity.residual == 1.0
    assert rep.unit_mass.passed
    hole = Kernel.from_table([5.0, 0.0, 5.0], 0.1)
    assert not validate_kernel(hole).positive_at_zero.passed
    with pytest.raises(ConfigurationError):
        Kernel.from_table([1.0, 1.0], 0.1)


def test_boundary_mass(grid101):
    g = build_grid(1, 1.0, 201)
    k = make_kernel("smooth_bump", {"radius": 0.2}, g)
    A, mA = boundary_mass(k, g)
    x = g.axes[0]
    interior = (x > 0.2 + 1e-12) & (x < 0.8 - 1e-12)
    np.testing.assert_allclose(A.values[interior], 1.0, atol=1e-10)
    assert A.values[100] == pytest.approx(1.0, abs=1e-10)
    # at the wall the half-sum of an even table, with trapezoid half-weight on the centre
    assert A.values[0] == pytest.approx(0.5, abs=1e-12)
    assert mA == pytest.approx(0.5, abs=1e-12)
    assert np.all((A.values > 0) & (A.values <= 1 + 1e-12))


def test_kernel_grid_mismatch_is_rejected(grid101):
    k = make_kernel("smooth_bump", {"radius": 0.2}, grid101)
    with pytest.raises(ConfigurationError):
        boundary_mass(k, build_grid(1, 1.0, 51))


@settings(max_examples=25, deadline=None)
@given(radius=st.floats(0.05, 0.45), n=st.integers(41, 161))
def test_bump_mass_and_symmetry_property(radius, n):
    g = build_grid(1, 1.0, n)
    if radius < 3 * g.spacing[0]:
        with pytest.raises(ResolutionError):
            make_kernel("smooth_bump", {"radius": radius}, g)
        return
    k = make_kernel("smooth_bump", {"radius": radius}, g)
    rep = validate_kernel(k)
    assert rep.passed
    assert np.array_equal(k.table, k.table[::-1])
