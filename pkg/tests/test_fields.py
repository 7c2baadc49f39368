import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_metric
from geoflow.errors import GridMismatch
from geoflow.fields import (
    GridSpec,
    MetricField,
    OneFormField,
    ScalarField,
    TwoFormField,
    VectorField,
    d0,
    d1,
    dealias,
    delta1,
    delta2,
    eval_expression,
    flat_g,
    flat_omega,
    inner_product,
    integrate,
    laplacian0,
    laplacian2,
    lie_bracket,
    norm,
    partial,
    rotate_J,
    sharp_g,
    sharp_omega,
    star0,
    star1,
    star2,
    trig_interpolate,
)

coef = st.floats(-1.0, 1.0, allow_nan=False)
coefs = st.lists(coef, min_size=4, max_size=4)


def trig_scalar(grid, c):
    x, y = grid.coords()
    return ScalarField(grid, c[0] * np.sin(x + 0.3) + c[1] * np.cos(2 * y) + c[2] * np.sin(x - y) + c[3] * np.cos(x + 2 * y))


def trig_form(grid, c):
    x, y = grid.coords()
    return OneFormField(grid, c[0] + c[1] * np.cos(y) + c[2] * np.sin(x + y), c[3] * np.sin(2 * x) + c[1] * np.cos(x - y))


@pytest.mark.parametrize("n, mode", [(15, "spectral"), (8, "spectral"), (32, "fd2")])
def test_gridspec_rejects_bad_input(n, mode):
    with pytest.raises(ValueError):
        GridSpec(n, mode)


def test_laplacian_sign_anchor(flat64, grid64):
    f = eval_expression("sin(x)", grid64)
    assert np.max(np.abs(laplacian0(f, flat64).values - f.values)) <= 1e-10


def test_spectral_derivative_exact_for_trig(grid64):
    x, y = grid64.coords()
    assert np.max(np.abs(partial(np.sin(3 * x) * np.cos(y), 0, grid64) - 3 * np.cos(3 * x) * np.cos(y))) < 1e-12
    assert np.max(np.abs(partial(np.sin(3 * x) * np.cos(y), 1, grid64) + np.sin(3 * x) * np.sin(y))) < 1e-12


def test_fd4_is_fourth_order():
    errs = []
    for n in (32, 64):
        grid = GridSpec(n, "fd4")
        x, _ = grid.coords()
        errs.append(np.max(np.abs(partial(np.sin(2 * x), 0, grid) - 2 * np.cos(2 * x))))
    assert errs[0] / errs[1] > 14.0


def test_nyquist_mode_is_annihilated(grid64):
    x, _ = grid64.coords()
    checker = np.cos(32 * x)
    assert np.max(np.abs(partial(checker, 0, grid64))) < 1e-12


@given(c1=coefs, c2=coefs)
def test_adjoint_d0_delta1(metric64, c1, c2):
    grid = metric64.grid
    f, phi = trig_scalar(grid, c1), trig_form(grid, c2)
    lhs = inner_product(d0(f), phi, metric64)
    rhs = inner_product(f, delta1(phi, metric64), metric64)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, norm(d0(f), metric64) * norm(phi, metric64))


@given(c1=coefs, c2=coefs)
def test_adjoint_d1_delta2(metric64, c1, c2):
    grid = metric64.grid
    phi, a = trig_form(grid, c1), TwoFormField(grid, trig_scalar(grid, c2).values)
    lhs = inner_product(d1(phi), a, metric64)
    rhs = inner_product(phi, delta2(a, metric64), metric64)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, norm(d1(phi), metric64) * norm(a, metric64))


@pytest.mark.parametrize("mode", ["spectral", "fd4"])
@given(c=coefs)
def test_d_squared_vanishes(mode, c):
    grid = GridSpec(32, mode)
    f = trig_scalar(grid, c)
    assert np.max(np.abs(d1(d0(f)).density)) <= 1e-12 * max(1.0, d0(f).max_abs())


@given(c=coefs)
def test_hodge_star_squares(metric64, c):
    grid = metric64.grid
    f, phi = trig_scalar(grid, c), trig_form(grid, c)
    assert (star2(star0(f, metric64), metric64) - f).max_abs() <= 1e-12 * max(1.0, f.max_abs())
    assert (star1(star1(phi, metric64), metric64) + phi).max_abs() <= 1e-12 * max(1.0, phi.max_abs())


def test_star_dx_is_dy(flat64, grid64):
    one, zero = np.ones((64, 64)), np.zeros((64, 64))
    s = star1(OneFormField(grid64, one, zero), flat64)
    assert np.allclose(s.comp_x, 0.0) and np.allclose(s.comp_y, 1.0)


def test_laplacian2_matches_scalar_laplacian(metric64):
    # d delta (w u) = w laplacian0(u)
    grid = metric64.grid
    u = trig_scalar(grid, [0.3, -0.7, 0.5, 0.2])
    w = metric64.sqrt_det
    lhs = laplacian2(TwoFormField(grid, w * u.values), metric64).density
    assert np.max(np.abs(lhs - w * laplacian0(u, metric64).values)) < 1e-10


def test_musical_maps_are_inverse(metric64):
    grid = metric64.grid
    phi = trig_form(grid, [0.2, 0.5, -0.4, 0.9])
    assert (flat_g(sharp_g(phi, metric64), metric64) - phi).max_abs() < 1e-13
    assert (flat_omega(sharp_omega(phi, metric64), metric64) - phi).max_abs() < 1e-13


def test_rotation_on_flat_torus(flat64, grid64):
    one, zero = np.ones((64, 64)), np.zeros((64, 64))
    Jdx = rotate_J(VectorField(grid64, one, zero), flat64)
    assert np.allclose(Jdx.comp_x, 0.0) and np.allclose(Jdx.comp_y, 1.0)


def test_rotation_squares_to_minus_one(metric64):
    grid = metric64.grid
    X = sharp_g(trig_form(grid, [0.1, 0.4, 0.8, -0.3]), metric64)
    assert (rotate_J(rotate_J(X, metric64), metric64) + X).max_abs() < 1e-12


def test_integrate_constant_gives_area(flat64):
    assert integrate(ScalarField.constant(flat64.grid, 1.0), flat64) == pytest.approx(4 * np.pi**2, rel=1e-14)


def test_conformal_area(conformal64):
    # int exp(0.4 cos x) dx dy = 4 pi^2 I0(0.4)
    from scipy.special import i0

    area = integrate(ScalarField.constant(conformal64.grid, 1.0), conformal64)
    assert area == pytest.approx(4 * np.pi**2 * i0(0.4), rel=1e-13)


def test_lie_bracket_known_pair(grid64):
    x, y = grid64.coords()
    z = np.zeros_like(x)
    X, Y = VectorField(grid64, np.sin(y), z), VectorField(grid64, z, np.sin(x))
    b = lie_bracket(X, Y)
    assert np.max(np.abs(b.comp_x + np.sin(x) * np.cos(y))) < 1e-12
    assert np.max(np.abs(b.comp_y - np.sin(y) * np.cos(x))) < 1e-12


@given(c1=coefs, c2=coefs)
def test_lie_bracket_antisymmetric(c1, c2):
    grid = GridSpec(32)
    X = VectorField(grid, trig_scalar(grid, c1).values, trig_scalar(grid, c2).values)
    Y = VectorField(grid, trig_scalar(grid, c2).values, -trig_scalar(grid, c1).values)
    assert (lie_bracket(X, Y) + lie_bracket(Y, X)).max_abs() < 1e-12


def test_metric_rejects_indefinite(grid64):
    one = np.ones((64, 64))
    with pytest.raises(ValueError):
        MetricField(grid64, one, 2 * one, one)


def test_grid_mismatch_raises():
    a = ScalarField.constant(GridSpec(16), 1.0)
    b = ScalarField.constant(GridSpec(32), 1.0)
    with pytest.raises(GridMismatch):
        a + b


def test_trig_interpolate_exact_for_band_limited():
    n = 32
    t = np.arange(n) * 2 * np.pi / n
    samples = np.cos(3 * t) + 0.5 * np.sin(7 * t)
    s = np.linspace(0, 2 * np.pi, 17)
    assert np.max(np.abs(trig_interpolate(samples, s) - (np.cos(3 * s) + 0.5 * np.sin(7 * s)))) < 1e-13


def test_dealias_removes_high_modes(grid64):
    x, y = grid64.coords()
    low, high = np.cos(3 * x + y), np.cos(25 * x)
    assert np.max(np.abs(dealias(low + high, grid64) - low)) < 1e-13


def test_general_metric_is_spd(general64):
    assert np.all(general64.det > 0)
