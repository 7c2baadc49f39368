"""Periodic grid, sampled fields and exterior calculus on the 2-torus.

All fields live on an ``n x n`` grid over ``[0, 2pi)^2`` with arrays indexed
``[i, j]`` for the node ``(x_i, y_j) = (i h, j h)``. Axis 0 is ``x`` and axis 1
is ``y``.

Conventions
-----------
* 1-forms store covariant components ``phi = phi_x dx + phi_y dy``.
* 2-forms store the coordinate density ``a`` of ``a dx^dy``.
* ``mu = sqrt(det g) dx^dy`` and the symplectic form is ``omega = mu``.
* ``flat_omega(X) = i_X omega`` and ``sharp_omega`` is its inverse, which
  equals ``-J sharp_g`` for the rotation ``J`` defined by
  ``g(X, Y) = omega(X, JY)``.
* The codifferentials are the exact adjoints of the discrete ``d`` under the
  quadrature inner products, so the Laplacian is positive semi-definite
  (``laplacian0(sin x) = sin x`` on the flat torus).

Discrete first derivatives are either Fourier pseudo-spectral (Nyquist mode
zeroed) or fourth-order central differences. Both are real antisymmetric
circulant operators, which is what makes the adjoint identities exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch

TWO_PI = 2.0 * np.pi
MODES = ("spectral", "fd4")


def fft_workers():
    """Thread cap for transforms, read from ``GEOFLOW_THREADS``."""
    try:
        return max(1, int(os.environ.get("GEOFLOW_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    n: int
    mode: str = "spectral"

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown differentiation mode {self.mode!r}")

    @property
    def h(self):
        return TWO_PI / self.n

    @property
    def axis(self):
        return np.arange(self.n) * self.h

    def coords(self):
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @property
    def cell_area(self):
        return self.h * self.h


@lru_cache(maxsize=None)
def derivative_symbol(n, mode, half=False):
    """Real symbol ``s(k)`` with ``D e^{ikx} = i s(k) e^{ikx}``.

    ``half`` selects the rfft frequency layout. The symbol vanishes at the
    Nyquist frequency in both modes.
    """
    k = sfft.rfftfreq(n, 1.0 / n) if half else sfft.fftfreq(n, 1.0 / n)
    if mode == "spectral":
        s = k.copy()
        s[np.abs(k) == n // 2] = 0.0
    else:
        h = TWO_PI / n
        s = (8.0 * np.sin(k * h) - np.sin(2.0 * k * h)) / (6.0 * h)
        s[np.abs(k) == n // 2] = 0.0
    s.flags.writeable = False
    return s


def partial(values, axis, grid):
    """Discrete partial derivative of a sampled array along ``axis`` (0=x, 1=y)."""
    if grid.mode == "fd4":
        h = grid.h
        r1 = np.roll(values, -1, axis) - np.roll(values, 1, axis)
        r2 = np.roll(values, -2, axis) - np.roll(values, 2, axis)
        return (8.0 * r1 - r2) / (12.0 * h)
    s = derivative_symbol(grid.n, grid.mode, half=True)
    shape = [1, 1]
    shape[axis] = s.size
    spec = sfft.rfft(values, axis=axis, workers=fft_workers())
    spec *= 1j * s.reshape(shape)
    return sfft.irfft(spec, n=grid.n, axis=axis, workers=fft_workers())


@lru_cache(maxsize=None)
def _dealias_mask(n):
    kx = np.abs(sfft.fftfreq(n, 1.0 / n))[:, None]
    ky = sfft.rfftfreq(n, 1.0 / n)[None, :]
    cut = n / 3.0
    return (kx <= cut) & (ky <= cut)


def dealias(values, grid):
    """2/3-rule truncation of a sampled array (identity in fd4 mode)."""
    if grid.mode != "spectral":
        return values
    spec = sfft.rfft2(values, workers=fft_workers())
    spec *= _dealias_mask(grid.n)
    return sfft.irfft2(spec, s=values.shape, workers=fft_workers())


def trig_interpolate(samples, t):
    """Evaluate the trigonometric interpolant of periodic ``samples`` on
    ``[0, 2pi)`` at the points ``t``; the Nyquist term is split evenly."""
    n = samples.size
    c = sfft.rfft(samples) / n
    k = np.arange(c.size)
    w = np.full(c.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(t, k))
    return np.real(phase @ (w * c))


# ---------------------------------------------------------------- containers


class _Field:
    """Vector-space arithmetic shared by the field containers."""

    _parts_names: tuple = ()

    def _parts(self):
        return tuple(getattr(self, k) for k in self._parts_names)

    def _like(self, *parts):
        return type(self)(self.grid, *parts)

    def _check(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if other.grid != self.grid:
            raise GridMismatch(f"grid mismatch: {self.grid} vs {other.grid}")
        return other

    def _factor(self, c):
        if isinstance(c, ScalarField):
            if c.grid != self.grid:
                raise GridMismatch(f"grid mismatch: {self.grid} vs {c.grid}")
            return c.values
        if isinstance(c, (int, float, np.floating, np.integer)):
            return float(c)
        if isinstance(c, np.ndarray) and c.shape == (self.grid.n, self.grid.n):
            return c
        return NotImplemented

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._like(*(a + b for a, b in zip(self._parts(), other._parts())))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._like(*(a - b for a, b in zip(self._parts(), other._parts())))

    def __neg__(self):
        return self._like(*(-a for a in self._parts()))

    def __mul__(self, c):
        c = self._factor(c)
        if c is NotImplemented:
            return c
        return self._like(*(c * a for a in self._parts()))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def max_abs(self):
        return max(float(np.max(np.abs(a))) for a in self._parts())

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self._parts())


@dataclass(frozen=True, eq=False)
class ScalarField(_Field):
    grid: GridSpec
    values: np.ndarray

    _parts_names = ("values",)

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full((grid.n, grid.n), float(c)))


@dataclass(frozen=True, eq=False)
class OneFormField(_Field):
    grid: GridSpec
    comp_x: np.ndarray
    comp_y: np.ndarray

    _parts_names = ("comp_x", "comp_y")

    @classmethod
    def zeros(cls, grid):
        z = np.zeros((grid.n, grid.n))
        return cls(grid, z, z.copy())


@dataclass(frozen=True, eq=False)
class TwoFormField(_Field):
    grid: GridSpec
    density: np.ndarray

    _parts_names = ("density",)


@dataclass(frozen=True, eq=False)
class VectorField(_Field):
    grid: GridSpec
    comp_x: np.ndarray
    comp_y: np.ndarray

    _parts_names = ("comp_x", "comp_y")

    @classmethod
    def zeros(cls, grid):
        z = np.zeros((grid.n, grid.n))
        return cls(grid, z, z.copy())

    def max_speed(self):
        """Largest coordinate speed, used by the CFL guard."""
        return float(np.max(np.hypot(self.comp_x, self.comp_y)))


@dataclass(frozen=True, eq=False)
class MetricField:
    """Pointwise symmetric positive definite metric ``g_ij``."""

    grid: GridSpec
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    metric_id: str = "custom"

    def __post_init__(self):
        n = self.grid.n
        for name in ("g11", "g12", "g22"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n, n):
                a = np.broadcast_to(a, (n, n)).copy()
            if not np.all(np.isfinite(a)):
                raise ValueError(f"metric component {name} has non-finite values")
            object.__setattr__(self, name, a)
        bad = (self.g11 <= 0) | (self.det <= 0)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValueError(f"metric is not positive definite at node ({i}, {j})")

    @classmethod
    def flat(cls, grid):
        one = np.ones((grid.n, grid.n))
        return cls(grid, one, np.zeros_like(one), one.copy(), metric_id="flat")

    @classmethod
    def conformal(cls, grid, phi, metric_id="conformal"):
        """``g = exp(2 phi) (dx^2 + dy^2)`` for a scalar field or array ``phi``."""
        phi = phi.values if isinstance(phi, ScalarField) else np.asarray(phi, dtype=float)
        e = np.exp(2.0 * phi)
        return cls(grid, e, np.zeros_like(e), e.copy(), metric_id=metric_id)

    @cached_property
    def det(self):
        return self.g11 * self.g22 - self.g12 * self.g12

    @cached_property
    def sqrt_det(self):
        return np.sqrt(self.det)

    @cached_property
    def inv11(self):
        return self.g22 / self.det

    @cached_property
    def inv12(self):
        return -self.g12 / self.det

    @cached_property
    def inv22(self):
        return self.g11 / self.det

    def lower(self):
        """Metric as an array ``G[i, j]`` of shape (2, 2, n, n)."""
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def upper(self):
        return np.array([[self.inv11, self.inv12], [self.inv12, self.inv22]])

    def volume_form(self):
        return TwoFormField(self.grid, self.sqrt_det.copy())

    symplectic_form = volume_form

    def is_flat(self, tol=1e-12):
        return (
            np.max(np.abs(self.g11 - 1.0)) <= tol
            and np.max(np.abs(self.g12)) <= tol
            and np.max(np.abs(self.g22 - 1.0)) <= tol
        )


def _same_grid(*fields):
    g0 = fields[0].grid
    for f in fields[1:]:
        if f.grid != g0:
            raise GridMismatch(f"grid mismatch: {g0} vs {f.grid}")
    return g0


# ---------------------------------------------------------------- expressions


def eval_expression(expr, grid):
    """Sample a field-expression string at the grid nodes."""
    from .fieldexpr import evaluate, parse

    return evaluate(parse(expr), grid)


# ---------------------------------------------------------------- calculus


def d0(f):
    g = f.grid
    return OneFormField(g, partial(f.values, 0, g), partial(f.values, 1, g))


def d1(phi):
    g = phi.grid
    return TwoFormField(g, partial(phi.comp_y, 0, g) - partial(phi.comp_x, 1, g))


def star0(f, g):
    _same_grid(f, g)
    return TwoFormField(f.grid, f.values * g.sqrt_det)


def star1(phi, g):
    _same_grid(phi, g)
    w = g.sqrt_det
    ux = g.inv11 * phi.comp_x + g.inv12 * phi.comp_y
    uy = g.inv12 * phi.comp_x + g.inv22 * phi.comp_y
    return OneFormField(phi.grid, -w * uy, w * ux)


def star2(alpha, g):
    _same_grid(alpha, g)
    return ScalarField(alpha.grid, alpha.density / g.sqrt_det)


def delta1(phi, g):
    """Codifferential on 1-forms, ``-(1/w) D_i(w g^ij phi_j)``."""
    grid = _same_grid(phi, g)
    w = g.sqrt_det
    fx = w * (g.inv11 * phi.comp_x + g.inv12 * phi.comp_y)
    fy = w * (g.inv12 * phi.comp_x + g.inv22 * phi.comp_y)
    return ScalarField(grid, -(partial(fx, 0, grid) + partial(fy, 1, grid)) / w)


def delta2(alpha, g):
    """Codifferential on 2-forms, adjoint of ``d1``."""
    grid = _same_grid(alpha, g)
    w = g.sqrt_det
    u = alpha.density / w
    vx = partial(u, 1, grid)
    vy = -partial(u, 0, grid)
    return OneFormField(
        grid,
        (g.g11 * vx + g.g12 * vy) / w,
        (g.g12 * vx + g.g22 * vy) / w,
    )


def laplacian0(f, g):
    return delta1(d0(f), g)


def laplacian1(phi, g):
    return d0(delta1(phi, g)) + delta2(d1(phi), g)


def laplacian2(alpha, g):
    return d1(delta2(alpha, g))


def sharp_g(phi, g):
    _same_grid(phi, g)
    return VectorField(
        phi.grid,
        g.inv11 * phi.comp_x + g.inv12 * phi.comp_y,
        g.inv12 * phi.comp_x + g.inv22 * phi.comp_y,
    )


def flat_g(X, g):
    _same_grid(X, g)
    return OneFormField(
        X.grid,
        g.g11 * X.comp_x + g.g12 * X.comp_y,
        g.g12 * X.comp_x + g.g22 * X.comp_y,
    )


def flat_omega(X, g):
    """``i_X omega`` with ``omega = mu``."""
    _same_grid(X, g)
    w = g.sqrt_det
    return OneFormField(X.grid, -w * X.comp_y, w * X.comp_x)


def sharp_omega(phi, g):
    _same_grid(phi, g)
    w = g.sqrt_det
    return VectorField(phi.grid, phi.comp_y / w, -phi.comp_x / w)


def rotate_J(X, g):
    """Metric rotation ``J`` with ``g(X, Y) = omega(X, JY)``; ``J d_x = d_y`` when flat."""
    return sharp_g(flat_omega(X, g), g)


def wedge11(phi, psi):
    _same_grid(phi, psi)
    return TwoFormField(phi.grid, phi.comp_x * psi.comp_y - phi.comp_y * psi.comp_x)


def pairing(a, b, g):
    """Pointwise metric pairing of two fields of the same kind, as an array."""
    _same_grid(a, b, g)
    if isinstance(a, ScalarField):
        return a.values * b.values
    if isinstance(a, OneFormField):
        return (
            g.inv11 * a.comp_x * b.comp_x
            + g.inv12 * (a.comp_x * b.comp_y + a.comp_y * b.comp_x)
            + g.inv22 * a.comp_y * b.comp_y
        )
    if isinstance(a, TwoFormField):
        return a.density * b.density / g.det
    if isinstance(a, VectorField):
        return (
            g.g11 * a.comp_x * b.comp_x
            + g.g12 * (a.comp_x * b.comp_y + a.comp_y * b.comp_x)
            + g.g22 * a.comp_y * b.comp_y
        )
    raise TypeError(f"no metric pairing for {type(a).__name__}")


_DEGREE = {ScalarField: 0, OneFormField: 1, TwoFormField: 2}


def integrate(f, g):
    """``sum f sqrt(det g) h^2``; accepts a ScalarField or a raw array."""
    values = f.values if isinstance(f, ScalarField) else f
    if isinstance(f, ScalarField):
        _same_grid(f, g)
    return float(np.sum(values * g.sqrt_det) * g.grid.cell_area)


def integrate_form(alpha):
    """Integral of a 2-form over the torus (no metric involved)."""
    return float(np.sum(alpha.density) * alpha.grid.cell_area)


def inner_product(a, b, g, degree=None):
    """L2 inner product ``int g(a, b) mu`` for forms or vector fields."""
    if type(a) is not type(b):
        raise TypeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    if degree is not None and _DEGREE.get(type(a)) != degree:
        raise TypeError(f"{type(a).__name__} is not a {degree}-form")
    return integrate(pairing(a, b, g), g)


def norm(a, g):
    return float(np.sqrt(max(inner_product(a, a, g), 0.0)))


def lie_bracket(X, Y):
    grid = _same_grid(X, Y)
    dXx = (partial(X.comp_x, 0, grid), partial(X.comp_x, 1, grid))
    dXy = (partial(X.comp_y, 0, grid), partial(X.comp_y, 1, grid))
    dYx = (partial(Y.comp_x, 0, grid), partial(Y.comp_x, 1, grid))
    dYy = (partial(Y.comp_y, 0, grid), partial(Y.comp_y, 1, grid))
    # grouped so that [X, X] cancels exactly
    bx = (X.comp_x * dYx[0] + X.comp_y * dYx[1]) - (Y.comp_x * dXx[0] + Y.comp_y * dXx[1])
    by = (X.comp_x * dYy[0] + X.comp_y * dYy[1]) - (Y.comp_x * dXy[0] + Y.comp_y * dXy[1])
    return VectorField(grid, bx, by)


def div(X, g):
    return -delta1(flat_g(X, g), g)


def grad(f, g):
    return sharp_g(d0(f), g)


def directional(f, X):
    """``X(f) = df(X)``."""
    grid = _same_grid(f, X)
    return ScalarField(
        grid, X.comp_x * partial(f.values, 0, grid) + X.comp_y * partial(f.values, 1, grid)
    )


def hamiltonian_field(f, g):
    """``sharp_omega(df)``."""
    return sharp_omega(d0(f), g)
