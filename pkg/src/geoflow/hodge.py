"""Poisson solves, Hodge decomposition and harmonic 1-forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import IncompatibleRHS, NoConvergence
from .fields import (
    OneFormField,
    ScalarField,
    TwoFormField,
    _same_grid,
    d0,
    d1,
    delta1,
    derivative_symbol,
    div,
    fft_workers,
    flat_g,
    grad,
    inner_product,
    laplacian0,
    norm,
    partial,
    sharp_g,
)

SOLVE_RTOL = 1e-12


def _null_components(b):
    """Components of ``b`` along the four grid-level null modes of the
    discrete gradient: constants and the x/y/xy checkerboards."""
    n = b.shape[0]
    s = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    modes = (np.ones((n, n)), np.outer(s, np.ones(n)), np.outer(np.ones(n), s), np.outer(s, s))
    return [(float(np.sum(b * m)) / (n * n), m) for m in modes]


def _preconditioner(a11, a12, a22, grid):
    sx = derivative_symbol(grid.n, grid.mode)[:, None]
    sy = derivative_symbol(grid.n, grid.mode, half=True)[None, :]
    symbol = a11.mean() * sx**2 + 2.0 * a12.mean() * sx * sy + a22.mean() * sy**2
    inv = np.zeros_like(symbol)
    mask = symbol > 1e-12 * symbol.max()
    inv[mask] = 1.0 / symbol[mask]
    shape = (grid.n, grid.n)

    def apply(r):
        spec = sfft.rfft2(r, workers=fft_workers())
        return sfft.irfft2(spec * inv, s=shape, workers=fft_workers())

    return apply


def poisson_solve(rhs, g, rtol=SOLVE_RTOL, maxiter=None, compatible=False):
    """Mean-zero solution ``f`` of ``laplacian0(f) = rhs``.

    Preconditioned conjugate gradients on the symmetric form
    ``-D_i(w g^ij D_j f) = w rhs`` with a constant-coefficient Fourier
    preconditioner. Raises ``IncompatibleRHS`` if ``int rhs mu != 0``, unless
    ``compatible`` is set because the caller built ``rhs`` as a discrete
    divergence (then any mean is round-off and is dropped).
    """
    grid = _same_grid(rhs, g)
    w = g.sqrt_det
    b = w * rhs.values
    scale = float(np.sum(np.abs(b)))
    if not compatible and abs(float(np.sum(b))) > 1e-10 * max(scale, 1e-300):
        raise IncompatibleRHS(f"right-hand side has nonzero mean (int rhs mu = {np.sum(b) * grid.cell_area:.3e})")
    for c, m in _null_components(b):
        b = b - c * m
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return ScalarField(grid, np.zeros_like(b))

    a11, a12, a22 = w * g.inv11, w * g.inv12, w * g.inv22

    def A(u):
        ux = partial(u, 0, grid)
        uy = partial(u, 1, grid)
        return -(partial(a11 * ux + a12 * uy, 0, grid) + partial(a12 * ux + a22 * uy, 1, grid))

    M = _preconditioner(a11, a12, a22, grid)
    maxiter = 10 * grid.n**2 if maxiter is None else maxiter

    u = np.zeros_like(b)
    r = b.copy()
    z = M(r)
    p = z.copy()
    rz = float(np.sum(r * z))
    for _ in range(maxiter):
        Ap = A(p)
        alpha = rz / float(np.sum(p * Ap))
        u += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= rtol * bnorm:
            break
        z = M(r)
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise NoConvergence(f"conjugate gradients did not reach rtol={rtol:g} in {maxiter} iterations")

    for c, m in _null_components(u)[1:]:
        u = u - c * m
    u = u - float(np.sum(u * w)) / float(np.sum(w))
    return ScalarField(grid, u)


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    metric: object
    beta: tuple
    gram: np.ndarray

    def __iter__(self):
        return iter(self.beta)

    def __getitem__(self, i):
        return self.beta[i]


def periods(phi):
    """Integrals of a 1-form over the x-cycle (y = 0) and the y-cycle (x = 0)."""
    h = phi.grid.h
    return float(np.sum(phi.comp_x[:, 0]) * h), float(np.sum(phi.comp_y[0, :]) * h)


def _closed_representatives(grid):
    one = np.ones((grid.n, grid.n))
    zero = np.zeros((grid.n, grid.n))
    return OneFormField(grid, one, zero), OneFormField(grid, zero.copy(), one.copy())


def harmonic_basis(g):
    """L2-orthonormal basis of harmonic 1-forms built from ``dx`` and ``dy``.

    Each representative ``e`` is corrected by ``d f`` with
    ``laplacian0(f) = -delta1(e)``; the pair is then Gram-Schmidt
    orthonormalised starting from the ``dx`` class.
    """
    grid = g.grid
    raw = []
    for e in _closed_representatives(grid):
        f = poisson_solve(-delta1(e, g), g, compatible=True)
        raw.append(e + d0(f))
    b1 = raw[0] / norm(raw[0], g)
    b2 = raw[1] - inner_product(raw[1], b1, g) * b1
    b2 = b2 / norm(b2, g)
    beta = (b1, b2)
    gram = np.array([[inner_product(a, b, g) for b in beta] for a in beta])
    return HarmonicBasis(g, beta, gram)


def harmonic_part(phi, basis):
    g = basis.metric
    out = OneFormField.zeros(phi.grid)
    for b in basis:
        out = out + inner_product(phi, b, g) * b
    return out


def exact_part(phi, g):
    """``(d f, f)`` with ``d f`` the L2 projection of ``phi`` onto exact forms."""
    f = poisson_solve(delta1(phi, g), g, compatible=True)
    return d0(f), f


def project_closed(phi, g, basis=None):
    """Orthogonal projection onto ``ker d`` = exact + harmonic."""
    basis = harmonic_basis(g) if basis is None else basis
    exact, _ = exact_part(phi, g)
    return exact + harmonic_part(phi, basis)


@dataclass(frozen=True, eq=False)
class HodgeSplit:
    exact: OneFormField
    coexact: OneFormField
    harmonic: OneFormField
    f: ScalarField
    a: TwoFormField

    def parts(self):
        return (self.exact, self.coexact, self.harmonic)


def hodge_decompose(phi, g, basis=None):
    """Split ``phi = d f + delta a + h`` orthogonally."""
    basis = harmonic_basis(g) if basis is None else basis
    exact, f = exact_part(phi, g)
    harmonic = harmonic_part(phi, basis)
    coexact = phi - exact - harmonic
    # d1 delta2 (w u) = w laplacian0(u), so the 2-form potential comes from a scalar solve
    u = poisson_solve(ScalarField(phi.grid, d1(phi).density / g.sqrt_det), g, compatible=True)
    a = TwoFormField(phi.grid, u.values * g.sqrt_det)
    return HodgeSplit(exact, coexact, harmonic, f, a)


def project_divfree(W, g):
    """``W - grad q`` with ``laplacian0(q) = -div W``."""
    q = poisson_solve(-div(W, g), g, compatible=True)
    return W - grad(q, g)


def harmonic_coefficients(X, basis):
    """``c_i = <flat X, beta_i>``."""
    g = basis.metric
    phi = flat_g(X, g)
    return tuple(inner_product(phi, b, g) for b in basis)


def harmonic_vector_fields(basis):
    return tuple(sharp_g(b, basis.metric) for b in basis)


def harmonic_rank(g, candidates, tol=1e-8, basis=None):
    """Rank of the harmonic parts of closed ``candidates``.

    Returns ``(rank, residual)`` where ``residual`` is the largest norm left
    after removing the exact part and the span of the harmonic basis.
    """
    basis = harmonic_basis(g) if basis is None else basis
    hs = []
    residual = 0.0
    for phi in candidates:
        exact, _ = exact_part(phi, g)
        h = phi - exact
        hs.append(h)
        rest = h - harmonic_part(h, basis)
        residual = max(residual, norm(rest, g) / max(norm(phi, g), 1e-300))
    G = np.array([[inner_product(a, b, g) for b in hs] for a in hs])
    ev = np.linalg.eigvalsh(G)
    rank = int(np.sum(ev > tol * max(ev.max(), 1e-300)))
    return rank, residual


def poisson_residual(f, rhs, g):
    r = laplacian0(f, g) - rhs
    return norm(r, g) / max(norm(rhs, g), 1e-300)
