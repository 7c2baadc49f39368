"""Levi-Civita connection, Killing operator and curvature on the grid.

Tensor components are stacked into arrays with the component indices first,
e.g. ``gamma[k, i, j]`` holds the Christoffel symbol with upper index ``k``
as an ``(n, n)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    OneFormField,
    ScalarField,
    VectorField,
    _same_grid,
    div,
    flat_g,
    inner_product,
    integrate,
    laplacian1,
    partial,
)


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    grid: object
    gamma: np.ndarray  # (2, 2, 2, n, n), symmetric in the last two component indices

    def component(self, k, i, j):
        return self.gamma[k, i, j]


@dataclass(frozen=True, eq=False)
class SymTensorField:
    grid: object
    T11: np.ndarray
    T12: np.ndarray
    T22: np.ndarray

    @classmethod
    def from_array(cls, grid, T):
        return cls(grid, T[0, 0], 0.5 * (T[0, 1] + T[1, 0]), T[1, 1])

    @classmethod
    def from_metric(cls, g):
        return cls(g.grid, g.g11.copy(), g.g12.copy(), g.g22.copy())

    def as_array(self):
        return np.array([[self.T11, self.T12], [self.T12, self.T22]])

    def __add__(self, other):
        return SymTensorField(self.grid, self.T11 + other.T11, self.T12 + other.T12, self.T22 + other.T22)

    def __sub__(self, other):
        return SymTensorField(self.grid, self.T11 - other.T11, self.T12 - other.T12, self.T22 - other.T22)

    def __mul__(self, c):
        c = c.values if isinstance(c, ScalarField) else c
        return SymTensorField(self.grid, c * self.T11, c * self.T12, c * self.T22)

    __rmul__ = __mul__

    def apply(self, X, Y):
        """``T(X, Y)`` as an array."""
        return (
            self.T11 * X.comp_x * Y.comp_x
            + self.T12 * (X.comp_x * Y.comp_y + X.comp_y * Y.comp_x)
            + self.T22 * X.comp_y * Y.comp_y
        )

    def trace(self, g):
        return g.inv11 * self.T11 + 2.0 * g.inv12 * self.T12 + g.inv22 * self.T22

    def norm_sq(self, g):
        """Pointwise ``g^ik g^jl T_ij T_kl``."""
        T = self.as_array()
        Ginv = g.upper()
        return np.einsum("ik...,jl...,ij...,kl...->...", Ginv, Ginv, T, T)


def _grad_array(a, grid):
    return np.array([partial(a, 0, grid), partial(a, 1, grid)])


def christoffels(g):
    """``Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``."""
    grid = g.grid
    G = g.lower()
    dG = np.array([[_grad_array(G[i, j], grid) for j in range(2)] for i in range(2)])
    # dG[i, j, l] = d_l g_ij
    lowered = 0.5 * (
        np.einsum("jli...->lij...", dG) + np.einsum("ilj...->lij...", dG) - np.einsum("ijl...->lij...", dG)
    )
    gamma = np.einsum("kl...,lij...->kij...", g.upper(), lowered)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, 1, 2))
    return ChristoffelField(grid, gamma)


def metric_compatibility_defect(g, gamma):
    """Max-norm of ``nabla_k g_ij``."""
    grid = g.grid
    G = g.lower()
    worst = 0.0
    for i in range(2):
        for j in range(2):
            for k in range(2):
                v = partial(G[i, j], k, grid)
                for l in range(2):
                    v = v - gamma.gamma[l, k, i] * G[l, j] - gamma.gamma[l, k, j] * G[i, l]
                worst = max(worst, float(np.max(np.abs(v))))
    return worst


def cov_deriv_vec(X, Y, gamma):
    """``(nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j``."""
    grid = _same_grid(X, Y)
    Xa = np.array([X.comp_x, X.comp_y])
    Ya = np.array([Y.comp_x, Y.comp_y])
    out = np.einsum("i...,ik...->k...", Xa, np.array([[partial(Ya[k], i, grid) for k in range(2)] for i in range(2)]))
    out = out + np.einsum("kij...,i...,j...->k...", gamma.gamma, Xa, Ya)
    return VectorField(grid, out[0], out[1])


def nabla_form(phi, gamma):
    """Full covariant derivative ``N[i, j] = nabla_i phi_j``."""
    grid = phi.grid
    P = np.array([phi.comp_x, phi.comp_y])
    N = np.array([[partial(P[j], i, grid) for j in range(2)] for i in range(2)])
    return N - np.einsum("kij...,k...->ij...", gamma.gamma, P)


def nabla_sym(phi, gamma):
    """``(nabla phi)^sym_ij = nabla_i phi_j + nabla_j phi_i``."""
    N = nabla_form(phi, gamma)
    return SymTensorField.from_array(phi.grid, N + np.swapaxes(N, 0, 1))


def nabla_skew(phi, gamma):
    """``nabla_x phi_y - nabla_y phi_x``, which equals the density of ``d phi``."""
    N = nabla_form(phi, gamma)
    return N[0, 1] - N[1, 0]


def tensor_norm(T, g):
    """L2 norm of a (0,2)-tensor array or SymTensorField."""
    if isinstance(T, SymTensorField):
        density = T.norm_sq(g)
    else:
        Ginv = g.upper()
        density = np.einsum("ik...,jl...,ij...,kl...->...", Ginv, Ginv, T, T)
    return float(np.sqrt(max(integrate(density, g), 0.0)))


def killing_tensor(Y, g, gamma):
    return nabla_sym(flat_g(Y, g), gamma)


def killing_defect(Y, g, gamma):
    """``|| (nabla flat Y)^sym ||_L2``; zero exactly for Killing fields."""
    return tensor_norm(killing_tensor(Y, g, gamma), g)


def lemma_tensor(Y, g, gamma):
    """``(nabla flat Y)^sym + (div Y) g``."""
    return killing_tensor(Y, g, gamma) + SymTensorField.from_metric(g) * div(Y, g)


def trace_identity_residual(Y, g, gamma):
    """Max-norm of ``tr_g[(nabla flat Y)^sym + (div Y) g] - 4 div Y`` (dimension 2)."""
    lhs = lemma_tensor(Y, g, gamma).trace(g)
    return float(np.max(np.abs(lhs - 4.0 * div(Y, g).values)))


def riemann(gamma):
    """``R^l_ijk`` with ``R(d_i, d_j) d_k = R^l_ijk d_l`` for
    ``R_{X,Y} = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]``.

    Returned with index layout ``R[l, i, j, k]``.
    """
    grid = gamma.grid
    G = gamma.gamma
    dG = np.array([[[_grad_array(G[l, j, k], grid) for k in range(2)] for j in range(2)] for l in range(2)])
    # dG[l, j, k, i] = d_i Gamma^l_jk
    R = np.einsum("ljki...->lijk...", dG) - np.einsum("likj...->lijk...", dG)
    R = R + np.einsum("lim...,mjk...->lijk...", G, G) - np.einsum("ljm...,mik...->lijk...", G, G)
    return R


def ricci(g, gamma):
    """Ricci tensor ``ric_jk = R^i_ijk``, positive on round spheres."""
    R = riemann(gamma)
    return SymTensorField.from_array(g.grid, np.einsum("iijk...->jk...", R))


def gauss_curvature(g, gamma, ric=None):
    ric = ricci(g, gamma) if ric is None else ric
    return ScalarField(g.grid, 0.5 * ric.trace(g))


def ricci_defect(g, gamma):
    """Max-norm of ``ric - K g``, which vanishes in dimension 2."""
    ric = ricci(g, gamma)
    K = gauss_curvature(g, gamma, ric)
    diff = ric - SymTensorField.from_metric(g) * K
    return float(max(np.max(np.abs(diff.T11)), np.max(np.abs(diff.T12)), np.max(np.abs(diff.T22))))


def ricci_pairing_field(ric, a, b, g):
    """Pointwise ``ric(sharp a, sharp b)`` for 1-forms ``a``, ``b``."""
    from .fields import sharp_g

    return ric.apply(sharp_g(a, g), sharp_g(b, g))


def bochner_terms(phi, g, gamma):
    """``(<Laplace phi, phi>, ||nabla phi||^2, int ric(phi, phi) mu)``."""
    lap = inner_product(laplacian1(phi, g), phi, g)
    grad_sq = tensor_norm(nabla_form(phi, gamma), g) ** 2
    ric_term = integrate(ricci_pairing_field(ricci(g, gamma), phi, phi, g), g)
    return lap, grad_sq, ric_term


def bochner_residual(phi, g, gamma):
    lap, grad_sq, ric_term = bochner_terms(phi, g, gamma)
    scale = inner_product(phi, phi, g)
    if scale == 0.0:
        return 0.0
    return abs(lap - grad_sq - ric_term) / scale


__all__ = [
    "ChristoffelField",
    "SymTensorField",
    "OneFormField",
    "bochner_residual",
    "bochner_terms",
    "christoffels",
    "cov_deriv_vec",
    "gauss_curvature",
    "killing_defect",
    "killing_tensor",
    "lemma_tensor",
    "metric_compatibility_defect",
    "nabla_form",
    "nabla_skew",
    "nabla_sym",
    "ricci",
    "ricci_defect",
    "ricci_pairing_field",
    "riemann",
    "tensor_norm",
    "trace_identity_residual",
]
