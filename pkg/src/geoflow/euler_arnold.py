"""Transposed adjoint operators and the geodesic (Euler-Arnold) integrator.

With the Lie algebra bracket taken as the negative of the vector field
bracket, the geodesic equation reads ``dX/dt = ad(X)^T X`` where the
transpose is restricted to the chosen subalgebra:

* ``full``: all vector fields,
  ``ad(X)^T X = -nabla_X X - (div X) X - 1/2 grad g(X, X)``;
* ``vol``: divergence-free fields, ``-nabla_X X - grad p`` with
  ``laplacian0(p) = div(nabla_X X)`` (incompressible Euler);
* ``sym``: symplectic fields, ``-sharp_omega P_closed flat_omega(nabla_X X +
  1/2 grad g(X, X))`` where ``P_closed`` is the Hodge projection onto closed
  1-forms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CFLViolation, NonFiniteState, NotDivergenceFree, NotSymplectic
from .fields import (
    VectorField,
    d1,
    dealias,
    div,
    flat_omega,
    grad,
    inner_product,
    norm,
    pairing,
    sharp_omega,
    ScalarField,
)
from .geometry import christoffels, cov_deriv_vec
from .hodge import harmonic_basis, harmonic_coefficients, project_closed, project_divfree, poisson_solve

GROUPS = ("full", "vol", "sym")
CONSTRAINT_TOL = 1e-8


def _half_grad_energy(X, g):
    return grad(ScalarField(X.grid, 0.5 * pairing(X, X, g)), g)


def adT_full(X, g, gamma=None):
    gamma = christoffels(g) if gamma is None else gamma
    return -cov_deriv_vec(X, X, gamma) - div(X, g) * X - _half_grad_energy(X, g)


def _scale(X, g):
    return max(1.0, norm(X, g))


def check_divfree(X, g, tol=CONSTRAINT_TOL):
    r = norm(div(X, g), g)
    if r > tol * _scale(X, g):
        raise NotDivergenceFree(f"||div X|| = {r:.3e} exceeds {tol:g}")


def check_symplectic(X, g, tol=CONSTRAINT_TOL):
    r = norm(d1(flat_omega(X, g)), g)
    if r > tol * _scale(X, g):
        raise NotSymplectic(f"||d flat_omega X|| = {r:.3e} exceeds {tol:g}")


def adT_vol(X, g, gamma=None, check=True):
    gamma = christoffels(g) if gamma is None else gamma
    if check:
        check_divfree(X, g)
    nxx = cov_deriv_vec(X, X, gamma)
    p = poisson_solve(div(nxx, g), g, compatible=True)
    return -nxx - grad(p, g)


def adT_sym(X, g, gamma=None, basis=None, check=True):
    gamma = christoffels(g) if gamma is None else gamma
    if check:
        check_symplectic(X, g)
    W = cov_deriv_vec(X, X, gamma) + _half_grad_energy(X, g)
    return -sharp_omega(project_closed(flat_omega(W, g), g, basis), g)


def _project_group(W, g, group, basis):
    if group == "full":
        return W
    if group == "vol":
        return project_divfree(W, g)
    return sharp_omega(project_closed(flat_omega(W, g), g, basis), g)


def geodesic_rhs(X, g, gamma=None, group="vol", basis=None, dealiased=True):
    """Right-hand side ``dX/dt`` of the geodesic equation for ``group``.

    In spectral mode the quadratic terms are 2/3-truncated before the group
    projection when ``dealiased`` is set.
    """
    if group not in GROUPS:
        raise ValueError(f"unknown group {group!r}")
    gamma = christoffels(g) if gamma is None else gamma
    grid = X.grid
    nxx = cov_deriv_vec(X, X, gamma)
    if group == "full":
        W = -nxx - div(X, g) * X - _half_grad_energy(X, g)
    elif group == "vol":
        W = -nxx
    else:
        W = -nxx - _half_grad_energy(X, g)
    if dealiased and grid.mode == "spectral":
        W = VectorField(grid, dealias(W.comp_x, grid), dealias(W.comp_y, grid))
    return _project_group(W, g, group, basis)


# ---------------------------------------------------------------- integrator


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    group: str = "sym"
    reproject_every: int = 10
    record_every: int = 10
    dealiased: bool = True
    cfl: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}")
        if self.reproject_every < 0 or self.record_every < 1:
            raise ValueError("reproject_every must be >= 0 and record_every >= 1")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True, eq=False)
class GeodesicState:
    t: float
    X: VectorField
    step: int = 0
    energy: float = float("nan")
    div_norm: float = float("nan")
    harmonic_coeffs: tuple = (float("nan"), float("nan"))


@dataclass(eq=False)
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: GeodesicState | None = None
    max_div_before_reproject: float = 0.0

    def times(self):
        return np.array([r.t for r in self.records])

    def energies(self):
        return np.array([r.energy for r in self.records])

    def coeffs(self):
        return np.array([r.harmonic_coeffs for r in self.records])

    def div_norms(self):
        return np.array([r.div_norm for r in self.records])

    def energy_drift(self):
        e = self.energies()
        return float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300))

    def max_harmonic(self):
        return float(np.max(np.abs(self.coeffs())))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy", "div_norm", "c1", "c2"])
            for r in self.records:
                w.writerow([repr(r.t), repr(r.energy), repr(r.div_norm), repr(r.harmonic_coeffs[0]), repr(r.harmonic_coeffs[1])])


class _Context:
    """Per-run cached geometry: Christoffels and the harmonic basis."""

    def __init__(self, g, gamma=None, basis=None):
        self.g = g
        self.gamma = christoffels(g) if gamma is None else gamma
        self.basis = harmonic_basis(g) if basis is None else basis


def diagnose(state, g, basis):
    X = state.X
    return replace(
        state,
        energy=0.5 * inner_product(X, X, g),
        div_norm=norm(div(X, g), g),
        harmonic_coeffs=tuple(float(c) for c in harmonic_coefficients(X, basis)),
    )


def step(state, cfg, g, gamma=None, basis=None):
    """One classical RK4 step of size ``cfg.dt`` (no re-projection)."""
    ctx = _Context(g, gamma, basis)
    return _rk4(state, cfg, ctx)


def _rk4(state, cfg, ctx):
    g, dt = ctx.g, cfg.dt

    def rhs(X):
        return geodesic_rhs(X, g, ctx.gamma, cfg.group, ctx.basis, cfg.dealiased)

    X = state.X
    k1 = rhs(X)
    k2 = rhs(X + (0.5 * dt) * k1)
    k3 = rhs(X + (0.5 * dt) * k2)
    k4 = rhs(X + dt * k3)
    Xn = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return GeodesicState(t=state.t + dt, X=Xn, step=state.step + 1)


def cfl_limit(X, cfg):
    speed = X.max_speed()
    return np.inf if speed == 0.0 else cfg.cfl * X.grid.h / speed


def evolve(X0, cfg, g, gamma=None, basis=None, keep_snapshots=False):
    """Integrate the geodesic equation from ``X0`` up to ``cfg.t_end``.

    Diagnostics are recorded at step 0, every ``record_every`` steps and at
    the final step. For ``vol``/``sym`` the state is re-projected onto
    divergence-free fields every ``reproject_every`` steps.
    """
    ctx = _Context(g, gamma, basis)
    if cfg.group == "vol":
        check_divfree(X0, g)
    elif cfg.group == "sym":
        check_symplectic(X0, g)
    if cfg.dt > cfl_limit(X0, cfg):
        raise CFLViolation(f"dt={cfg.dt:g} exceeds CFL limit {cfl_limit(X0, cfg):.3e}", step=0)

    traj = Trajectory()
    state = diagnose(GeodesicState(0.0, X0), g, ctx.basis)
    traj.records.append(state)
    if keep_snapshots:
        traj.snapshots.append(state)
    n_steps = cfg.n_steps
    for k in range(1, n_steps + 1):
        state = _rk4(state, cfg, ctx)
        X = state.X
        if not X.is_finite():
            raise NonFiniteState("non-finite velocity", step=k)
        if cfg.dt > cfl_limit(X, cfg):
            raise CFLViolation("velocity grew beyond the CFL guard", step=k)
        if cfg.group != "full" and cfg.reproject_every and k % cfg.reproject_every == 0:
            traj.max_div_before_reproject = max(traj.max_div_before_reproject, norm(div(X, g), g))
            state = replace(state, X=project_divfree(X, g))
        if k % cfg.record_every == 0 or k == n_steps:
            state = diagnose(state, g, ctx.basis)
            traj.records.append(state)
            if keep_snapshots:
                traj.snapshots.append(state)
    traj.final = diagnose(state, g, ctx.basis)
    return traj


def harmonic_drift_rate(X, g, gamma=None, basis=None, group="sym"):
    """``d c_i / dt`` at the state ``X``: harmonic coefficients of the
    (undealiased) geodesic right-hand side."""
    basis = harmonic_basis(g) if basis is None else basis
    return harmonic_coefficients(geodesic_rhs(X, g, gamma, group, basis, dealiased=False), basis)
