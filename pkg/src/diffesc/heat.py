"""1-D diffusion actuator on a uniform grid.

The field obeys  d/dt alpha = eps * d2/dx2 alpha  on [0, L] with an
insulated left end (zero flux at x=0, second-order mirror ghost node) and a
driven right end (Dirichlet value at x=L).  Implicit schemes solve one
tridiagonal system per step; operators are cached per (grid, dt, scheme)
so a long fixed-step run pays the setup cost once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "SCHEMES",
    "Grid",
    "SolverConfig",
    "ActuatorField",
    "OrderEstimate",
    "make_field",
    "step",
    "spatial_integral",
    "integrate_profile",
    "integration_weights",
    "field_norm_l2",
    "convergence_order",
]

SCHEMES = ("crank_nicolson", "implicit_euler", "explicit_euler")


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n nodes spanning [0, L], both boundaries included."""

    L: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.n}")
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ValueError(f"domain length must be > 0, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n)


@dataclass
class SolverConfig:
    dt: float
    scheme: str = "crank_nicolson"

    def validate(self) -> None:
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")


@dataclass
class ActuatorField:
    """Diffusion state alpha on a grid; alpha[-1] is the applied boundary value."""

    grid: Grid
    alpha: np.ndarray
    t: float = 0.0
    diffusion: float = 1.0

    def copy(self) -> "ActuatorField":
        return ActuatorField(self.grid, self.alpha.copy(), self.t, self.diffusion)


def make_field(grid: Grid, initial=None, diffusion: float = 1.0, t: float = 0.0) -> ActuatorField:
    """Build a field; ``initial`` is a profile array, a callable of x, or None (zeros)."""
    if initial is None:
        alpha = np.zeros(grid.n)
    elif callable(initial):
        alpha = np.asarray(initial(grid.nodes()), dtype=float) * np.ones(grid.n)
    else:
        alpha = np.array(initial, dtype=float)
        if alpha.shape != (grid.n,):
            raise ValueError(f"initial profile has shape {alpha.shape}, expected ({grid.n},)")
    if diffusion <= 0.0:
        raise ValueError(f"diffusion coefficient must be > 0, got {diffusion}")
    return ActuatorField(grid=grid, alpha=alpha, t=t, diffusion=diffusion)


@lru_cache(maxsize=64)
def _implicit_bands(m: int, r: float) -> np.ndarray:
    """Banded matrix (ab form) of I - r*Lap on the m non-Dirichlet nodes.

    Row 0 is the insulated end (mirror ghost: off-diagonal doubled); the last
    row couples to the Dirichlet node through the right-hand side instead.
    """
    ab = np.zeros((3, m))
    ab[0, 1:] = -r          # superdiagonal
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r         # subdiagonal
    ab[0, 1] = -2.0 * r     # mirror ghost at x=0
    return ab


def _explicit_laplacian(v: np.ndarray, boundary_old: float, dx: float) -> np.ndarray:
    lap = np.empty_like(v)
    lap[0] = 2.0 * (v[1] - v[0])
    lap[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    lap[-1] = v[-2] - 2.0 * v[-1] + boundary_old
    return lap / (dx * dx)


def step(field: ActuatorField, boundary_theta: float, config: SolverConfig) -> ActuatorField:
    """Advance the field by one time step, applying the new boundary value.

    The Dirichlet value enters at the new time level; Crank-Nicolson also
    keeps the previously applied value on the explicit side, preserving its
    second-order accuracy.  The field is updated in place and returned.
    """
    config.validate()
    if not math.isfinite(boundary_theta):
        raise ValueError(f"boundary value is not finite: {boundary_theta}")
    alpha = field.alpha
    if not np.all(np.isfinite(alpha)):
        bad = int(np.flatnonzero(~np.isfinite(alpha))[0])
        raise FloatingPointError(f"non-finite state at node {bad} (t={field.t:.6g})")

    dx = field.grid.dx
    eps = field.diffusion
    dt = config.dt
    r = eps * dt / (dx * dx)
    v = alpha[:-1]
    theta_old = alpha[-1]

    if config.scheme == "explicit_euler":
        if dt > dx * dx / (2.0 * eps):
            raise ValueError(
                f"explicit step unstable: dt={dt:.3g} exceeds dx^2/(2*eps)={dx*dx/(2*eps):.3g}"
            )
        v += dt * eps * _explicit_laplacian(v, theta_old, dx)
    elif config.scheme == "implicit_euler":
        rhs = v.copy()
        rhs[-1] += r * boundary_theta
        v[:] = solve_banded((1, 1), _implicit_bands(v.size, r), rhs, check_finite=False)
    else:  # crank_nicolson
        half = 0.5 * r
        rhs = np.empty_like(v)
        rhs[0] = (1.0 - r) * v[0] + r * v[1]
        rhs[1:-1] = v[1:-1] + half * (v[:-2] - 2.0 * v[1:-1] + v[2:])
        rhs[-1] = (1.0 - r) * v[-1] + half * (v[-2] + theta_old + boundary_theta)
        v[:] = solve_banded((1, 1), _implicit_bands(v.size, half), rhs, check_finite=False)

    alpha[-1] = boundary_theta
    field.t += dt
    return field


def integration_weights(n: int, dx: float, rule: str = "auto") -> np.ndarray:
    """Quadrature weights over the grid: composite trapezoid or Simpson.

    ``auto`` picks Simpson when the node count is odd (even panel count),
    trapezoid otherwise.
    """
    if rule == "auto":
        rule = "simpson" if n % 2 == 1 else "trapezoid"
    if rule == "trapezoid":
        w = np.full(n, dx)
        w[0] = w[-1] = 0.5 * dx
        return w
    if rule == "simpson":
        if n % 2 == 0:
            raise ValueError("Simpson weights need an odd number of nodes")
        w = np.full(n, 2.0 * dx / 3.0)
        w[1::2] = 4.0 * dx / 3.0
        w[0] = w[-1] = dx / 3.0
        return w
    raise ValueError(f"unknown quadrature rule {rule!r}")


def integrate_profile(values: np.ndarray, dx: float, rule: str = "auto") -> float:
    """Integral of grid values over the domain with the selected rule."""
    values = np.asarray(values, dtype=float)
    return float(integration_weights(values.size, dx, rule) @ values)


def spatial_integral(field: ActuatorField, rule: str = "auto") -> float:
    """Integral of the field over [0, L]; this is the input seen by the map."""
    return integrate_profile(field.alpha, field.grid.dx, rule)


def field_norm_l2(field: ActuatorField) -> float:
    """Discrete L2 norm sqrt(integral of alpha^2), trapezoid weights."""
    return math.sqrt(integrate_profile(field.alpha**2, field.grid.dx, rule="trapezoid"))


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    dxs: tuple
    errors: tuple
    inconclusive: bool
    note: str = ""


def convergence_order(
    exact,
    refinements,
    scheme: str = "crank_nicolson",
    L: float = 1.0,
    T: float = 0.5,
    diffusion: float = 1.0,
    error_floor: float = 1e-12,
) -> OrderEstimate:
    """Refinement study against an exact space-time solution.

    ``exact(x, t)`` supplies initial data, the boundary trace at x=L, and the
    reference at the final time.  Returns the least-squares slope of
    log(max error) vs log(dx) over the ``refinements`` list of (n, dt) pairs.
    """
    if len(refinements) < 3:
        raise ValueError("need at least 3 refinement levels")
    dxs, errors = [], []
    for n, dt in refinements:
        grid = Grid(L, n)
        nsteps = max(1, round(T / dt))
        dt_eff = T / nsteps  # land exactly on T
        cfg = SolverConfig(dt=dt_eff, scheme=scheme)
        fld = make_field(grid, initial=lambda x: exact(x, 0.0), diffusion=diffusion)
        for k in range(nsteps):
            step(fld, float(exact(L, (k + 1) * dt_eff)), cfg)
        err = float(np.max(np.abs(fld.alpha - exact(grid.nodes(), T))))
        dxs.append(grid.dx)
        errors.append(err)
    if max(errors) < error_floor:
        return OrderEstimate(
            order=float("nan"),
            dxs=tuple(dxs),
            errors=tuple(errors),
            inconclusive=True,
            note="errors at rounding floor",
        )
    slope = np.polyfit(np.log(dxs), np.log(errors), 1)[0]
    return OrderEstimate(order=float(slope), dxs=tuple(dxs), errors=tuple(errors), inconclusive=False)
