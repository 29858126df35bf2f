"""Closed-loop simulations: full ESC loop, averaged error system, and the
PDE-free baseline loop.

Per step the full loop measures the map input (spatial integral of the
actuator field), evaluates the unknown map, demodulates gradient/curvature
estimates, computes the smoothed control, integrates the input estimate,
and drives the actuator boundary with estimate + dither.  All runs are
fixed-step and deterministic: identical configuration reproduces bit
identical trajectories.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .controller import (
    ControllerState,
    GainConfig,
    check_gain,
    integrate_theta_hat,
    make_kernel,
    realtime_control,
)
from .dither import DitherParams, design_dither, dither_signal, gradient_demod, hessian_demod
from .filters import HIGH_PASS, LOW_PASS, FirstOrderFilter, estimate_gradient, estimate_hessian
from .heat import Grid, SolverConfig, integrate_profile, make_field, spatial_integral, step

__all__ = [
    "StaticMap",
    "ScenarioConfig",
    "TrajectoryRecord",
    "FieldHistory",
    "AverageRecord",
    "SimulationDiverged",
    "evaluate_map",
    "run_esc",
    "run_average_system",
    "run_standard_esc",
    "save_trajectory_csv",
    "save_field_csv",
    "save_average_csv",
]

TRAJECTORY_COLUMNS = "t,theta,Theta,y,U,G_hat,H_hat,S,vartheta"


class SimulationDiverged(RuntimeError):
    """A loop signal went non-finite; carries the failing step index."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class StaticMap:
    """Unknown quadratic objective y = y_star + (H/2)*(Theta - theta_star)^2."""

    y_star: float
    theta_star: float
    H: float

    def validate(self) -> None:
        if not (self.H < 0.0 and math.isfinite(self.H)):
            raise ValueError(f"map curvature must be negative (maximum sought), got {self.H}")


def evaluate_map(m: StaticMap, Theta: float):
    """Quadratic map output at the given input."""
    return m.y_star + 0.5 * m.H * (np.asarray(Theta, dtype=float) - m.theta_star) ** 2


@dataclass
class ScenarioConfig:
    """Everything one closed-loop run needs.

    The actuator diffusion coefficient is fixed at 1 for ESC runs: the
    dither design constants are only valid there, so other values are
    rejected rather than silently mis-probing the map.
    """

    map: StaticMap
    dither: DitherParams
    gains: GainConfig
    solver: SolverConfig
    grid: Grid
    T_final: float
    initial_theta_hat: float = 0.0
    initial_alpha: object = None          # array, callable of x, or None (zeros)
    record_every: int = 10
    snapshot_every: int = 0               # 0 disables field snapshots
    washout_corner: float = 1.0
    hessian_corner: float = 1.0
    diffusion: float = 1.0

    def validate(self) -> None:
        self.map.validate()
        self.dither.validate()
        self.solver.validate()
        if self.T_final <= 0.0:
            raise ValueError(f"run duration must be > 0, got {self.T_final}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if abs(self.grid.L - self.dither.L) > 1e-12 * max(1.0, abs(self.grid.L)):
            raise ValueError(
                f"grid length {self.grid.L} and dither length {self.dither.L} disagree"
            )
        if self.washout_corner <= 0.0 or self.hessian_corner <= 0.0:
            raise ValueError("estimator corner frequencies must be > 0")


@dataclass
class TrajectoryRecord:
    """Sampled closed-loop signals; columns match the trajectory CSV."""

    t: np.ndarray
    theta: np.ndarray      # actuator boundary command
    Theta: np.ndarray      # map input (spatial integral of the field)
    y: np.ndarray          # map output
    U: np.ndarray          # control signal
    G_hat: np.ndarray      # gradient estimate
    H_hat: np.ndarray      # curvature estimate
    S: np.ndarray          # boundary dither
    vartheta: np.ndarray   # propagated tracking error Theta - a sin(omega t) - theta_star
    field_history: "FieldHistory | None" = None


@dataclass
class FieldHistory:
    """Field snapshots for surface plots / CSV export."""

    t: np.ndarray          # (m,)
    x: np.ndarray          # (n,)
    alpha: np.ndarray      # (m, n)


@dataclass
class AverageRecord:
    """Sampled averaged error system: scalar error, field profiles, norms."""

    t: np.ndarray
    vartheta: np.ndarray
    U: np.ndarray
    Z: np.ndarray
    u_norm: np.ndarray     # sqrt(integral of u^2)
    Omega: np.ndarray      # vartheta^2 + integral of u^2
    u: np.ndarray          # (m, n) field profiles, boundary entry = same-time control
    grid: Grid
    K_bar: float


def _as_initial(initial, grid: Grid) -> np.ndarray:
    if initial is None:
        return np.zeros(grid.n)
    if callable(initial):
        return np.asarray(initial(grid.nodes()), dtype=float) * np.ones(grid.n)
    arr = np.array(initial, dtype=float)
    if arr.shape != (grid.n,):
        raise ValueError(f"initial profile has shape {arr.shape}, expected ({grid.n},)")
    return arr


def run_esc(config: ScenarioConfig) -> TrajectoryRecord:
    """Run the full extremum-seeking loop with the diffusion actuator.

    Step ordering: measure -> estimate -> control -> integrate the input
    estimate -> apply boundary -> advance the PDE; the control at time t is
    a function of signals at time t only.
    """
    config.validate()
    if abs(config.diffusion - 1.0) > 1e-12:
        raise ValueError(
            f"ESC scenarios require diffusion coefficient 1 (got {config.diffusion}); "
            "the dither design constants are only valid there"
        )
    if config.dither.a == 0.0:
        warnings.warn(
            "dither amplitude is zero: the loop cannot estimate gradients without "
            "excitation", RuntimeWarning,
        )
    check_gain(config.gains.K_bar, config.grid.L)

    dith = config.dither
    design = design_dither(dith)
    dt = config.solver.dt
    n_steps = round(config.T_final / dt)
    t_all = np.arange(n_steps + 1) * dt

    # periodic signals for the whole run (pure functions of time)
    S_all = dither_signal(design, t_all)
    asin_all = dith.a * np.sin(dith.omega * t_all)

    fld = make_field(config.grid, initial=_as_initial(config.initial_alpha, config.grid),
                     diffusion=config.diffusion)
    washout_g = FirstOrderFilter(HIGH_PASS, config.washout_corner, dt)
    washout_h = FirstOrderFilter(HIGH_PASS, config.washout_corner, dt)
    smoother = FirstOrderFilter(LOW_PASS, config.hessian_corner, dt)
    ctrl = ControllerState(
        theta_hat=config.initial_theta_hat,
        T_filter=FirstOrderFilter(LOW_PASS, config.gains.c, dt),
        gains=config.gains,
        L=config.grid.L,
    )
    estimating = dith.a > 0.0

    rows = []
    snaps_t, snaps_alpha = [], []
    for k in range(n_steps + 1):
        t = t_all[k]
        Theta = spatial_integral(fld)
        y = float(evaluate_map(config.map, Theta))
        if estimating:
            G_hat = estimate_gradient(y, t, dith, washout_g)
            H_hat = estimate_hessian(washout_h.step(y), t, dith, smoother)
        else:
            G_hat = H_hat = 0.0
        U = realtime_control(ctrl, G_hat, H_hat, Theta, t, dith)
        if not (math.isfinite(Theta) and math.isfinite(y) and math.isfinite(U)):
            raise SimulationDiverged(
                f"non-finite signal at step {k} (t={t:.6g}): Theta={Theta}, y={y}, U={U}",
                step_index=k,
            )
        if k % config.record_every == 0:
            rows.append((
                t,
                ctrl.theta_hat + S_all[k],                 # boundary command
                Theta, y, U, G_hat, H_hat, S_all[k],
                Theta - asin_all[k] - config.map.theta_star,
            ))
        if config.snapshot_every and k % config.snapshot_every == 0:
            snaps_t.append(t)
            snaps_alpha.append(fld.alpha.copy())
        if k == n_steps:
            break
        integrate_theta_hat(ctrl, U, dt)
        step(fld, ctrl.theta_hat + S_all[k + 1], config.solver)

    data = np.array(rows)
    history = None
    if snaps_t:
        history = FieldHistory(t=np.array(snaps_t), x=config.grid.nodes(),
                               alpha=np.array(snaps_alpha))
    return TrajectoryRecord(
        t=data[:, 0], theta=data[:, 1], Theta=data[:, 2], y=data[:, 3], U=data[:, 4],
        G_hat=data[:, 5], H_hat=data[:, 6], S=data[:, 7], vartheta=data[:, 8],
        field_history=history,
    )


def run_average_system(
    config: ScenarioConfig,
    initial_vartheta: float,
    initial_u=None,
    check_admissible: bool = True,
) -> AverageRecord:
    """Simulate the averaged error cascade under the averaged control law.

    The recorded field profiles carry the same-time control value at the
    boundary entry (the weight g vanishes there, so the transformed scalar
    is insensitive to it); the PDE step applies the control held over the
    step.  ``check_admissible=False`` allows sign-flipped gain probes.
    """
    config.solver.validate()
    K_bar = config.gains.K_bar
    grid = config.grid
    kernel = make_kernel(K_bar, grid.L, check=check_admissible)
    dt = config.solver.dt
    n_steps = round(config.T_final / dt)

    fld = make_field(grid, initial=_as_initial(initial_u, grid), diffusion=config.diffusion)
    vartheta = float(initial_vartheta)
    x = grid.nodes()
    g_x = kernel.g(x)
    dx = grid.dx

    ts, vths, Us, Zs, unorms, omegas, profiles = [], [], [], [], [], [], []
    for k in range(n_steps + 1):
        Z = vartheta + integrate_profile(g_x * fld.alpha, dx)
        U = K_bar * Z
        if not (math.isfinite(vartheta) and math.isfinite(U)):
            raise SimulationDiverged(
                f"non-finite averaged state at step {k}: vartheta={vartheta}, U={U}",
                step_index=k,
            )
        consistent = fld.alpha.copy()
        consistent[-1] = U
        if k % config.record_every == 0:
            u_sq = integrate_profile(consistent**2, dx)
            ts.append(k * dt)
            vths.append(vartheta)
            Us.append(U)
            Zs.append(Z)
            unorms.append(math.sqrt(u_sq))
            omegas.append(vartheta**2 + u_sq)
            profiles.append(consistent)
        if k == n_steps:
            break
        vartheta += dt * integrate_profile(consistent, dx)
        step(fld, U, config.solver)

    return AverageRecord(
        t=np.array(ts), vartheta=np.array(vths), U=np.array(Us), Z=np.array(Zs),
        u_norm=np.array(unorms), Omega=np.array(omegas), u=np.array(profiles),
        grid=grid, K_bar=K_bar,
    )


def run_standard_esc(
    map_: StaticMap,
    dither: DitherParams,
    K: float,
    T: float,
    dt: float = 1e-3,
    initial_theta_hat: float = 0.0,
    record_every: int = 10,
) -> TrajectoryRecord:
    """PDE-free baseline loop: the map input is estimate + a*sin(omega*t)."""
    map_.validate()
    dither.validate()
    if K < 0.0:
        raise ValueError(f"adaptation gain must be >= 0, got {K}")
    if dt <= 0.0 or T <= 0.0:
        raise ValueError("dt and T must be > 0")
    n_steps = round(T / dt)
    theta_hat = float(initial_theta_hat)
    rows = []
    for k in range(n_steps + 1):
        t = k * dt
        S = dither.a * math.sin(dither.omega * t)
        Theta = theta_hat + S
        y = float(evaluate_map(map_, Theta))
        G_hat = float(gradient_demod(dither, t)) * y if dither.a > 0 else 0.0
        H_hat = float(hessian_demod(dither, t)) * y if dither.a > 0 else 0.0
        U = K * G_hat
        if k % record_every == 0:
            rows.append((t, Theta, Theta, y, U, G_hat, H_hat, S,
                         theta_hat - map_.theta_star))
        theta_hat += dt * U
    data = np.array(rows)
    return TrajectoryRecord(
        t=data[:, 0], theta=data[:, 1], Theta=data[:, 2], y=data[:, 3], U=data[:, 4],
        G_hat=data[:, 5], H_hat=data[:, 6], S=data[:, 7], vartheta=data[:, 8],
    )


def save_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """Write the trajectory with the fixed column set."""
    data = np.column_stack([
        record.t, record.theta, record.Theta, record.y, record.U,
        record.G_hat, record.H_hat, record.S, record.vartheta,
    ])
    np.savetxt(path, data, delimiter=",", header=TRAJECTORY_COLUMNS, comments="", fmt="%.12g")


def save_field_csv(history: FieldHistory, path) -> None:
    """Write field snapshots as long-format (t, x, alpha) rows."""
    m, n = history.alpha.shape
    data = np.column_stack([
        np.repeat(history.t, n),
        np.tile(history.x, m),
        history.alpha.reshape(-1),
    ])
    np.savetxt(path, data, delimiter=",", header="t,x,alpha", comments="", fmt="%.12g")


def save_average_csv(record: AverageRecord, path) -> None:
    """Write the averaged-system scalars (profiles are not serialized)."""
    data = np.column_stack([
        record.t, record.vartheta, record.U, record.Z, record.u_norm, record.Omega,
    ])
    np.savetxt(path, data, delimiter=",", header="t,vartheta,U,Z,u_norm,Omega",
               comments="", fmt="%.12g")
