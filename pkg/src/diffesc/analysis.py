"""Numerical verification of the structural claims behind the controller.

Checks that can only be demonstrated, not asserted, at runtime: the
backstepping transformation really maps the averaged cascade onto the
stable target system, trajectories decay exponentially with a measurable
rate, and the residual optimization error scales with dither amplitude and
frequency at the predicted orders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import BacksteppingKernel
from .heat import Grid, integrate_profile, integration_weights
from .loop import AverageRecord, StaticMap, TrajectoryRecord

__all__ = [
    "TargetState",
    "TargetResiduals",
    "DecayFit",
    "ScalingFit",
    "to_target",
    "from_target",
    "target_residuals",
    "fit_decay",
    "late_time_residuals",
    "residual_scaling",
    "format_report",
]


@dataclass(frozen=True)
class TargetState:
    """Transformed coordinates: scalar Z and field w on the grid."""

    Z: float
    w: np.ndarray


def to_target(kernel: BacksteppingKernel, vartheta: float, u_profile: np.ndarray,
              grid: Grid, rule: str = "auto") -> TargetState:
    """Forward transformation (vartheta, u) -> (Z, w = u - gamma*Z)."""
    x = grid.nodes()
    Z = vartheta + integrate_profile(kernel.g(x) * u_profile, grid.dx, rule)
    w = u_profile - kernel.gamma(x) * Z
    return TargetState(Z=Z, w=w)


def from_target(kernel: BacksteppingKernel, target: TargetState, grid: Grid,
                rule: str = "auto") -> tuple[float, np.ndarray]:
    """Inverse transformation (Z, w) -> (vartheta, u); exact inverse of
    ``to_target`` up to rounding when the same quadrature rule is used."""
    x = grid.nodes()
    gamma_x = kernel.gamma(x)
    g_x = kernel.g(x)
    coupling = integrate_profile(g_x * gamma_x, grid.dx, rule)
    vartheta = (1.0 - coupling) * target.Z - integrate_profile(g_x * target.w, grid.dx, rule)
    u = target.w + gamma_x * target.Z
    return float(vartheta), u


@dataclass(frozen=True)
class TargetResiduals:
    """How well an averaged run satisfies the target-system equations."""

    scalar_residual: float      # max |dZ/dt - A_cl * Z|
    boundary_residual: float    # max |w at the driven end|
    heat_residual: float        # max |dw/dt - d2w/dx2| on interior nodes
    n_samples: int
    inconclusive: bool
    note: str = ""


def target_residuals(record: AverageRecord, kernel: BacksteppingKernel,
                     t_min: float = 0.0) -> TargetResiduals:
    """Finite-difference residuals of the target dynamics along a trajectory.

    ``t_min`` masks the startup window: the initial field is generally
    incompatible with the control at t=0, and the resulting fast transient
    swamps finite differences.  The scalar residual decays at first order in
    the step size; the field residual additionally carries the control
    sample-and-hold lag divided by dx^2 near the driven end.
    """
    t = record.t
    m = t.size
    sel = t >= t_min
    if m < 7 or sel.sum() < 5:
        return TargetResiduals(math.nan, math.nan, math.nan, m, True,
                               "too few samples for finite differencing")
    dt_s = float(t[1] - t[0])
    grid = record.grid
    x = grid.nodes()
    gamma_x = kernel.gamma(x)
    g_x = kernel.g(x)

    weights = integration_weights(grid.n, grid.dx)
    Z = record.vartheta + record.u @ (weights * g_x)
    w = record.u - gamma_x[None, :] * Z[:, None]

    inner = sel[1:-1]  # central differences exist for samples 1..m-2
    Zdot = (Z[2:] - Z[:-2]) / (2.0 * dt_s)
    scalar_residual = float(np.max(np.abs(Zdot - kernel.A_cl * Z[1:-1])[inner]))

    boundary_residual = float(np.max(np.abs(w[sel, -1])))

    dx = grid.dx
    w_t = (w[2:, :] - w[:-2, :]) / (2.0 * dt_s)
    w_xx = (w[1:-1, :-2] - 2.0 * w[1:-1, 1:-1] + w[1:-1, 2:]) / (dx * dx)
    heat_residual = float(np.max(np.abs(w_t[:, 1:-1] - w_xx)[inner, :]))

    return TargetResiduals(
        scalar_residual=scalar_residual,
        boundary_residual=boundary_residual,
        heat_residual=heat_residual,
        n_samples=m,
        inconclusive=False,
    )


@dataclass(frozen=True)
class DecayFit:
    """Exponential fit envelope(t) ~ eta_hat * value(0) * exp(-nu_hat * t)."""

    eta_hat: float
    nu_hat: float
    r_squared: float
    window: tuple
    n_points: int
    degenerate: bool
    note: str = ""


def fit_decay(t: np.ndarray, omega_series: np.ndarray, window: float = 0.5,
              floor: float = 1e-280) -> DecayFit:
    """Least-squares line on log(values) over the trailing ``window`` fraction.

    Non-positive or sub-floor values are excluded (noted); the fit is flagged
    degenerate when fewer than 3 usable points remain.
    """
    t = np.asarray(t, dtype=float)
    vals = np.asarray(omega_series, dtype=float)
    if t.shape != vals.shape or t.size < 3:
        raise ValueError("need matching t/value arrays with at least 3 samples")
    if not 0.0 < window <= 1.0:
        raise ValueError("window must be in (0, 1]")
    t0 = t[-1] - window * (t[-1] - t[0])
    sel = t >= t0
    usable = sel & (vals > floor)
    note = ""
    if usable.sum() < sel.sum():
        note = f"excluded {int(sel.sum() - usable.sum())} samples at/below the rounding floor"
    if usable.sum() < 3:
        return DecayFit(math.nan, math.nan, math.nan, (float(t0), float(t[-1])),
                        int(usable.sum()), True, note or "too few usable samples")
    tt = t[usable]
    logv = np.log(vals[usable])
    slope, intercept = np.polyfit(tt, logv, 1)
    fitted = slope * tt + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ref = vals[0] if vals[0] > 0 else math.nan
    eta_hat = math.exp(intercept) / ref if ref == ref and ref > 0 else math.nan
    return DecayFit(
        eta_hat=float(eta_hat),
        nu_hat=float(-slope),
        r_squared=float(r2),
        window=(float(t0), float(t[-1])),
        n_points=int(usable.sum()),
        degenerate=False,
        note=note,
    )


def late_time_residuals(record: TrajectoryRecord, map_: StaticMap,
                        window: float = 0.2) -> tuple[float, float]:
    """Trailing-window time means of |y - y*| and |Theta - Theta*|."""
    if not 0.0 < window <= 1.0:
        raise ValueError("window must be in (0, 1]")
    t = record.t
    sel = t >= t[-1] - window * (t[-1] - t[0])
    y_res = float(np.mean(np.abs(record.y[sel] - map_.y_star)))
    theta_res = float(np.mean(np.abs(record.Theta[sel] - map_.theta_star)))
    return y_res, theta_res


@dataclass(frozen=True)
class ScalingFit:
    """Log-log fit of late-time residuals against dither amplitude."""

    amplitudes: tuple
    y_residuals: tuple
    theta_residuals: tuple
    y_exponent: float
    theta_exponent: float
    y_r_squared: float
    theta_r_squared: float
    inconclusive: bool
    note: str = ""


def _loglog_slope(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return float(slope), (1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0)


def residual_scaling(runs, map_: StaticMap, window: float = 0.2,
                     error_floor: float = 1e-12) -> ScalingFit:
    """Fit residual-vs-amplitude exponents from (amplitude, record) pairs.

    Expected exponents for a quadratic map at fixed large frequency: about 2
    for the output residual and about 1 for the input residual.  Fewer than
    3 amplitudes, or residuals at the solver error floor, are inconclusive.
    """
    entries = sorted(runs, key=lambda ar: -ar[0])
    amps = np.array([a for a, _ in entries], dtype=float)
    if amps.size < 3:
        return ScalingFit(tuple(amps), (), (), math.nan, math.nan, math.nan, math.nan,
                          True, "need at least 3 amplitudes")
    y_res, th_res = [], []
    for _, rec in entries:
        yr, tr = late_time_residuals(rec, map_, window)
        y_res.append(yr)
        th_res.append(tr)
    y_res = np.array(y_res)
    th_res = np.array(th_res)
    if np.any(y_res < error_floor) or np.any(th_res < error_floor):
        return ScalingFit(tuple(amps), tuple(y_res), tuple(th_res),
                          math.nan, math.nan, math.nan, math.nan, True,
                          "residuals at solver error floor")
    y_exp, y_r2 = _loglog_slope(amps, y_res)
    th_exp, th_r2 = _loglog_slope(amps, th_res)
    return ScalingFit(
        amplitudes=tuple(float(a) for a in amps),
        y_residuals=tuple(float(v) for v in y_res),
        theta_residuals=tuple(float(v) for v in th_res),
        y_exponent=y_exp,
        theta_exponent=th_exp,
        y_r_squared=y_r2,
        theta_r_squared=th_r2,
        inconclusive=False,
    )


def format_report(items: dict) -> str:
    """Render an analysis report as plain 'key: value' lines."""
    lines = []
    for key, value in items.items():
        if isinstance(value, float):
            lines.append(f"{key}: {value:.6g}")
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def save_fit_residuals_csv(t: np.ndarray, values: np.ndarray, fit: DecayFit, path) -> None:
    """Write the decay fit's log-domain residuals over its window."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = fit.window
    sel = (t >= lo) & (t <= hi) & (values > 0)
    logv = np.log(values[sel])
    fitted = math.log(fit.eta_hat * values[0]) - fit.nu_hat * t[sel]
    data = np.column_stack([t[sel], logv, fitted, logv - fitted])
    np.savetxt(path, data, delimiter=",", header="t,log_value,fit,residual",
               comments="", fmt="%.12g")
