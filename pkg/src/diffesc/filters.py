"""First-order filters and demodulation-based derivative estimators.

Filters use the exact zero-order-hold discretization of c/(s+c): the update
is unconditionally stable and matches the continuous step response exactly
at the sample instants.  A filter instance owns its state, so one instance
belongs to one loop; separate instances are fully independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dither import DitherParams, gauss_legendre, gradient_demod, hessian_demod

__all__ = [
    "LOW_PASS",
    "HIGH_PASS",
    "FirstOrderFilter",
    "EstimatorOutputs",
    "estimate_gradient",
    "estimate_hessian",
    "period_average_estimates",
]

LOW_PASS = "low_pass"
HIGH_PASS = "high_pass"

# Demodulation divides by the dither amplitude; below this it is meaningless.
MIN_DEMOD_AMPLITUDE = 1e-9


@dataclass
class FirstOrderFilter:
    """Low-pass c/(s+c) or washout s/(s+c), exact ZOH discretization."""

    kind: str
    corner: float
    dt: float
    state: float = 0.0

    def __post_init__(self):
        if self.kind not in (LOW_PASS, HIGH_PASS):
            raise ValueError(f"kind must be {LOW_PASS!r} or {HIGH_PASS!r}, got {self.kind!r}")
        if not (self.corner > 0.0 and math.isfinite(self.corner)):
            raise ValueError(f"corner frequency must be > 0, got {self.corner}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        self._gain = 1.0 - math.exp(-self.corner * self.dt)

    def step(self, u: float) -> float:
        """Advance one sample; returns the filtered (or washed-out) output."""
        self.state += self._gain * (u - self.state)
        return self.state if self.kind == LOW_PASS else u - self.state

    def reset(self, state: float = 0.0) -> None:
        self.state = state


@dataclass(frozen=True)
class EstimatorOutputs:
    G_hat: float
    H_hat: float


def _check_amplitude(params: DitherParams) -> None:
    if params.a < MIN_DEMOD_AMPLITUDE:
        raise ValueError(
            f"dither amplitude {params.a:.3g} too small for demodulation "
            f"(minimum {MIN_DEMOD_AMPLITUDE:.0e})"
        )


def estimate_gradient(y_signal: float, t: float, params: DitherParams,
                      washout: FirstOrderFilter) -> float:
    """Gradient estimate: demodulate the washed-out output.

    The washout removes the unknown DC level of the map output before the
    sinusoidal demodulation, which otherwise injects a large zero-mean
    carrier into the estimate.
    """
    _check_amplitude(params)
    return float(gradient_demod(params, t)) * washout.step(y_signal)


def estimate_hessian(y_signal: float, t: float, params: DitherParams,
                     smoother: FirstOrderFilter) -> float:
    """Curvature estimate: low-pass the double-frequency demodulation."""
    _check_amplitude(params)
    return smoother.step(float(hessian_demod(params, t)) * y_signal)


def period_average_estimates(params: DitherParams, y_star: float, H: float,
                             vartheta: float, nodes: int = 64) -> EstimatorOutputs:
    """Period averages of the demodulated output for a frozen tracking error.

    With the map output y(t) = y_star + (H/2)*(vartheta + a*sin(omega*t))^2
    held at a frozen vartheta, the averages of the demodulated signals over
    one period recover exactly (H*vartheta, H).  Evaluated by Gauss-Legendre
    quadrature; serves as the averaging-level check of the estimator design.
    """
    _check_amplitude(params)
    period = params.period
    t, w = gauss_legendre(nodes, 0.0, period)
    y = y_star + 0.5 * H * (vartheta + params.a * np.sin(params.omega * t)) ** 2
    g_av = float(w @ (gradient_demod(params, t) * y)) / period
    h_av = float(w @ (hessian_demod(params, t) * y)) / period
    return EstimatorOutputs(G_hat=g_av, H_hat=h_av)
