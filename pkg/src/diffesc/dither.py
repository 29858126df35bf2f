"""Probing-signal design for a diffusion actuator.

When the optimized input is the spatial integral of a diffusing field, a
plain ``a*sin(omega*t)`` perturbation at the boundary does not produce an
``a*sin(omega*t)`` perturbation at the map input.  The boundary signal has
to be motion-planned instead: we pick the boundary trace of an exact
space-time solution of the heat equation whose spatial integral is the
desired sinusoid.  The design reduces to two constants, an amplitude and a
phase, obtained from the phasor sum of the two travelling components of
that solution.

All functions here are pure and accept scalars or numpy arrays for the
(x, t) arguments.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DitherParams",
    "DitherDesign",
    "IdentityReport",
    "design_dither",
    "norm_constant",
    "phase_components",
    "phase_constant",
    "dither_signal",
    "dither_field",
    "dither_envelope",
    "gradient_demod",
    "hessian_demod",
    "verify_integral_identity",
]

# Relative threshold under which the cosine phasor component counts as zero
# and the phase falls back to +-pi/2.
PSI2_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class DitherParams:
    """Target perturbation: integral of the diffused field = a*sin(omega*t)."""

    a: float        # perturbation amplitude at the map input
    omega: float    # angular frequency, rad/s
    L: float        # actuator domain length

    def validate(self) -> None:
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ValueError(f"dither amplitude must be >= 0, got {self.a}")
        if not (self.omega > 0.0 and math.isfinite(self.omega)):
            raise ValueError(f"dither frequency must be > 0, got {self.omega}")
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ValueError(f"domain length must be > 0, got {self.L}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class DitherDesign:
    """Computed boundary-signal constants for a given DitherParams."""

    params: DitherParams
    amplitude: float    # A, amplitude of the planned reference at x=0
    phase: float        # phi = -psi, rad
    norm_const: float   # B, phasor magnitude normalizing the amplitude
    psi: float          # phase of the integrated-field phasor, rad
    psi1: float         # sine (imaginary) component of the phasor sum
    psi2: float         # cosine (real) component of the phasor sum


def _wavenumber(params: DitherParams) -> float:
    # spatial decay/oscillation rate of the travelling components
    return math.sqrt(params.omega / 2.0)


def norm_constant(params: DitherParams) -> float:
    """Magnitude B of the phasor sum of the two integrated components.

    Integrating the planned field gives a growing component e^q at phase
    q - pi/4 and a decaying component entering with a NEGATIVE amplitude
    -e^{-q} at phase -q - pi/4 (q = L*sqrt(omega/2)).  The squared magnitude
    of that sum is

        B**2 = exp(2q) + exp(-2q) - 2*cos(2q),

    strictly positive for omega, L > 0, with the correct static limit
    B -> 2*L*sqrt(omega) (so the designed amplitude tends to a/L).
    """
    params.validate()
    z = params.L * math.sqrt(2.0 * params.omega)
    val = math.exp(z) + math.exp(-z) - 2.0 * math.cos(z)
    if val <= 0.0:
        # analytically impossible; can only happen through catastrophic rounding
        warnings.warn("norm_constant argument clamped at positive floor", RuntimeWarning)
        val = 1e-300
    return math.sqrt(val)


def phase_components(params: DitherParams) -> tuple[float, float]:
    """Sine/cosine components (psi1, psi2) of the integrated-field phasor.

    psi1 is the imaginary part and psi2 the real part of
    e^q * e^{j(q - pi/4)} - e^{-q} * e^{j(-q - pi/4)}.
    """
    q = params.L * _wavenumber(params)
    quarter = math.pi / 4.0
    psi1 = math.exp(q) * math.sin(q - quarter) - math.exp(-q) * math.sin(-q - quarter)
    psi2 = math.exp(q) * math.cos(q - quarter) - math.exp(-q) * math.cos(-q - quarter)
    return psi1, psi2


def phase_constant(params: DitherParams, zero_tol: float = PSI2_ZERO_TOL) -> float:
    """Phase psi of the phasor sum, resolved over the full circle.

    Branches on the sign of the cosine component; |psi2| below
    ``zero_tol*max(1, |psi1|)`` counts as zero and returns +-pi/2.
    """
    psi1, psi2 = phase_components(params)
    if abs(psi2) < zero_tol * max(1.0, abs(psi1)):
        return math.copysign(math.pi / 2.0, psi1)
    if psi2 > 0.0:
        return math.atan(psi1 / psi2)
    return math.pi + math.atan(psi1 / psi2)


def design_dither(params: DitherParams) -> DitherDesign:
    """Compute the boundary-signal constants: A = 2*a*sqrt(omega)/B, phi = -psi."""
    params.validate()
    norm = norm_constant(params)
    psi1, psi2 = phase_components(params)
    psi = phase_constant(params)
    amplitude = 2.0 * params.a * math.sqrt(params.omega) / norm
    return DitherDesign(
        params=params,
        amplitude=amplitude,
        phase=-psi,
        norm_const=norm,
        psi=psi,
        psi1=psi1,
        psi2=psi2,
    )


def dither_field(design: DitherDesign, x, t):
    """Planned reference field: an exact heat-equation solution on [0, L].

    Sum of a growing and a decaying travelling wave; its trace at x=L is the
    boundary dither and its spatial integral over [0, L] is a*sin(omega*t).
    """
    k = _wavenumber(design.params)
    w = design.params.omega
    half_amp = 0.5 * design.amplitude
    arg = w * np.asarray(t, dtype=float) + design.phase
    kx = k * np.asarray(x, dtype=float)
    return half_amp * (np.exp(kx) * np.sin(arg + kx) + np.exp(-kx) * np.sin(arg - kx))


def dither_signal(design: DitherDesign, t):
    """Boundary dither: the planned field evaluated at x = L."""
    return dither_field(design, design.params.L, t)


def dither_envelope(design: DitherDesign) -> float:
    """Upper bound on |dither_signal|: (A/2)*(exp(kL) + exp(-kL))."""
    q = design.params.L * _wavenumber(design.params)
    return 0.5 * design.amplitude * (math.exp(q) + math.exp(-q))


def gradient_demod(params: DitherParams, t):
    """Demodulation signal multiplying the output to estimate the gradient."""
    return (2.0 / params.a) * np.sin(params.omega * np.asarray(t, dtype=float))


def hessian_demod(params: DitherParams, t):
    """Demodulation signal multiplying the output to estimate the curvature."""
    return (-8.0 / params.a**2) * np.cos(2.0 * params.omega * np.asarray(t, dtype=float))


def gauss_legendre(n_nodes: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights scaled to [lo, hi]."""
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


@dataclass(frozen=True)
class IdentityReport:
    """Result of checking integral(field) == a*sin(omega*t) over samples."""

    max_residual: float
    tol: float
    passed: bool
    n_samples: int


def verify_integral_identity(
    design: DitherDesign,
    t_samples,
    tol: float = 1e-6,
    nodes: int = 64,
) -> IdentityReport:
    """Quadrature check that the planned field integrates to a*sin(omega*t).

    Uses Gauss-Legendre quadrature (>= 32 nodes; the integrand is analytic,
    so the quadrature error sits far below any meaningful tolerance).  A
    failure indicates a bug in the design constants or the field formula.
    """
    t_samples = np.atleast_1d(np.asarray(t_samples, dtype=float))
    if t_samples.size == 0:
        raise ValueError("t_samples must be non-empty")
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if nodes < 32:
        raise ValueError("use at least 32 quadrature nodes")
    p = design.params
    x, w = gauss_legendre(nodes, 0.0, p.L)
    integrals = w @ dither_field(design, x[:, None], t_samples[None, :])
    target = p.a * np.sin(p.omega * t_samples)
    max_residual = float(np.max(np.abs(integrals - target)))
    return IdentityReport(
        max_residual=max_residual,
        tol=tol,
        passed=max_residual < tol,
        n_samples=int(t_samples.size),
    )
