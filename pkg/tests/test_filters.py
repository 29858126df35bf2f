"""Filter and estimator tests.

The exact discretization makes the discrete step responses closed-form:
low-pass output after k samples of a unit step is 1 - exp(-c k dt), washout
output is exp(-c k dt).  Averaging identities are checked by quadrature.
"""
import math

import numpy as np
import pytest

from diffesc.dither import DitherParams
from diffesc.filters import (
    HIGH_PASS,
    LOW_PASS,
    FirstOrderFilter,
    estimate_gradient,
    estimate_hessian,
    period_average_estimates,
)


def test_low_pass_step_response_exact():
    c, dt = 3.7, 0.01
    f = FirstOrderFilter(LOW_PASS, c, dt)
    for k in range(1, 400):
        out = f.step(1.0)
        assert out == pytest.approx(1.0 - math.exp(-c * k * dt), abs=1e-12)


def test_high_pass_rejects_dc_exactly():
    c, dt = 2.0, 0.02
    f = FirstOrderFilter(HIGH_PASS, c, dt)
    for k in range(1, 400):
        out = f.step(5.0)
        assert out == pytest.approx(5.0 * math.exp(-c * k * dt), abs=1e-11)
    assert abs(out) < 1e-6


def test_low_pass_frequency_response_at_corner():
    # driving at the corner frequency: gain 1/sqrt(2), phase -pi/4
    c = omega = 10.0
    dt = 1e-4
    f = FirstOrderFilter(LOW_PASS, c, dt)
    ts = np.arange(0.0, 6.0, dt)
    out = np.array([f.step(math.sin(omega * t)) for t in ts])
    sel = ts > 4.0
    basis = np.column_stack([np.sin(omega * ts[sel]), np.cos(omega * ts[sel])])
    p, q = np.linalg.lstsq(basis, out[sel], rcond=None)[0]
    amp, phase = math.hypot(p, q), math.atan2(q, p)
    assert amp == pytest.approx(1.0 / math.sqrt(2.0), rel=0.02)
    assert phase == pytest.approx(-math.pi / 4.0, rel=0.02)


def test_filters_are_linear():
    rng = np.random.default_rng(11)
    u = rng.standard_normal(300)
    v = rng.standard_normal(300)
    a, b = 1.7, -0.6
    for kind in (LOW_PASS, HIGH_PASS):
        f1 = FirstOrderFilter(kind, 4.0, 0.01)
        f2 = FirstOrderFilter(kind, 4.0, 0.01)
        f3 = FirstOrderFilter(kind, 4.0, 0.01)
        for uu, vv in zip(u, v):
            combined = f3.step(a * uu + b * vv)
            assert combined == pytest.approx(a * f1.step(uu) + b * f2.step(vv), abs=1e-12)


def test_filter_validation_and_reset():
    with pytest.raises(ValueError):
        FirstOrderFilter("band_pass", 1.0, 0.01)
    with pytest.raises(ValueError):
        FirstOrderFilter(LOW_PASS, -1.0, 0.01)
    with pytest.raises(ValueError):
        FirstOrderFilter(LOW_PASS, 1.0, 0.0)
    f = FirstOrderFilter(LOW_PASS, 1.0, 0.01, state=0.3)
    f.step(1.0)
    f.reset()
    assert f.state == 0.0


def test_gradient_estimate_of_constant_output_averages_out():
    # constant map output: once the washout settles, the demodulated signal
    # is zero-mean over a period
    p = DitherParams(0.2, 10.0, 1.0)
    dt = 1e-3
    washout = FirstOrderFilter(HIGH_PASS, 1.0, dt)
    period_samples = round(p.period / dt)
    values = []
    for k in range(12_000):
        values.append(estimate_gradient(5.0, k * dt, p, washout))
    late = np.array(values[-period_samples:])
    assert abs(late.mean()) < 1e-3


def test_hessian_estimate_of_zero_output_is_zero():
    p = DitherParams(0.2, 10.0, 1.0)
    smoother = FirstOrderFilter(LOW_PASS, 1.0, 1e-3)
    for k in range(100):
        out = estimate_hessian(0.0, k * 1e-3, p, smoother)
    assert out == 0.0


def test_estimators_reject_tiny_amplitude():
    p = DitherParams(1e-12, 10.0, 1.0)
    washout = FirstOrderFilter(HIGH_PASS, 1.0, 1e-3)
    smoother = FirstOrderFilter(LOW_PASS, 1.0, 1e-3)
    with pytest.raises(ValueError, match="amplitude"):
        estimate_gradient(1.0, 0.0, p, washout)
    with pytest.raises(ValueError, match="amplitude"):
        estimate_hessian(1.0, 0.0, p, smoother)


@pytest.mark.parametrize("vartheta", [0.0, 0.3, -1.2, 2.5])
def test_period_average_identities(vartheta):
    # the averaging backbone: mean of demodulated output over one period
    # returns (H*vartheta, H) exactly for a frozen tracking error
    p = DitherParams(0.2, 10.0, 1.0)
    H = -2.0
    est = period_average_estimates(p, y_star=5.0, H=H, vartheta=vartheta)
    assert est.G_hat == pytest.approx(H * vartheta, abs=1e-8)
    assert est.H_hat == pytest.approx(H, abs=1e-8)


def test_period_average_other_parameters():
    p = DitherParams(0.05, 40.0, 2.0)
    est = period_average_estimates(p, y_star=-1.0, H=-0.7, vartheta=0.9)
    assert est.G_hat == pytest.approx(-0.7 * 0.9, abs=1e-8)
    assert est.H_hat == pytest.approx(-0.7, abs=1e-8)
