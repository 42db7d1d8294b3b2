import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superrad.meanfield import (MeanFieldState, StepSizeError, integrate, max_stable_dt,
                                photon_curve, sensitivity, steady_state_analytic)
from superrad.params import SystemParams, params_for_xi


def test_analytic_fig1_optimum():
    ss = steady_state_analytic(params_for_xi(40, 1.0, 0.2))
    assert ss.photons == pytest.approx(6.4)
    assert ss.above_threshold


def test_integration_reaches_analytic_steady_state():
    p = params_for_xi(40, 1.0, 0.2)
    tr = integrate(p, MeanFieldState(a0=0.5), t_end=30.0)
    f = tr.final()
    ss = steady_state_analytic(p)
    assert f.photons == pytest.approx(ss.photons, rel=1e-6)
    assert f.sz == pytest.approx(ss.sz, abs=1e-6)


def test_ground_state_is_fixed_point():
    p = params_for_xi(20, 1.0, 1.0)
    f = integrate(p, MeanFieldState(), t_end=5.0).final()
    assert f.photons == 0.0
    assert f.sz == pytest.approx(p.d0)


def test_step_size_guard():
    p = params_for_xi(20, 1.0, 1.0)
    with pytest.raises(StepSizeError):
        integrate(p, t_end=1.0, dt=10 * max_stable_dt(p, 10.0))


@given(kappa=st.floats(0.01, 1e4), Gamma_extra=st.floats(0.0, 1e3), w=st.floats(0.0, 1e3))
@settings(max_examples=100, deadline=None)
def test_sensitivity_sum_rule(kappa, Gamma_extra, w):
    p = SystemParams(n_atoms=10, coupling=1.0, kappa=kappa, w=w, t2_inv=Gamma_extra)
    dc, da = sensitivity(p)
    assert abs(dc + da - 1.0) <= 1e-12
    assert 0 <= dc <= 1


def test_photon_curve_peak_near_optimum():
    p = params_for_xi(10_000, 0.1, 1.0)
    w = np.linspace(50, 1500, 2901)
    c = photon_curve(p, w)
    assert c.argmax_w() == pytest.approx(499.0, rel=0.01)


def test_photon_curve_rejects_unsorted():
    with pytest.raises(ValueError):
        photon_curve(params_for_xi(10, 1.0, 1.0), [3.0, 2.0])
