import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superrad.errors import BelowNoiseFloor, FitQualityWarning, WindowTooShort
from superrad.estimators import (archive_observables, field_moments, fit_linewidth,
                                 g1_correlation, jackknife)
from superrad.langevin import Archive


def _archive(q, p, sx=None, sy=None, sz=None, t=None):
    n = q.shape[0]
    z = np.zeros_like(q)
    return Archive(t=np.arange(n) * 0.1 if t is None else t, q=q, p=p,
                   sx=z if sx is None else sx, sy=z if sy is None else sy,
                   sz=z if sz is None else sz)


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=60))
@settings(max_examples=50, deadline=None)
def test_jackknife_of_mean_is_standard_error(xs):
    x = np.array(xs)[:, None]
    est, err = jackknife(x, lambda m: m[0])
    assert est == pytest.approx(x.mean(), abs=1e-9)
    assert err == pytest.approx(x.std(ddof=1) / math.sqrt(len(x)), rel=1e-6, abs=1e-9)


def test_coherent_state_moments():
    rng = np.random.default_rng(0)
    alpha = 3.0
    q = alpha + rng.normal(0, 0.5, size=(50, 4000))
    p = rng.normal(0, 0.5, size=(50, 4000))
    f = field_moments(_archive(q, p))
    assert f["photons"] == pytest.approx(alpha**2, abs=4 * f["photons_err"])
    assert f["g2"] == pytest.approx(1.0, abs=4 * f["g2_err"] + 0.01)


def test_thermal_state_g2():
    rng = np.random.default_rng(1)
    nbar = 4.0
    s = math.sqrt((nbar + 0.5) / 2)
    q = rng.normal(0, s, size=(20, 20000))
    p = rng.normal(0, s, size=(20, 20000))
    f = field_moments(_archive(q, p))
    assert f["photons"] == pytest.approx(nbar, rel=0.03)
    assert f["g2"] == pytest.approx(2.0, rel=0.05)


def test_vacuum_below_noise_floor():
    rng = np.random.default_rng(2)
    q = rng.normal(0, 0.45, size=(10, 500))
    p = rng.normal(0, 0.45, size=(10, 500))
    with pytest.raises(BelowNoiseFloor):
        field_moments(_archive(q, p))
    rec = archive_observables(_archive(q, p, sz=-np.ones_like(q)), 10)
    assert "BELOW_NOISE_FLOOR" in rec.flags


@pytest.mark.parametrize("rate", [0.1, 1.0, 5.0])
def test_fit_recovers_exponential(rate):
    tau = np.linspace(0, 5 / rate, 400)
    fit = fit_linewidth(tau, 2.0 * np.exp(-rate * tau))
    assert fit.linewidth == pytest.approx(2 * rate, rel=1e-9)
    assert fit.quality_ok


def test_fit_window_too_short():
    tau = np.linspace(0, 1, 50)
    with pytest.raises(WindowTooShort):
        fit_linewidth(tau, np.exp(-0.1 * tau))


def test_fit_quality_warning():
    tau = np.linspace(0, 10, 400)
    C = np.exp(-tau) * (1 + 0.3 * np.cos(8 * tau))
    with pytest.warns(FitQualityWarning):
        fit_linewidth(tau, C)


def test_g1_of_phase_diffusing_field():
    # amplitude 2, phase random walk with <dphi^2> = D t -> |C| = 4 exp(-D tau / 2)
    rng = np.random.default_rng(4)
    D, dt, n, M = 0.5, 0.02, 3000, 200
    phi = np.cumsum(rng.normal(0, math.sqrt(D * dt), size=(n, M)), axis=0)
    a = 2.0 * np.exp(1j * phi)
    ar = _archive(a.real, -a.imag, t=np.arange(n) * dt)
    C = g1_correlation(ar, tau_max=10.0, n_boot=20)
    assert abs(C.values[0]) == pytest.approx(4.0, rel=1e-9)
    fit = fit_linewidth(C.tau, C.values, C.stderr)
    assert fit.linewidth == pytest.approx(D, rel=0.1)


def test_g1_rejects_long_lag():
    ar = _archive(np.zeros((10, 3)), np.zeros((10, 3)))
    with pytest.raises(ValueError):
        g1_correlation(ar, tau_max=5.0)
