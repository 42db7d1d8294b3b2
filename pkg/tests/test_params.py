import math

import pytest
from hypothesis import given, settings, strategies as st

from superrad.params import (ParameterError, Regime, SystemParams, params_for_xi, crossover_xi,
                             derive, optimal_pump, rate_scale, regime_label, solve_kappa_for_xi)


def test_derived_fig1_superradiant():
    p = params_for_xi(40, 1.0, 0.2)
    d = derive(p)
    assert p.kappa == pytest.approx(25.0)
    assert p.coupling == pytest.approx(5.0)
    assert d.w_opt == pytest.approx(19.0)
    assert d.cooperativity == pytest.approx(2.0)
    assert d.d0 == pytest.approx(0.9)
    assert d.Gamma == pytest.approx(20.0)


@pytest.mark.parametrize("xi, kappa, coupling_sq", [(0.1, 1250.0, 125.0), (1.0, 125.0, 12.5),
                                                    (10.0, 12.5, 1.25)])
def test_fig2_family(xi, kappa, coupling_sq):
    k, c = solve_kappa_for_xi(10_000, 0.1, xi)
    assert k == pytest.approx(kappa)
    assert c * c == pytest.approx(coupling_sq)
    p = params_for_xi(10_000, 0.1, xi)
    assert optimal_pump(p) == pytest.approx(499.0)


@pytest.mark.parametrize("xi, label", [(0.1, Regime.SUPERRADIANT), (0.5, Regime.CROSSOVER),
                                       (1.0, Regime.CROSSOVER), (2.0, Regime.CROSSOVER),
                                       (2.01, Regime.LASING)])
def test_regime_boundaries(xi, label):
    assert regime_label(xi) == label


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_regime_rejects(bad):
    with pytest.raises(ParameterError):
        regime_label(bad)


@pytest.mark.parametrize("kw", [dict(n_atoms=0), dict(kappa=0.0), dict(coupling=-1.0),
                                dict(w=-0.1), dict(t2_inv=math.nan), dict(n_atoms=2.5)])
def test_invalid_params(kw):
    base = dict(n_atoms=4, coupling=1.0, kappa=1.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        SystemParams(**base)


@given(n=st.integers(1, 10**5), ratio=st.floats(1e-3, 10.0), xi=st.floats(1e-3, 1e3))
@settings(max_examples=60, deadline=None)
def test_solve_kappa_round_trip(n, ratio, xi):
    kappa, coupling = solve_kappa_for_xi(n, ratio, xi)
    p = SystemParams(n_atoms=n, coupling=coupling, kappa=kappa)
    assert crossover_xi(p) == pytest.approx(xi, rel=1e-12)
    assert coupling**2 / kappa == pytest.approx(ratio, rel=1e-12)


def test_rate_scale_includes_collective_frequency():
    p = SystemParams(n_atoms=10_000, coupling=1.0, kappa=1.0, w=2.0)
    assert rate_scale(p) == pytest.approx(100.0)
