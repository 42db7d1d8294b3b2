import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superrad import _fallback
from superrad._backend import BACKEND, get

try:
    compiled = get("compiled")
except ImportError:  # pragma: no cover - depends on the build
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels unavailable")


@needs_compiled
@given(seed=st.integers(0, 2**63), step=st.integers(0, 2**40), comp=st.integers(0, 7))
@settings(max_examples=200, deadline=None)
def test_hash_identical_across_backends(seed, step, comp):
    streams = np.arange(16, dtype=np.uint64)
    a = _fallback.counter_uniform(seed, streams, step, comp)
    b = compiled.counter_uniform(seed, streams, step, comp)
    np.testing.assert_array_equal(a, b)


def test_hash_uniformity():
    u = _fallback.counter_uniform(7, np.arange(200_000, dtype=np.uint64), 3, 1)
    assert u.min() >= 0 and u.max() < 1
    hist, _ = np.histogram(u, bins=20, range=(0, 1))
    expected = len(u) / 20
    chi2 = ((hist - expected) ** 2 / expected).sum()
    assert chi2 < 45  # 19 dof, p ~ 1e-3


def test_hash_components_uncorrelated():
    s = np.arange(100_000, dtype=np.uint64)
    a = _fallback.counter_uniform(1, s, 0, 0)
    b = _fallback.counter_uniform(1, s, 0, 1)
    c = _fallback.counter_uniform(1, s, 1, 0)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.02


def test_three_point_moments():
    x = _fallback.three_point(_fallback.counter_uniform(3, np.arange(600_000, dtype=np.uint64), 0, 0))
    assert set(np.unique(x)) == {-np.sqrt(3), 0.0, np.sqrt(3)}
    assert x.mean() == pytest.approx(0.0, abs=0.01)
    assert (x**2).mean() == pytest.approx(1.0, abs=0.01)
    assert (x**4).mean() == pytest.approx(3.0, abs=0.03)


@pytest.mark.parametrize("dim", [2, 5])
def test_sym_sqrt_factor(dim):
    rng = np.random.default_rng(dim)
    X = rng.normal(size=(dim, dim))
    D = np.zeros((5, 5))
    D[:dim, :dim] = X @ X.T
    B, lmin = _fallback.sym_sqrt_factor(D, 0.01)
    np.testing.assert_allclose(B, B.T, atol=1e-14)
    np.testing.assert_allclose(B @ B, 2 * 0.01 * D, atol=1e-12)


def test_backend_selection_reported():
    assert BACKEND in ("compiled", "python")
    assert get("python") is _fallback
    with pytest.raises(ValueError):
        get("gpu")
