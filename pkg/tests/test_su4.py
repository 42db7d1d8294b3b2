import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superrad.bruteforce import DenseState, Generator, evolve
from superrad.errors import CapacityError, CutoffOverflow
from superrad.params import SystemParams
from superrad.su4 import CountsBasis, DetSolver, basis_size, enumerate_basis
from superrad.su4.basis import GE, EG


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
def test_basis_size(n):
    b = CountsBasis(n)
    assert b.size == basis_size(n) == len(enumerate_basis(n))
    assert (b.counts.sum(axis=1) == n).all()


def test_basis_order_is_lexicographic():
    rows = enumerate_basis(3)
    assert rows == sorted(rows, key=lambda r: (r[0], r[1], r[2]))
    assert rows[0] == (0, 0, 0, 3)


def test_basis_capacity():
    with pytest.raises(CapacityError):
        CountsBasis(200, max_elements=10_000)


def test_index_of_rejects_bad_counts():
    with pytest.raises(ValueError):
        CountsBasis(3).index_of(1, 1, 1, 1)


@given(st.integers(1, 12))
@settings(max_examples=12, deadline=None)
def test_conjugation_is_involution(n):
    b = CountsBasis(n)
    assert (b.conj_perm[b.conj_perm] == np.arange(b.size)).all()
    c = b.counts[b.conj_perm]
    assert (c[:, EG] == b.counts[:, GE]).all()


def test_trace_weights_sum_to_hilbert_dimension():
    b = CountsBasis(5)
    assert b.trace_weights.sum() == 2**5


PARAM_SETS = [
    SystemParams(n_atoms=2, coupling=1.3, kappa=2.0, w=0.7, t2_inv=0.3),
    SystemParams(n_atoms=2, coupling=0.4, kappa=5.0, w=1.5, omega_a=0.2),
    SystemParams(n_atoms=3, coupling=0.9, kappa=1.0, w=2.0, t2_inv=0.1, omega_c=-0.3),
]


@pytest.mark.parametrize("p", PARAM_SETS)
def test_symmetric_solver_matches_full_hilbert_space(p):
    M = 6
    gen = Generator(p, M)
    times = [0.5, 1.0, 2.0]
    _, ref = evolve(gen, DenseState.ground(p.n_atoms, M), 2.0, 0.002, times, check_cutoff=False)
    det = DetSolver(p, M)
    _, got = det.evolve(det.ground(), 2.0, 0.002, times, check_cutoff=False)
    for (t1, r), (t2, g) in zip(ref, got):
        assert t1 == pytest.approx(t2)
        assert g.sz == pytest.approx(r["sz"], abs=1e-8)
        assert g.photons == pytest.approx(r["photons"], abs=1e-8)
        assert g.photons2 == pytest.approx(r["photons2"], abs=1e-8)
        if p.n_atoms >= 2:
            assert abs(g.spin_corr - r["spin_corr"]) < 1e-8


def test_state_stays_physical():
    p = PARAM_SETS[0]
    det = DetSolver(p, 6)
    st_, _ = det.evolve(det.ground(), 3.0, 0.002, check_cutoff=False)
    assert st_.trace() == pytest.approx(1.0, abs=1e-10)
    assert st_.hermiticity_error() < 1e-12


def test_cutoff_overflow_raised():
    p = SystemParams(n_atoms=3, coupling=3.0, kappa=0.5, w=5.0)
    det = DetSolver(p, 2)
    with pytest.raises(CutoffOverflow):
        det.evolve(det.ground(), 2.0, 0.002)


def test_bruteforce_capacity():
    with pytest.raises(CapacityError):
        Generator(SystemParams(n_atoms=6, coupling=1.0, kappa=1.0), 8)
