"""Deterministic master-equation integration in the symmetric basis.

The state is a coefficient array ``C[i, m, n]`` over counts-basis element
``i`` and photon Fock indices ``m`` (ket) and ``n`` (bra) below the cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, CutoffOverflow
from ..estimators import ObservableRecord, fit_linewidth
from ..meanfield import steady_state_analytic
from ..params import SystemParams
from .basis import CountsBasis
from .liouvillian import full_generator

CUTOFF_TOL = 1e-8


def default_cutoff(params: SystemParams) -> int:
    """Fock cutoff covering the mean-field photon number plus six standard deviations."""
    n = max(steady_state_analytic(params).photons, 0.0)
    return int(math.ceil(n + 6.0 * math.sqrt(n) + 10.0))


@dataclass
class SymmetricStateDet:
    coeffs: np.ndarray  # (D, M, M)
    basis: CountsBasis

    @property
    def m_cutoff(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def ground(cls, basis: CountsBasis, m_cutoff: int) -> "SymmetricStateDet":
        c = np.zeros((basis.size, m_cutoff, m_cutoff), complex)
        c[basis.index_of(0, basis.n_atoms, 0, 0), 0, 0] = 1.0
        return cls(c, basis)

    @classmethod
    def excited(cls, basis: CountsBasis, m_cutoff: int) -> "SymmetricStateDet":
        c = np.zeros((basis.size, m_cutoff, m_cutoff), complex)
        c[basis.index_of(basis.n_atoms, 0, 0, 0), 0, 0] = 1.0
        return cls(c, basis)

    def copy(self) -> "SymmetricStateDet":
        return SymmetricStateDet(self.coeffs.copy(), self.basis)

    def hermiticity_error(self) -> float:
        c = self.coeffs
        mirrored = np.conj(c[self.basis.conj_perm].transpose(0, 2, 1))
        return float(np.max(np.abs(c - mirrored)))

    def diag(self) -> np.ndarray:
        return np.einsum("imm->im", self.coeffs)

    def trace(self) -> float:
        return float((self.basis.trace_weights @ self.diag()).sum().real)

    def cutoff_population(self) -> float:
        return float((self.basis.trace_weights @ self.coeffs[:, -1, -1]).real)

    def observables(self) -> ObservableRecord:
        return observables(self)


def observables(state: SymmetricStateDet) -> ObservableRecord:
    b = state.basis
    d = state.diag()
    tr = float((b.trace_weights @ d).sum().real)
    if not tr > 0:
        raise ValueError("state trace must be positive")
    m = np.arange(state.m_cutoff)
    sz = float((b.sz_weights @ d).sum().real) / (b.n_atoms * tr)
    corr = complex((b.pair_weights @ d).sum()) / tr if b.n_atoms >= 2 else complex(np.nan)
    pd = b.trace_weights @ d  # photon distribution (unnormalized)
    photons = float((pd * m).sum().real) / tr
    photons2 = float((pd * m * (m - 1)).sum().real) / tr
    return ObservableRecord.exact(sz, corr, photons, photons2)


class DetSolver:
    """Holds the basis and the sparse generator for repeated integrations."""

    def __init__(self, params: SystemParams, m_cutoff: int | None = None,
                 max_dim: int = 20_000_000):
        if m_cutoff is None:
            m_cutoff = default_cutoff(params)
        self.params = params
        self.basis = CountsBasis(params.n_atoms)
        dim = self.basis.size * m_cutoff**2
        if dim > max_dim:
            from ..errors import CapacityError
            raise CapacityError(f"deterministic dimension {dim} exceeds {max_dim}")
        self.m_cutoff = m_cutoff
        self.L = full_generator(self.basis, params, m_cutoff)
        self.shape = (self.basis.size, m_cutoff, m_cutoff)
        self._dt = None

    def rhs(self, state: SymmetricStateDet) -> SymmetricStateDet:
        return SymmetricStateDet((self.L @ state.coeffs.ravel()).reshape(self.shape), self.basis)

    def spectral_radius(self, iters: int = 40, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=self.L.shape[0]) + 1j * rng.normal(size=self.L.shape[0])
        est = 0.0
        for _ in range(iters):
            w = self.L @ v
            nv = np.linalg.norm(v)
            est = max(est, np.linalg.norm(w) / nv) if _ > iters // 2 else est
            v = w / np.linalg.norm(w)
        return est

    def default_dt(self) -> float:
        if self._dt is None:
            self._dt = 0.5 / (1.2 * self.spectral_radius())
        return self._dt

    def ground(self) -> SymmetricStateDet:
        return SymmetricStateDet.ground(self.basis, self.m_cutoff)

    def _check(self, y, check_cutoff):
        if not check_cutoff:
            return
        st = SymmetricStateDet(y.reshape(self.shape), self.basis)
        if st.cutoff_population() > CUTOFF_TOL * st.trace():
            raise CutoffOverflow(f"photon population at cutoff {self.m_cutoff} exceeds tolerance")

    def evolve(self, state: SymmetricStateDet, t_end: float, dt: float | None = None,
               sample_times=None, check_cutoff: bool = True):
        """RK4 integration; returns (final state, [(t, ObservableRecord), ...])."""
        if dt is None:
            dt = self.default_dt()
        n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
        h = t_end / n_steps
        L = self.L
        y = state.coeffs.ravel().copy()
        wanted = {}
        for t in ([] if sample_times is None else sample_times):
            wanted.setdefault(int(round(t / h)), t)
        samples = []
        if 0 in wanted:
            samples.append((0.0, observables(SymmetricStateDet(y.reshape(self.shape), self.basis))))
        for i in range(1, n_steps + 1):
            k1 = L @ y
            k2 = L @ (y + 0.5 * h * k1)
            k3 = L @ (y + 0.5 * h * k2)
            k4 = L @ (y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if i in wanted:
                self._check(y, check_cutoff)
                st = SymmetricStateDet(y.reshape(self.shape), self.basis)
                samples.append((i * h, observables(st)))
        self._check(y, check_cutoff)
        return SymmetricStateDet(y.reshape(self.shape).copy(), self.basis), samples

    def steady_state(self, tol: float = 1e-8, chunk: float = 1.0, t_max: float = 5000.0,
                     state: SymmetricStateDet | None = None, dt: float | None = None):
        st = self.ground() if state is None else state
        prev = observables(st).as_array()
        t = 0.0
        while t < t_max:
            st, _ = self.evolve(st, chunk, dt)
            t += chunk
            cur = observables(st).as_array()
            if np.max(np.abs(cur - prev)) / chunk < tol:
                return st
            prev = cur
        raise ConvergenceError(f"no steady state within t={t_max:g}")

    # quantum regression ----------------------------------------------------
    def apply_a_left(self, state: SymmetricStateDet) -> SymmetricStateDet:
        c = state.coeffs
        out = np.zeros_like(c)
        m = np.arange(1, self.m_cutoff)
        out[:, :-1, :] = np.sqrt(m)[None, :, None] * c[:, 1:, :]
        return SymmetricStateDet(out, self.basis)

    def trace_adag(self, coeffs: np.ndarray) -> complex:
        """Tr[a^dag X] = sum_m sqrt(m) X[m-1, m] over trace-bearing elements."""
        m = np.arange(1, self.m_cutoff)
        sup = coeffs[:, m - 1, m]  # (D, M-1)
        return complex(self.basis.trace_weights @ (sup @ np.sqrt(m)))

    def field_correlation(self, rho_ss: SymmetricStateDet, tau_grid, dt: float | None = None):
        """C(tau) = Tr[a^dag e^{L tau}(a rho_ss)] on the given tau grid."""
        if dt is None:
            dt = self.default_dt()
        tau_grid = np.asarray(tau_grid, float)
        x = self.apply_a_left(rho_ss)
        out = np.empty(len(tau_grid), complex)
        t = 0.0
        for i, tau in enumerate(tau_grid):
            if tau > t:
                x, _ = self.evolve(x, tau - t, dt, check_cutoff=False)
                t = tau
            out[i] = self.trace_adag(x.coeffs) / rho_ss.trace()
        return out


def evolve_det(state: SymmetricStateDet, params: SystemParams, t_end: float, dt: float | None = None):
    solver = DetSolver(params, state.m_cutoff)
    return solver.evolve(state, t_end, dt)[0]


def steady_state_det(params: SystemParams, m_cutoff: int | None = None, **kw) -> SymmetricStateDet:
    return DetSolver(params, m_cutoff).steady_state(**kw)


@dataclass
class RegressionLinewidth:
    linewidth: float
    tau: np.ndarray
    correlation: np.ndarray
    fit_residual: float
    method: str = "quantum-regression fit on deterministic symmetric-basis solver"


def linewidth_regression(params: SystemParams, tau_max: float, n_tau: int = 400,
                         m_cutoff: int | None = None, rho: SymmetricStateDet | None = None,
                         dt: float | None = None) -> RegressionLinewidth:
    """Linewidth from the exponential decay of the steady-state field correlation.

    ``rho`` overrides the steady state (e.g. a seeded empty-cavity test state).
    """
    solver = DetSolver(params, m_cutoff if rho is None else rho.m_cutoff)
    if rho is None:
        rho = solver.steady_state(dt=dt)
    tau = np.linspace(0.0, tau_max, n_tau + 1)
    C = solver.field_correlation(rho, tau, dt)
    fit = fit_linewidth(tau, C)
    return RegressionLinewidth(fit.linewidth, tau, C, fit.residual)
