"""Brute-force Lindblad integrator on the full atoms x photon Hilbert space.

Only meant for N <= 4 atoms and a truncated Fock space; it is the
reference every symmetric-basis and semiclassical estimator is checked
against.  Ordering of the tensor product is (atom 1, ..., atom N, field);
an atom's local basis is (|e>, |g>).  Frame rotating at omega_c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, CutoffOverflow
from .params import SystemParams

DEFAULT_CAPACITY = 256
CUTOFF_TOL = 1e-8

_SM = np.array([[0, 0], [1, 0]], dtype=complex)  # sigma^- : |e> -> |g>
_SP = _SM.T.copy()
_SZ = np.diag([1.0, -1.0]).astype(complex)


def destroy(m_cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, m_cutoff)), 1).astype(complex)


@dataclass
class DenseState:
    rho: np.ndarray
    n_atoms: int
    m_cutoff: int

    @classmethod
    def ground(cls, n_atoms: int, m_cutoff: int) -> "DenseState":
        d = 2**n_atoms * m_cutoff
        rho = np.zeros((d, d), complex)
        # all atoms in |g> is the last atomic index; vacuum is field index 0
        idx = (2**n_atoms - 1) * m_cutoff
        rho[idx, idx] = 1.0
        return cls(rho, n_atoms, m_cutoff)

    @classmethod
    def product(cls, atom_rho: np.ndarray, field_rho: np.ndarray, n_atoms: int) -> "DenseState":
        r = np.array([[1.0]], complex)
        for _ in range(n_atoms):
            r = np.kron(r, atom_rho)
        return cls(np.kron(r, field_rho), n_atoms, field_rho.shape[0])

    def copy(self) -> "DenseState":
        return DenseState(self.rho.copy(), self.n_atoms, self.m_cutoff)

    def check(self, tol_herm=1e-10, tol_trace=1e-8, tol_pos=1e-8):
        r = self.rho
        herm = np.max(np.abs(r - r.conj().T))
        tr = np.trace(r).real
        lam = np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min()
        return herm <= tol_herm and abs(tr - 1) <= tol_trace and lam >= -tol_pos


class Generator:
    """Matrix-free action of the master-equation generator."""

    def __init__(self, params: SystemParams, m_cutoff: int, capacity: int = DEFAULT_CAPACITY):
        n = params.n_atoms
        dim = 2**n * m_cutoff
        if dim > capacity:
            raise CapacityError(f"dimension 2^{n}*{m_cutoff}={dim} exceeds capacity {capacity}")
        self.params = params
        self.n_atoms = n
        self.m_cutoff = m_cutoff
        self.dim = dim
        eye_f = sp.identity(m_cutoff, format="csr", dtype=complex)
        a = sp.csr_matrix(destroy(m_cutoff))
        self.a = sp.kron(sp.identity(2**n, format="csr"), a, format="csr")
        self.sm = [self._atom_op(_SM, j) for j in range(n)]
        self.sp = [self._atom_op(_SP, j) for j in range(n)]
        self.sz = [self._atom_op(_SZ, j) for j in range(n)]
        del eye_f

        p = params
        H = 0.5 * p.detuning * sum(self.sz)
        H = H + 0.5 * p.coupling * sum(self.a.getH() @ s + s.getH() @ self.a for s in self.sm)
        jumps = [np.sqrt(p.kappa) * self.a]
        jumps += [np.sqrt(p.gamma) * s for s in self.sm]
        if p.w > 0:
            jumps += [np.sqrt(p.w) * s for s in self.sp]
        if p.t2_inv > 0:
            jumps += [np.sqrt(0.5 * p.t2_inv) * s for s in self.sz]
        self.jumps = [sp.csr_matrix(J) for J in jumps]
        self.jumps_h = [J.getH().tocsr() for J in self.jumps]
        heff = sp.csr_matrix(H, dtype=complex)
        for J, Jh in zip(self.jumps, self.jumps_h):
            heff = heff - 0.5j * (Jh @ J)
        self.heff = heff.tocsr()
        self.heff_h = self.heff.getH().tocsr()

    def _atom_op(self, op, j):
        n = self.n_atoms
        left = sp.identity(2**j, format="csr")
        right = sp.identity(2 ** (n - j - 1) * self.m_cutoff, format="csr")
        return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.heff @ rho) + 1j * (self.heff_h.T @ rho.T).T
        for J, Jh in zip(self.jumps, self.jumps_h):
            out += (Jh.T @ (J @ rho).T).T
        return out

    # observables -----------------------------------------------------------
    def expect(self, op, rho) -> complex:
        return complex((op.multiply(rho.T)).sum())

    def observables(self, rho: np.ndarray) -> dict:
        n = self.n_atoms
        tr = np.trace(rho).real
        sz = sum(self.expect(s, rho).real for s in self.sz) / (n * tr)
        if n >= 2:
            corr = self.expect(self.sp[0] @ self.sm[1], rho) / tr
        else:
            corr = np.nan
        ad = self.a.getH()
        nphot = self.expect(ad @ self.a, rho).real / tr
        n2 = self.expect(ad @ ad @ self.a @ self.a, rho).real / tr
        g2 = n2 / nphot**2 if nphot > 0 else np.nan
        return dict(sz=sz, spin_corr=complex(corr), photons=nphot, photons2=n2, g2=g2, trace=tr)

    def cutoff_population(self, rho: np.ndarray) -> float:
        top = np.arange(self.m_cutoff - 1, self.dim, self.m_cutoff)
        return float(np.diag(rho)[top].real.sum())


def build_generator(params: SystemParams, m_cutoff: int, capacity: int = DEFAULT_CAPACITY) -> Generator:
    return Generator(params, m_cutoff, capacity)


def rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_cutoff(gen: Generator, rho, tol=CUTOFF_TOL):
    pop = gen.cutoff_population(rho)
    if pop > tol * np.trace(rho).real:
        raise CutoffOverflow(f"photon population {pop:.3g} at cutoff {gen.m_cutoff}")


def evolve(gen: Generator, state: DenseState, t_end: float, dt: float,
           sample_times=None, check_cutoff: bool = True):
    """RK4 integration; returns the final state and observables at ``sample_times``."""
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt = t_end / n_steps
    rho = state.rho.copy()
    samples = []
    times = [] if sample_times is None else list(np.asarray(sample_times, float))
    step_of = {int(round(t / dt)): t for t in times}
    if 0 in step_of:
        samples.append((0.0, gen.observables(rho)))
    for i in range(1, n_steps + 1):
        rho = rk4_step(gen, rho, dt)
        if i in step_of:
            if check_cutoff:
                _check_cutoff(gen, rho)
            samples.append((i * dt, gen.observables(rho)))
    if check_cutoff:
        _check_cutoff(gen, rho)
    return DenseState(rho, state.n_atoms, state.m_cutoff), samples


def steady_state(gen: Generator, dt: float, tol: float = 1e-8, chunk: float = 1.0,
                 t_max: float = 2000.0, state: DenseState | None = None) -> DenseState:
    from .errors import ConvergenceError

    if state is None:
        state = DenseState.ground(gen.n_atoms, gen.m_cutoff)
    prev = gen.observables(state.rho)
    t = 0.0
    while t < t_max:
        state, _ = evolve(gen, state, chunk, dt)
        t += chunk
        obs = gen.observables(state.rho)
        change = max(abs(obs[k] - prev[k]) for k in ("sz", "spin_corr", "photons", "photons2"))
        if change / chunk < tol:
            return state
        prev = obs
    raise ConvergenceError(f"no steady state within t={t_max}")


def two_time_correlation(gen: Generator, rho_ss: np.ndarray, tau_grid, dt: float) -> np.ndarray:
    """C(tau) = Tr[a^dag exp(L tau)(a rho_ss)] via quantum regression."""
    tau_grid = np.asarray(tau_grid, float)
    ad = gen.a.getH().tocsr()
    x = gen.a @ rho_ss
    out = np.empty(len(tau_grid), complex)
    t = 0.0
    for i, tau in enumerate(tau_grid):
        span = tau - t
        if span > 0:
            n = max(1, int(np.ceil(span / dt - 1e-9)))
            h = span / n
            for _ in range(n):
                x = rk4_step(gen, x, h)
            t = tau
        out[i] = gen.expect(ad, x)
    return out
