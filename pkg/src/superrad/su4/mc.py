"""Quantum-jump unraveling in the symmetric basis with photon elimination.

A trajectory carries one coefficient per counts-basis element plus the
total number of quanta ``N_q`` (photons + excited atoms).  The photon ket
and bra indices of an element are then implied: m = N_q - (n_ee + n_eg)
and n = N_q - (n_ee + n_ge), so no photon basis is stored.

Between jumps the state follows the full generator minus the four jump
maps.  Inside a fixed-``N_q`` sector the effective generator has entries

    A + B * N_q + C * sqrt(max(N_q - cnt, 0))

where the square root is the photon ladder factor of a coupling term and
``cnt`` the excited count it refers to.  All four (A, B, C, cnt) arrays
share one CSR pattern so the compiled kernel can rebuild the sector
generator in place after every jump.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import _backend
from ..errors import DeadState, InternalQuantaError
from ..estimators import ObservableRecord, jackknife
from ..params import SystemParams
from .basis import SIGMA_MINUS as SM, SIGMA_PLUS as SP, SIGMA_Z as SZ
from .basis import CountsBasis, single_atom_superop as sao
from .det import default_cutoff
from .liouvillian import atomic_superop, coupling_terms

DEFAULT_DT_FACTOR = 1.0


class JumpChannel(enum.IntEnum):
    REPUMP = 0
    SPONTANEOUS = 1
    DEPHASING = 2
    CAVITY = 3


QUANTA_CHANGE = {JumpChannel.REPUMP: 1, JumpChannel.SPONTANEOUS: -1,
                 JumpChannel.DEPHASING: 0, JumpChannel.CAVITY: -1}


class MCModel:
    """Precomputed sparse data for one parameter set."""

    def __init__(self, params: SystemParams, basis: CountsBasis | None = None):
        self.params = params
        self.basis = b = basis or CountsBasis(params.n_atoms)
        n = b.size
        x, y = b.ket_excited, b.bra_excited
        rows, cols, A, Bc, C, cnt = [], [], [], [], [], []

        T, src, dst, vals = b.collective(atomic_superop(params, effective=True))
        rows.append(dst), cols.append(src), A.append(vals)
        Bc.append(np.zeros(len(vals))), C.append(np.zeros(len(vals))), cnt.append(np.zeros(len(vals), np.int64))
        # cavity damping -kappa/2 (m + n) with m + n = 2 N_q - x - y
        diag = np.arange(n)
        rows.append(diag), cols.append(diag)
        A.append(0.5 * params.kappa * (x + y).astype(complex))
        Bc.append(np.full(n, -params.kappa)), C.append(np.zeros(n)), cnt.append(np.zeros(n, np.int64))
        for term in coupling_terms(b, params):
            ref_idx = term.src if term.ref == "src" else term.dst
            counts = (x if term.side == "ket" else y)[ref_idx]
            rows.append(term.dst), cols.append(term.src)
            A.append(np.zeros(len(term.vals))), Bc.append(np.zeros(len(term.vals)))
            C.append(term.vals), cnt.append(counts.astype(np.int64))

        r = np.concatenate(rows)
        c = np.concatenate(cols)
        keys = r * n + c
        uniq, inv = np.unique(keys, return_inverse=True)
        self.A = np.zeros(len(uniq), complex)
        self.B = np.zeros(len(uniq))
        self.C = np.zeros(len(uniq), complex)
        self.cnt = np.zeros(len(uniq), np.int64)
        Cv = np.concatenate(C).astype(complex)
        cv = np.concatenate(cnt)
        np.add.at(self.A, inv, np.concatenate(A).astype(complex))
        np.add.at(self.B, inv, np.concatenate(Bc).real)
        np.add.at(self.C, inv, Cv)
        has_c = Cv != 0
        if np.bincount(inv[has_c], minlength=len(uniq)).max(initial=0) > 1:
            raise AssertionError("coupling terms overlap in the sector pattern")
        self.cnt[inv[has_c]] = cv[has_c]
        ur, uc = uniq // n, uniq % n
        self.ptr = np.searchsorted(ur, np.arange(n + 1)).astype(np.int64)
        self.idx = uc.astype(np.int64)

        p = params
        J1 = (p.w * b.collective(sao(left=SP, right=SM))[0]).real.tocsr()
        J2 = (p.gamma * b.collective(sao(left=SM, right=SP))[0]).real.tocsr()
        self.J = (J1, J2)
        self.j3_diag = 0.5 * p.t2_inv * b.collective(sao(left=SZ, right=SZ))[0].diagonal().real
        self.kappa = p.kappa
        self.x = x.astype(np.int64)
        self.y = y.astype(np.int64)

    def sector_generator(self, nq: int) -> sp.csr_matrix:
        xx = np.maximum(nq - self.cnt, 0).astype(float)
        data = self.A + self.B * nq + self.C * np.sqrt(xx)
        n = self.basis.size
        return sp.csr_matrix((data, self.idx, self.ptr), shape=(n, n))

    def valid(self, nq: int) -> np.ndarray:
        return (self.x <= nq) & (self.y <= nq)

    def jump_weights(self, v: np.ndarray, nq: int) -> np.ndarray:
        tw = self.basis.trace_weights
        vr = v.real
        return np.array([
            (self.J[0].T @ tw) @ vr,
            (self.J[1].T @ tw) @ vr,
            (self.j3_diag * tw) @ vr,
            self.kappa * (tw * (nq - self.x)) @ vr,
        ])

    def apply_jump(self, v: np.ndarray, nq: int, channel: JumpChannel):
        if channel == JumpChannel.REPUMP:
            out = self.J[0] @ v
        elif channel == JumpChannel.SPONTANEOUS:
            out = self.J[1] @ v
        elif channel == JumpChannel.DEPHASING:
            out = self.j3_diag * v
        else:
            m = (nq - self.x).astype(float)
            k = (nq - self.y).astype(float)
            f = np.where((m > 0) & (k > 0), self.kappa * np.sqrt(np.maximum(m * k, 0.0)), 0.0)
            out = f * v
        return out, nq + QUANTA_CHANGE[JumpChannel(channel)]

    def kernel_args(self):
        J1, J2 = self.J
        return (self.ptr, self.idx, self.A, self.B, self.C, self.cnt,
                J1.indptr.astype(np.int64), J1.indices.astype(np.int64), J1.data.astype(float),
                J2.indptr.astype(np.int64), J2.indices.astype(np.int64), J2.data.astype(float),
                self.j3_diag.astype(float), float(self.kappa),
                self.basis.trace_weights.astype(float), self.basis.sz_weights.astype(float),
                self.basis.pair_weights.real.astype(float), self.x, self.y,
                int(self.basis.n_atoms))


_MODEL_CACHE: dict = {}


def get_model(params: SystemParams) -> MCModel:
    m = _MODEL_CACHE.get(params)
    if m is None:
        if len(_MODEL_CACHE) > 8:
            _MODEL_CACHE.clear()
        m = _MODEL_CACHE[params] = MCModel(params)
    return m


# --- single-trajectory state API ------------------------------------------

@dataclass
class SymmetricStateMC:
    coeffs: np.ndarray
    nq: int
    basis: CountsBasis
    jump_log: dict = field(default_factory=lambda: {ch: 0 for ch in JumpChannel})

    @classmethod
    def ground(cls, basis: CountsBasis) -> "SymmetricStateMC":
        v = np.zeros(basis.size, complex)
        v[basis.index_of(0, basis.n_atoms, 0, 0)] = 1.0
        return cls(v, 0, basis)

    @classmethod
    def from_counts(cls, basis: CountsBasis, counts, nq: int) -> "SymmetricStateMC":
        """Single basis element, normalized to unit trace when trace-bearing."""
        v = np.zeros(basis.size, complex)
        i = basis.index_of(*counts)
        w = basis.trace_weights[i]
        v[i] = 1.0 / w if w > 0 else 1.0
        st = cls(v, nq, basis)
        st.check_quanta()
        return st

    def trace(self) -> float:
        return float(self.basis.trace_weights @ self.coeffs.real)

    def check_quanta(self, rel: float = 1e-12):
        b = self.basis
        big = np.abs(self.coeffs) > rel * np.abs(self.coeffs).max(initial=0.0)
        if np.any(big & ((b.ket_excited > self.nq) | (b.bra_excited > self.nq))):
            raise InternalQuantaError(f"negative implied photon index at N_q={self.nq}")

    def observables(self) -> ObservableRecord:
        return observables(self)


def observables(state: SymmetricStateMC) -> ObservableRecord:
    b = state.basis
    v = state.coeffs
    tr = state.trace()
    if not tr > 0:
        raise ValueError("state trace must be positive")
    m = np.where(b.trace_weights != 0, state.nq - b.ket_excited, 0).astype(float)
    sz = float(b.sz_weights @ v.real) / (b.n_atoms * tr)
    corr = complex(b.pair_weights @ v) / tr if b.n_atoms >= 2 else complex(np.nan)
    photons = float((b.trace_weights * m) @ v.real) / tr
    photons2 = float((b.trace_weights * m * (m - 1)) @ v.real) / tr
    return ObservableRecord.exact(sz, corr, photons, photons2)


def effective_step_mc(state: SymmetricStateMC, params: SystemParams, dt: float) -> SymmetricStateMC:
    """One RK4 step of the trace-decreasing evolution between jumps."""
    model = get_model(params)
    state.check_quanta()
    L = model.sector_generator(state.nq)
    v = state.coeffs
    k1 = L @ v
    k2 = L @ (v + 0.5 * dt * k1)
    k3 = L @ (v + 0.5 * dt * k2)
    k4 = L @ (v + dt * k3)
    out = v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return SymmetricStateMC(out, state.nq, state.basis, dict(state.jump_log))


def sample_jump(state: SymmetricStateMC, params: SystemParams, rng) -> JumpChannel:
    """Draw a channel with probability proportional to Tr[J_i rho]."""
    w = get_model(params).jump_weights(state.coeffs, state.nq)
    tot = w.sum()
    if not tot > 0:
        raise DeadState("all jump channels have zero weight")
    r = rng.random() * tot
    acc = np.cumsum(w)
    for k in range(4):
        if r < acc[k] and w[k] > 0:
            return JumpChannel(k)
    return JumpChannel(int(np.nonzero(w > 0)[0][-1]))


def apply_jump(state: SymmetricStateMC, channel: JumpChannel, params: SystemParams) -> SymmetricStateMC:
    """Apply a jump map, renormalize to unit trace and update N_q and the log."""
    model = get_model(params)
    out, nq = model.apply_jump(state.coeffs, state.nq, channel)
    if nq < 0:
        raise InternalQuantaError("total quanta would become negative")
    tr = float(state.basis.trace_weights @ out.real)
    if not tr > 0:
        raise DeadState(f"jump {JumpChannel(channel).name} has zero weight")
    log = dict(state.jump_log)
    log[JumpChannel(channel)] += 1
    new = SymmetricStateMC(out / tr, nq, state.basis, log)
    new.check_quanta()
    return new


# --- ensembles -------------------------------------------------------------

@dataclass
class MCResult:
    """Ensemble output of :func:`run_mc`.

    ``samples`` has shape (n_traj, n_times, 4) with columns
    (sz, Re spin_corr, photons, <a+a+aa>).
    """
    t: np.ndarray
    samples: np.ndarray
    jump_counts: np.ndarray
    final_nq: np.ndarray
    params: SystemParams
    seed: int
    backend: str

    @property
    def n_traj(self) -> int:
        return self.samples.shape[0]

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    def stderr(self) -> np.ndarray:
        return self.samples.std(axis=0, ddof=1) / math.sqrt(self.n_traj)

    def records(self) -> list[ObservableRecord]:
        out = []
        for i in range(len(self.t)):
            out.append(_record(self.samples[:, i, :]))
        return out

    def steady_state(self, t_from: float) -> ObservableRecord:
        """Time average over t >= t_from, errors across trajectories."""
        sel = self.t >= t_from
        if not sel.any():
            raise ValueError("no samples after t_from")
        return _record(self.samples[:, sel, :].mean(axis=1))


def _record(per: np.ndarray) -> ObservableRecord:
    """ObservableRecord from per-trajectory values of shape (n_traj, 4)."""
    sz, sz_e = jackknife(per, lambda m: m[0])
    c, c_e = jackknife(per, lambda m: m[1])
    n, n_e = jackknife(per, lambda m: m[2])
    n2, _ = jackknife(per, lambda m: m[3])
    g, g_e = jackknife(per, lambda m: m[3] / m[2] ** 2 if m[2] > 0 else math.nan)
    return ObservableRecord(sz=sz, spin_corr=complex(c), photons=n, g2=g, photons2=n2,
                            sz_err=sz_e, spin_corr_err=c_e, photons_err=n_e, g2_err=g_e)


def _nq_cap(params: SystemParams) -> int:
    return params.n_atoms + 4 * default_cutoff(params) + 50


_STATUS_ERRORS = {1: InternalQuantaError, 2: DeadState, 3: InternalQuantaError}


def _run_chunk(params, trajs, t_samples, seed, dt_factor, backend):
    kern = _backend.get(backend)
    model = get_model(params)
    args = model.kernel_args()
    v0 = SymmetricStateMC.ground(model.basis).coeffs
    nq_max = _nq_cap(params)
    out = np.empty((len(trajs), len(t_samples), 4))
    counts = np.zeros((len(trajs), 4), np.int64)
    final = np.zeros(len(trajs), np.int64)
    for k, j in enumerate(trajs):
        status, nq, _, t_fail = kern.mc_trajectory(
            *args, v0, 0, t_samples, dt_factor, nq_max, seed, int(j), out[k], counts[k])
        if status != 0:
            exc = _STATUS_ERRORS.get(status, RuntimeError)
            raise exc(f"trajectory {j} failed at t={t_fail:.6g} (status {status}, N_q={nq})")
        final[k] = nq
    return out, counts, final


def _worker(job):
    return _run_chunk(*job)


def run_mc(params: SystemParams, n_traj: int, t_end: float, seed: int = 0,
           n_samples: int = 101, t_samples=None, workers: int | None = None,
           dt_factor: float = DEFAULT_DT_FACTOR, backend: str = "auto") -> MCResult:
    """Average ``n_traj`` quantum-jump trajectories started from the ground state.

    Trajectory ``j`` draws its random numbers from a counter-based stream
    keyed by (seed, j), so results do not depend on ``workers``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    if t_samples is None:
        t_samples = np.linspace(0.0, t_end, n_samples)
    t_samples = np.ascontiguousarray(t_samples, float)
    if np.any(np.diff(t_samples) < 0) or t_samples[0] < 0:
        raise ValueError("sample times must be non-negative and ascending")
    if workers is None:
        workers = int(os.environ.get("SUPERRAD_THREADS", "1"))
    trajs = np.arange(n_traj)
    kern = _backend.get(backend)
    if workers <= 1 or n_traj < 2 * workers:
        out, counts, final = _run_chunk(params, trajs, t_samples, seed, dt_factor, backend)
    else:
        import multiprocessing as mp
        chunks = np.array_split(trajs, workers * 4)
        jobs = [(params, ch, t_samples, seed, dt_factor, backend) for ch in chunks if len(ch)]
        with mp.get_context("fork").Pool(workers) as pool:
            parts = pool.map(_worker, jobs)
        out = np.concatenate([p[0] for p in parts])
        counts = np.concatenate([p[1] for p in parts])
        final = np.concatenate([p[2] for p in parts])
    if np.any(final != counts[:, 0] - counts[:, 1] - counts[:, 3]):
        raise InternalQuantaError("quanta bookkeeping mismatch")
    name = "compiled" if kern is not _backend._fallback else "python"
    return MCResult(t_samples, out, counts, final, params, seed, name)
