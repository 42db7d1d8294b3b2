"""Semiclassical c-number Langevin ensemble.

Each trajectory carries (q, p, Sx, Sy, Sz) with field a = q - i p and
per-atom collective spin S- = Sx - i Sy, Sz in [-1, 1].  The drift is the
mean-field right-hand side in the frame rotating at the cavity frequency;
the noise is additive within a step, with a diffusion matrix evaluated at
the ensemble means and shared by every trajectory.  Steps use the explicit
order-2.0 weak scheme for additive noise with three-point increments.

Random numbers come from a counter-based hash of (seed, trajectory, step,
component), so archives do not depend on how trajectories are scheduled.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _fallback
from .errors import NonPositiveDiffusion, SmallEnsembleWarning, TrajectoryDiverged
from .meanfield import StepSizeError, steady_state_analytic
from .params import SystemParams, rate_scale

STEP_FACTOR = 0.05
CLAMP_REL = 1e-10
COMPONENTS = ("q", "p", "sx", "sy", "sz")


@dataclass
class PhaseSpacePoint:
    q: float
    p: float
    sx: float
    sy: float
    sz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p, self.sx, self.sy, self.sz], float)

    @classmethod
    def from_array(cls, y) -> "PhaseSpacePoint":
        return cls(*(float(v) for v in y))


def _pars(params: SystemParams):
    p = params
    return (p.kappa, p.Gamma, p.w + p.gamma, p.d0, p.detuning, float(p.n_atoms), p.coupling)


def drift(point, params: SystemParams) -> np.ndarray:
    """Deterministic rates of (q, p, Sx, Sy, Sz); ``point`` may be (5,) or (5, M)."""
    y = point.as_array() if isinstance(point, PhaseSpacePoint) else np.asarray(point, float)
    if y.ndim == 1:
        return _fallback.langevin_drift(y[:, None], _pars(params))[:, 0]
    return _fallback.langevin_drift(y, _pars(params))


def diffusion(means, params: SystemParams) -> np.ndarray:
    """Diffusion matrix D over (q, p, Sx, Sy, Sz), i.e. half of 2D.

    ``means`` are the ensemble means (Sx, Sy, Sz).
    """
    p = params
    return _fallback.diffusion_half(p.kappa, p.Gamma, p.w + p.gamma, float(p.n_atoms),
                                    p.gamma - p.w, tuple(means))


def noise_factor(matrix: np.ndarray, dt: float, clamp_rel: float = CLAMP_REL) -> np.ndarray:
    """Symmetric B with B B^T = 2 D dt.

    Eigenvalues in [-eps, 0) with eps = clamp_rel * trace are clamped to
    zero; anything more negative raises NonPositiveDiffusion.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    B, lmin = _fallback.sym_sqrt_factor(np.asarray(matrix, float), dt, clamp_rel)
    if B is None:
        raise NonPositiveDiffusion(
            f"diffusion matrix has eigenvalue {lmin:.3g}; below the first threshold",
            min_eigenvalue=lmin)
    return B


def max_dt(params: SystemParams, amplitude: float | None = None) -> float:
    """Largest admissible step, STEP_FACTOR over the fastest rate.

    The field amplitude defaults to the mean-field steady-state value.
    """
    if amplitude is None:
        amplitude = math.sqrt(max(steady_state_analytic(params).photons, 0.0)) + 1.0
    return STEP_FACTOR / rate_scale(params, amplitude)


# --- ensembles -------------------------------------------------------------

@dataclass
class Ensemble:
    y: np.ndarray  # (5, M)
    t: float = 0.0
    step_index: int = 0
    seed: int = 0

    @property
    def size(self) -> int:
        return self.y.shape[1]

    def means(self) -> np.ndarray:
        return self.y.mean(axis=1)

    def point(self, j: int) -> PhaseSpacePoint:
        return PhaseSpacePoint.from_array(self.y[:, j])

    def copy(self) -> "Ensemble":
        return Ensemble(self.y.copy(), self.t, self.step_index, self.seed)


def initial_ensemble(params: SystemParams, M: int, seed: int = 0) -> Ensemble:
    """Symmetric-ordering samples of the vacuum field and all-ground atoms.

    q, p ~ Normal(0, 1/4); each atom contributes sigma_x, sigma_y = +-1 with
    equal probability, giving Sx = sum sigma_x / (2N) with variance 1/(4N);
    Sz = -1 exactly.
    """
    if M < 2:
        raise ValueError("ensemble needs at least two trajectories")
    N = params.n_atoms
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), 0x1A17])))
    y = np.empty((5, M))
    y[0:2] = rng.normal(0.0, 0.5, size=(2, M))
    y[2:4] = (2.0 * rng.binomial(N, 0.5, size=(2, M)) - N) / (2.0 * N)
    y[4] = -1.0
    return Ensemble(y, 0.0, 0, seed)


def _raise_status(status, bad, lmin, ens: Ensemble, dt):
    if status == 5:
        raise NonPositiveDiffusion(
            f"diffusion matrix has eigenvalue {lmin:.3g} at t={ens.t:g}; below the first threshold",
            min_eigenvalue=lmin)
    if status == 4:
        raise TrajectoryDiverged(f"trajectory {bad} diverged near t={ens.t:g}",
                                 trajectory=int(bad), time=ens.t)
    if status != 0:
        raise RuntimeError(f"kernel status {status}")


def advance(ens: Ensemble, params: SystemParams, dt: float, n_steps: int,
            stride: int = 0, diffusion_scale: float = 1.0, threads: int = 1,
            backend: str = "auto") -> np.ndarray:
    """Advance ``ens`` in place; returns archived snapshots (n, 5, M) every ``stride`` steps."""
    kern = _backend.get(backend)
    p = params
    M = ens.size
    n_arch = n_steps // stride if stride > 0 else 0
    archive = np.zeros((max(n_arch, 1), 5, M))
    y = np.ascontiguousarray(ens.y)
    status, done, bad, lmin = kern.langevin_run(
        y, p.kappa, p.Gamma, p.w + p.gamma, p.d0, p.detuning, float(p.n_atoms), p.coupling,
        p.gamma - p.w, float(diffusion_scale), float(dt), int(n_steps),
        int(stride if stride > 0 else n_steps + 1), int(ens.seed), int(ens.step_index),
        archive, CLAMP_REL, int(threads))
    ens.y = y
    ens.step_index += int(done)
    ens.t += int(done) * dt
    _raise_status(status, bad, lmin, ens, dt)
    return archive[:n_arch]


def step(ens: Ensemble, params: SystemParams, dt: float, diffusion_scale: float = 1.0,
         backend: str = "auto") -> Ensemble:
    """One weak order-2 step with the shared ensemble-mean diffusion."""
    out = ens.copy()
    advance(out, params, dt, 1, diffusion_scale=diffusion_scale, backend=backend)
    return out


# --- archives --------------------------------------------------------------

@dataclass
class Archive:
    """Sampled trajectories; each component array has shape (n_samples, M)."""
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return self.q.shape[1]

    @property
    def field(self) -> np.ndarray:
        return self.q - 1j * self.p

    def save(self, path: str):
        """Write .npz (binary) or .csv (long format with a JSON header line)."""
        if str(path).endswith(".csv"):
            n, M = self.q.shape
            cols = [np.repeat(self.t, M), np.tile(np.arange(M), n)]
            cols += [getattr(self, c).ravel() for c in COMPONENTS]
            with open(path, "w") as fh:
                fh.write("# " + json.dumps(self.meta, sort_keys=True) + "\n")
                fh.write("t,trajectory,q,p,Sx,Sy,Sz\n")
                np.savetxt(fh, np.column_stack(cols), delimiter=",",
                           fmt=["%.17g", "%d"] + ["%.17g"] * 5)
        else:
            np.savez_compressed(path, t=self.t, meta=json.dumps(self.meta, sort_keys=True),
                                **{c: getattr(self, c) for c in COMPONENTS})

    @classmethod
    def load(cls, path: str) -> "Archive":
        if str(path).endswith(".csv"):
            with open(path) as fh:
                meta = json.loads(fh.readline()[2:])
            data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
            M = int(data[:, 1].max()) + 1
            n = data.shape[0] // M
            t = data[::M, 0]
            comps = {c: data[:, 2 + i].reshape(n, M) for i, c in enumerate(COMPONENTS)}
            return cls(t=t, meta=meta, **comps)
        with np.load(path) as z:
            return cls(t=z["t"], meta=json.loads(str(z["meta"])),
                       **{c: z[c] for c in COMPONENTS})


def default_stride(params: SystemParams, dt: float) -> int:
    """Samples at least 10 per predicted coherence time and at most every 100 steps."""
    from .phase_diffusion import linewidth
    lw = linewidth(params)
    k = 100
    if lw.valid and lw.linewidth > 0:
        k = min(k, int(0.1 / lw.linewidth / dt))
    return max(k, 1)


def run(params: SystemParams, M: int = 1000, t_relax: float | None = None,
        t_collect: float = 10.0, dt: float | None = None, seed: int = 0,
        sample_every: float | None = None, threads: int | None = None,
        diffusion_scale: float = 1.0, backend: str = "auto",
        ensemble: Ensemble | None = None) -> Archive:
    """Relax, then archive the ensemble over [t_relax, t_relax + t_collect).

    Raises NonPositiveDiffusion for w <= gamma: the symmetric-ordered
    description has no valid steady state below the first threshold.
    """
    p = params
    if p.w <= p.gamma and diffusion_scale != 0:
        raise NonPositiveDiffusion(
            f"w={p.w:g} <= gamma={p.gamma:g}: below the first threshold, not simulated")
    if M < 100:
        warnings.warn(f"ensemble of {M} trajectories is below the production minimum of 100",
                      SmallEnsembleWarning, stacklevel=2)
    limit = max_dt(p)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-9):
        raise StepSizeError(f"dt={dt:g} exceeds step bound {limit:g}")
    if t_relax is None:
        t_relax = max(10.0 / (p.w + p.gamma), 10.0 / p.kappa, 10.0 / p.Gamma)
    if threads is None:
        threads = int(os.environ.get("SUPERRAD_THREADS", "1"))
    stride = default_stride(p, dt) if sample_every is None else max(int(round(sample_every / dt)), 1)
    ens = initial_ensemble(p, M, seed) if ensemble is None else ensemble
    n_relax = int(math.ceil(t_relax / dt - 1e-9))
    n_collect = int(math.ceil(t_collect / dt - 1e-9))
    advance(ens, p, dt, n_relax, 0, diffusion_scale, threads, backend)
    t0 = ens.t
    snaps = advance(ens, p, dt, n_collect, stride, diffusion_scale, threads, backend)
    t = t0 + dt * stride * np.arange(1, snaps.shape[0] + 1)
    meta = dict(
        params={k: getattr(p, k) for k in ("n_atoms", "coupling", "kappa", "gamma", "w",
                                           "t2_inv", "omega_a", "omega_c")},
        M=M, dt=dt, seed=seed, t_relax=n_relax * dt, t_collect=n_collect * dt,
        stride=stride, diffusion_scale=diffusion_scale,
        initial_condition="vacuum field var 1/4; atoms ground, sigma_x,y = +-1",
        frame="rotating at omega_c",
    )
    return Archive(t=t, q=snaps[:, 0].copy(), p=snaps[:, 1].copy(), sx=snaps[:, 2].copy(),
                   sy=snaps[:, 3].copy(), sz=snaps[:, 4].copy(), meta=meta)


# --- diagnostics -----------------------------------------------------------

def _trend(series: np.ndarray, t: np.ndarray):
    """Slope of the ensemble-mean series with a jackknife error over trajectories."""
    tc = t - t.mean()
    sxx = (tc * tc).sum()
    per = (tc[:, None] * (series - series.mean(axis=0))).sum(axis=0) / sxx  # per-trajectory slopes
    M = per.size
    slope = per.mean()
    err = per.std(ddof=1) / math.sqrt(M)
    return float(slope), float(err)


def stationarity(archive: Archive, n_sigma: float = 2.0) -> dict:
    """Linear-trend test of the archived observables.

    Returns {name: (slope, stderr, stationary)} for photon intensity,
    Sz and Sx^2 + Sy^2.
    """
    obs = {
        "intensity": archive.q**2 + archive.p**2,
        "sz": archive.sz,
        "spin_length": archive.sx**2 + archive.sy**2,
    }
    out = {}
    for name, s in obs.items():
        slope, err = _trend(s, archive.t)
        out[name] = (slope, err, abs(slope) < n_sigma * err or err == 0 and slope == 0)
    return out
