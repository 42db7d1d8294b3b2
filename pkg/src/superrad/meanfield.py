"""Mean-field (noise-free) dynamics and closed-form steady state.

Dynamics are integrated in the frame rotating at the cavity frequency, so
only the detuning ``delta = omega_a - omega_c`` enters::

    da/dt   = -(kappa/2) a - i (N Omega / 2) S-
    dS-/dt  = -(Gamma/2 + i delta) S- + i (Omega/2) a Sz
    dSz/dt  = -(w + gamma)(Sz - d0) + i Omega (a* S- - a S+)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams, line_center, rate_scale


class IntegrationError(RuntimeError):
    pass


class StepSizeError(ValueError):
    pass


@dataclass
class MeanFieldState:
    a0: complex = 0.0
    s_minus: complex = 0.0
    sz: float = -1.0

    @property
    def photons(self) -> float:
        return abs(self.a0) ** 2

    def spin_length_excess(self) -> float:
        return abs(self.s_minus) ** 2 + 0.25 * self.sz**2 - 0.25


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    a0: np.ndarray
    s_minus: np.ndarray
    sz: np.ndarray

    @property
    def photons(self) -> np.ndarray:
        return np.abs(self.a0) ** 2

    def final(self) -> MeanFieldState:
        return MeanFieldState(complex(self.a0[-1]), complex(self.s_minus[-1]), float(self.sz[-1]))


@dataclass(frozen=True)
class SteadyStateSolution:
    sz: float
    omega: float
    photons: float
    above_threshold: bool
    photons_detuned: float

    @property
    def nonphysical(self) -> bool:
        return self.photons < 0


def _rhs(p: SystemParams):
    half_k = 0.5 * p.kappa
    half_G = 0.5 * p.Gamma
    delta = p.detuning
    nO2 = 0.5 * p.n_atoms * p.coupling
    O2 = 0.5 * p.coupling
    O = p.coupling
    wg = p.w + p.gamma
    d0 = p.d0

    def f(a, s, z):
        da = -half_k * a - 1j * nO2 * s
        ds = -(half_G + 1j * delta) * s + 1j * O2 * a * z
        dz = -wg * (z - d0) - 2.0 * O * (a.conjugate() * s).imag
        return da, ds, dz

    return f


def max_stable_dt(params: SystemParams, amplitude: float = 1.0, factor: float = 0.1) -> float:
    return factor / rate_scale(params, amplitude)


def integrate(params: SystemParams, state0: MeanFieldState | None = None, t_end: float = 10.0,
              dt: float | None = None, sample_every: int = 1) -> MeanFieldTrajectory:
    """Fixed-step classical RK4 solution of the mean-field equations."""
    if state0 is None:
        state0 = MeanFieldState()
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    # field amplitude can grow to the mean-field optimum; budget the step for it
    amp = max(abs(state0.a0), math.sqrt(max(params.n_atoms**2 * params.coupling**2
                                             / (8 * params.kappa**2), 1.0)))
    limit = max_stable_dt(params, amp)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:g} exceeds stability bound {limit:g}")
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    dt = t_end / n_steps
    f = _rhs(params)
    a, s, z = complex(state0.a0), complex(state0.s_minus), complex(state0.sz)
    n_out = n_steps // sample_every + 1
    ts = np.empty(n_out)
    A = np.empty(n_out, complex)
    S = np.empty(n_out, complex)
    Z = np.empty(n_out)
    ts[0], A[0], S[0], Z[0] = 0.0, a, s, z.real
    k = 1
    h2 = 0.5 * dt
    for i in range(1, n_steps + 1):
        a1, s1, z1 = f(a, s, z)
        a2, s2, z2 = f(a + h2 * a1, s + h2 * s1, z + h2 * z1)
        a3, s3, z3 = f(a + h2 * a2, s + h2 * s2, z + h2 * z2)
        a4, s4, z4 = f(a + dt * a3, s + dt * s3, z + dt * z3)
        a += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        s += dt / 6 * (s1 + 2 * s2 + 2 * s3 + s4)
        z += dt / 6 * (z1 + 2 * z2 + 2 * z3 + z4)
        if i % sample_every == 0:
            if not (math.isfinite(abs(a)) and math.isfinite(abs(s)) and math.isfinite(z.real)):
                raise IntegrationError(f"non-finite mean-field state at t={i * dt:g}: "
                                       f"a={a}, S-={s}, Sz={z}")
            ts[k], A[k], S[k], Z[k] = i * dt, a, s, z.real
            k += 1
    return MeanFieldTrajectory(ts[:k], A[:k], S[:k], Z[:k])


def steady_state_analytic(params: SystemParams) -> SteadyStateSolution:
    """Closed-form steady state.

    ``photons`` uses the small-detuning form N(w+gamma)/(2 kappa) (d0 - 1/C);
    ``photons_detuned`` substitutes the exact-detuning inversion.  Either may
    be negative, which means the system is below threshold.
    """
    omega = line_center(params)
    dc = params.omega_c - omega
    da = params.omega_a - omega
    n, g2, k, G = params.n_atoms, params.coupling**2, params.kappa, params.Gamma
    sz = ((k + 2j * dc) * (G + 2j * da) / (n * g2)).real
    pref = n * (params.w + params.gamma) / (2.0 * k)
    coop = params.cooperativity
    photons = pref * (params.d0 - 1.0 / coop)
    return SteadyStateSolution(
        sz=sz,
        omega=omega,
        photons=photons,
        above_threshold=params.d0 > 1.0 / coop,
        photons_detuned=pref * (params.d0 - sz),
    )


def sensitivity(params: SystemParams) -> tuple[float, float]:
    """Line-center derivatives (d omega / d omega_c, d omega / d omega_a)."""
    k, G = params.kappa, params.Gamma
    if not k + G > 0:
        raise ValueError("kappa + Gamma must be positive")
    return G / (k + G), k / (k + G)


@dataclass
class PhotonCurve:
    w: np.ndarray
    photons: np.ndarray
    sz: np.ndarray
    above_threshold: np.ndarray

    def argmax_w(self) -> float:
        return float(self.w[int(np.argmax(self.photons))])


def photon_curve(params: SystemParams, w_grid) -> PhotonCurve:
    w_grid = np.asarray(w_grid, dtype=float)
    if not np.all(np.isfinite(w_grid)) or np.any(np.diff(w_grid) <= 0):
        raise ValueError("w_grid must be finite and strictly ascending")
    sols = [steady_state_analytic(params.with_(w=float(w))) for w in w_grid]
    return PhotonCurve(
        w=w_grid,
        photons=np.array([s.photons for s in sols]),
        sz=np.array([s.sz for s in sols]),
        above_threshold=np.array([s.above_threshold for s in sols]),
    )
