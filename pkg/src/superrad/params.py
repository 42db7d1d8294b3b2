"""Model parameters and closed-form derived quantities.

All rates and frequencies are expressed in units of the spontaneous
emission rate ``gamma`` (which defaults to 1).  Frequencies ``omega_a`` and
``omega_c`` are measured from a common reference; only their difference
and the line-center formula use them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class ParameterError(ValueError):
    """Raised for physically invalid parameter combinations."""


@dataclass(frozen=True)
class SystemParams:
    n_atoms: int
    coupling: float
    kappa: float
    gamma: float = 1.0
    w: float = 0.0
    t2_inv: float = 0.0
    omega_a: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ParameterError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        for name in ("coupling", "kappa", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        for name in ("w", "t2_inv"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be non-negative and finite, got {v!r}")
        if not (math.isfinite(self.omega_a) and math.isfinite(self.omega_c)):
            raise ParameterError("omega_a and omega_c must be finite")

    @property
    def detuning(self) -> float:
        return self.omega_a - self.omega_c

    @property
    def Gamma(self) -> float:
        """Generalized single-atom decoherence w + gamma + 2/T2."""
        return self.w + self.gamma + 2.0 * self.t2_inv

    @property
    def d0(self) -> float:
        return (self.w - self.gamma) / (self.w + self.gamma)

    @property
    def cooperativity(self) -> float:
        return self.n_atoms * self.coupling**2 / (self.kappa * self.Gamma)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    Gamma: float
    d0: float
    cooperativity: float
    xi: float
    w1: float
    w2: float
    w_opt: float
    photons_opt: float
    line_center: float
    w_opt_negative: bool


class Regime(str, enum.Enum):
    SUPERRADIANT = "superradiant"
    CROSSOVER = "crossover"
    LASING = "lasing"


REGIME_LOWER = 0.5
REGIME_UPPER = 2.0


def crossover_xi(params: SystemParams) -> float:
    """Crossover parameter N Omega^2 / (8 kappa^2).

    Equal to the mean-field maximum photon number divided by N.
    """
    return params.n_atoms * params.coupling**2 / (8.0 * params.kappa**2)


def optimal_pump(params: SystemParams) -> float:
    n, g2, k = params.n_atoms, params.coupling**2, params.kappa
    return n * g2 / (2.0 * k) - params.gamma - params.t2_inv


def line_center(params: SystemParams) -> float:
    """Oscillation frequency (kappa*omega_a + Gamma*omega_c) / (kappa + Gamma)."""
    k, G = params.kappa, params.Gamma
    return (k * params.omega_a + G * params.omega_c) / (k + G)


def derive(params: SystemParams) -> DerivedParams:
    n, g2, k = params.n_atoms, params.coupling**2, params.kappa
    w_opt = optimal_pump(params)
    return DerivedParams(
        Gamma=params.Gamma,
        d0=params.d0,
        cooperativity=params.cooperativity,
        xi=crossover_xi(params),
        w1=params.gamma,
        w2=n * g2 / k,
        w_opt=w_opt,
        photons_opt=n * n * g2 / (8.0 * k * k),
        line_center=line_center(params),
        w_opt_negative=w_opt < 0,
    )


def regime_label(xi: float) -> Regime:
    if not (xi > 0) or not math.isfinite(xi):
        raise ParameterError(f"crossover parameter must be positive, got {xi!r}")
    if xi < REGIME_LOWER:
        return Regime.SUPERRADIANT
    if xi <= REGIME_UPPER:
        return Regime.CROSSOVER
    return Regime.LASING


def solve_kappa_for_xi(n_atoms: int, coupling_ratio: float, xi: float, gamma: float = 1.0):
    """Invert the (N, Omega^2/(kappa gamma), xi) parameterization.

    Given N, the ratio ``Omega^2 / (kappa gamma)`` and a target crossover
    parameter, return ``(kappa, Omega)``.
    """
    if n_atoms <= 0 or coupling_ratio <= 0 or xi <= 0 or gamma <= 0:
        raise ParameterError("all inputs must be positive")
    kappa = n_atoms * coupling_ratio * gamma / (8.0 * xi)
    coupling = math.sqrt(coupling_ratio * kappa * gamma)
    return kappa, coupling


def kappa_for_xi_fixed_coupling(n_atoms: int, coupling: float, xi: float) -> float:
    """Cavity decay giving crossover parameter ``xi`` at fixed N and Omega."""
    if xi <= 0:
        raise ParameterError("xi must be positive")
    return math.sqrt(n_atoms * coupling**2 / (8.0 * xi))


def params_for_xi(n_atoms: int, coupling_ratio: float, xi: float, **kw) -> SystemParams:
    """SystemParams for a (N, Omega^2/kappa gamma, xi) triple, pump at w_opt by default."""
    kappa, coupling = solve_kappa_for_xi(n_atoms, coupling_ratio, xi, kw.get("gamma", 1.0))
    p = SystemParams(n_atoms=n_atoms, coupling=coupling, kappa=kappa, **kw)
    if "w" not in kw:
        p = p.with_(w=max(optimal_pump(p), 0.0))
    return p


def rate_scale(params: SystemParams, amplitude: float = 1.0) -> float:
    """Fastest rate in the semiclassical dynamics.

    ``amplitude`` bounds the field modulus |a|; it sets the Rabi frequency
    Omega |a| at which the field rotates the atomic Bloch vectors.  The
    collective exchange frequency is bounded by Omega sqrt(N).
    """
    p = params
    return max(
        p.kappa,
        p.Gamma,
        p.w + p.gamma,
        abs(p.detuning),
        p.coupling * math.sqrt(p.n_atoms),
        p.coupling * max(amplitude, 1.0),
    )
