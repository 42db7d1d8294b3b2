"""Closed-form linewidth of the phase-diffusion model.

    dnu = (C + 1) / (2 (C d0 - 1)) * Gamma / (w + gamma) * Omega^2 kappa / (kappa + Gamma)^2

with C the generalized cooperativity N Omega^2 / (kappa Gamma).  ``dnu``
is the coefficient of the accumulated phase variance, <(dphi)^2> = dnu t,
so the field correlation decays as exp(-dnu t / 2): a Lorentzian of full
width dnu in angular units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams, optimal_pump

# Informational marker only; the approximation's breakdown is not quantified.
CAVEAT_RELATIVE_DISTANCE = 0.5


@dataclass(frozen=True)
class PhaseDiffusionResult:
    linewidth: float
    valid: bool
    far_from_optimum: bool = False


def linewidth(params: SystemParams) -> PhaseDiffusionResult:
    p = params
    C = p.cooperativity
    d0 = p.d0
    w_opt = optimal_pump(p)
    far = w_opt <= 0 or abs(p.w - w_opt) > CAVEAT_RELATIVE_DISTANCE * w_opt
    if not C * d0 > 1.0:
        return PhaseDiffusionResult(math.nan, False, far)
    G, k = p.Gamma, p.kappa
    dnu = ((C + 1.0) / (2.0 * (C * d0 - 1.0)) * G / (p.w + p.gamma)
           * p.coupling**2 * k / (k + G) ** 2)
    return PhaseDiffusionResult(dnu, True, far)


def linewidth_limit(params: SystemParams) -> float:
    """Large-cooperativity limit Gamma Omega^2 kappa / (2 d0 (w+gamma) (kappa+Gamma)^2)."""
    p = params
    G, k = p.Gamma, p.kappa
    return G * p.coupling**2 * k / (2.0 * p.d0 * (p.w + p.gamma) * (k + G) ** 2)


@dataclass
class LinewidthCurve:
    w: np.ndarray
    linewidth: np.ndarray
    valid: np.ndarray
    far_from_optimum: np.ndarray


def linewidth_curve(params: SystemParams, w_grid) -> LinewidthCurve:
    w_grid = np.asarray(w_grid, dtype=float)
    if np.any(np.diff(w_grid) <= 0):
        raise ValueError("w_grid must be strictly ascending")
    res = [linewidth(params.with_(w=float(w))) for w in w_grid]
    return LinewidthCurve(
        w=w_grid,
        linewidth=np.array([r.linewidth for r in res]),
        valid=np.array([r.valid for r in res]),
        far_from_optimum=np.array([r.far_from_optimum for r in res]),
    )
