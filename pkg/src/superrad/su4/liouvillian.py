"""Master-equation generator in the counts basis.

The generator is split into

* ``atomic``: single-atom terms (detuning, spontaneous emission, repumping,
  dephasing) acting on the atoms only;
* four coupling terms, each a collective single-atom map times a photon
  ladder operator on the ket or bra side;
* the cavity damping, which acts on the photon indices only.

For the quantum-jump unraveling the four jump superoperators are removed
from the atomic part and from the cavity part.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..params import SystemParams
from .basis import SIGMA_MINUS as SM, SIGMA_PLUS as SP, SIGMA_Z as SZ
from .basis import CountsBasis, single_atom_superop as sao

# Photon ladder action of each coupling term, and the photon-number count
# (on the ket side "x" or bra side "y", of the source or target element)
# whose square root is the ladder factor inside a fixed-quanta sector.
#   name        atomic map      coefficient      photon op
COUPLING_TERMS = (
    ("a+ S- rho", dict(left=SM), -0.5j, "ket_raise", ("ket", "dst")),
    ("a S+ rho", dict(left=SP), -0.5j, "ket_lower", ("ket", "src")),
    ("rho S- a+", dict(right=SM), 0.5j, "bra_lower", ("bra", "src")),
    ("rho S+ a", dict(right=SP), 0.5j, "bra_raise", ("bra", "dst")),
)


def atomic_superop(params: SystemParams, effective: bool = False) -> np.ndarray:
    """Single-atom part of the generator as a 4x4 matrix.

    With ``effective`` the jump terms (sandwiches) are dropped, leaving the
    non-trace-preserving part used between quantum jumps.
    """
    p = params
    S = -0.5j * p.detuning * (sao(left=SZ) - sao(right=SZ))
    S = S - 0.5 * p.gamma * (sao(left=SP @ SM) + sao(right=SP @ SM))
    S = S - 0.5 * p.w * (sao(left=SM @ SP) + sao(right=SM @ SP))
    S = S - 0.5 * p.t2_inv * np.eye(4)
    if not effective:
        S = S + jump_superops(p)[:3].sum(axis=0)
    return S


def jump_superops(params: SystemParams) -> np.ndarray:
    """Atomic jump maps (repump, spontaneous, dephasing) as 4x4 matrices."""
    p = params
    return np.array([
        p.w * sao(left=SP, right=SM),
        p.gamma * sao(left=SM, right=SP),
        0.5 * p.t2_inv * sao(left=SZ, right=SZ),
    ])


@dataclass
class CouplingTerm:
    name: str
    coeff: complex
    photon_op: str
    side: str
    ref: str
    T: sp.csr_matrix
    src: np.ndarray
    dst: np.ndarray
    vals: np.ndarray


def coupling_terms(basis: CountsBasis, params: SystemParams):
    terms = []
    for name, ops, coeff, photon_op, (side, ref) in COUPLING_TERMS:
        T, src, dst, vals = basis.collective(sao(**ops))
        c = coeff * params.coupling
        terms.append(CouplingTerm(name, c, photon_op, side, ref, T * c, src, dst, vals * c))
    return terms


def photon_ops(m_cutoff: int):
    a = sp.diags(np.sqrt(np.arange(1, m_cutoff)), 1, shape=(m_cutoff, m_cutoff),
                 format="csr", dtype=complex)
    return a, a.getH().tocsr()


def full_generator(basis: CountsBasis, params: SystemParams, m_cutoff: int) -> sp.csr_matrix:
    """Sparse Liouvillian on vec(C) with C of shape (basis.size, M, M), row-major."""
    M = m_cutoff
    a, ad = photon_ops(M)
    eye_m = sp.identity(M, format="csr", dtype=complex)
    eye_mm = sp.identity(M * M, format="csr", dtype=complex)
    # vec(L X R) = kron(L, R^T) vec(X) for row-major vec
    ph = {
        "ket_raise": sp.kron(ad, eye_m),
        "ket_lower": sp.kron(a, eye_m),
        "bra_lower": sp.kron(eye_m, ad.T),
        "bra_raise": sp.kron(eye_m, a.T),
    }
    T0, *_ = basis.collective(atomic_superop(params))
    L = sp.kron(T0, eye_mm)
    for term in coupling_terms(basis, params):
        L = L + sp.kron(term.T, ph[term.photon_op])
    n_op = (ad @ a)
    cav = params.kappa * (sp.kron(a, ad.T) - 0.5 * sp.kron(n_op, eye_m) - 0.5 * sp.kron(eye_m, n_op.T))
    L = L + sp.kron(sp.identity(basis.size, format="csr"), cav)
    return L.tocsr()
