"""Permutation-symmetric Liouville basis in the counts representation.

A basis element is labelled by ``(n_ee, n_gg, n_eg, n_ge)``: the number of
atoms whose single-atom Liouville factor is |e><e|, |g><g|, |e><g| and
|g><e| respectively.  The element itself is the *plain sum* of the tensor
products over all distinct arrangements of those factors among the N atoms
(no normalization prefactor).  Consequences of this convention:

* the trace of an element is the multinomial N!/(n_ee! n_gg!) if
  n_eg = n_ge = 0 and zero otherwise;
* a collective operator sum_j X_j, with X a single-atom superoperator
  sending factor A to sum_B S[B, A] B, maps element n to
  S[B, A] * (n_B + 1) * element(n - e_A + e_B) for B != A and to
  S[A, A] * n_A * element(n) for B == A.

The ket side of an element has n_ee + n_eg excited atoms and the bra side
n_ee + n_ge.
"""
from __future__ import annotations

from math import comb

import numpy as np
import scipy.sparse as sp

from ..errors import CapacityError

EE, GG, EG, GE = 0, 1, 2, 3
LABELS = ("ee", "gg", "eg", "ge")
# (ket, bra) atomic level of each single-atom factor; level 0 = e, 1 = g
_KETBRA = ((0, 0), (1, 1), (0, 1), (1, 0))

DEFAULT_MAX_ELEMENTS = 2_000_000


def basis_size(n_atoms: int) -> int:
    n = n_atoms
    return (n + 1) * (n + 2) * (n + 3) // 6


class CountsBasis:
    """Lexicographically ordered enumeration of all counts tuples summing to N."""

    def __init__(self, n_atoms: int, max_elements: int = DEFAULT_MAX_ELEMENTS):
        if n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        size = basis_size(n_atoms)
        if size > max_elements:
            raise CapacityError(f"basis of {size} elements for N={n_atoms} exceeds {max_elements}")
        n = n_atoms
        rows = [(a, b, c, n - a - b - c)
                for a in range(n + 1)
                for b in range(n + 1 - a)
                for c in range(n + 1 - a - b)]
        self.n_atoms = n
        self.counts = np.array(rows, dtype=np.int64)
        self.size = len(rows)
        assert self.size == size
        lookup = -np.ones((n + 1, n + 1, n + 1), dtype=np.int64)
        c = self.counts
        lookup[c[:, 0], c[:, 1], c[:, 2]] = np.arange(self.size)
        self._lookup = lookup
        self.ket_excited = c[:, EE] + c[:, EG]
        self.bra_excited = c[:, EE] + c[:, GE]
        diag = (c[:, EG] == 0) & (c[:, GE] == 0)
        self.trace_weights = np.where(diag, _multinomial(n, c[:, EE], c[:, GG]), 0.0)
        self.sz_weights = self.trace_weights * (c[:, EE] - c[:, GG])
        if n >= 2:
            pair = (c[:, EG] == 1) & (c[:, GE] == 1)
            self.pair_weights = np.where(pair, _multinomial(n - 2, c[:, EE], c[:, GG]), 0.0)
        else:
            self.pair_weights = np.zeros(self.size)
        self.conj_perm = self.index(np.stack([c[:, EE], c[:, GG], c[:, GE], c[:, EG]], axis=1))

    def index(self, counts) -> np.ndarray:
        counts = np.asarray(counts)
        return self._lookup[counts[..., 0], counts[..., 1], counts[..., 2]]

    def index_of(self, n_ee, n_gg, n_eg, n_ge) -> int:
        if n_ee + n_gg + n_eg + n_ge != self.n_atoms or min(n_ee, n_gg, n_eg, n_ge) < 0:
            raise ValueError("counts must be non-negative and sum to N")
        return int(self._lookup[n_ee, n_gg, n_eg])

    def collective(self, S: np.ndarray):
        """Sparse matrix of sum_j S_j, with S a 4x4 single-atom superoperator.

        Returns ``(T, src, dst, vals)``: T in CSR format plus the COO
        triplets, for callers that attach per-transition factors.
        """
        rows, cols, vals = [], [], []
        c = self.counts
        idx = np.arange(self.size)
        for A in range(4):
            has = c[:, A] > 0
            for B in range(4):
                s = S[B, A]
                if s == 0:
                    continue
                if A == B:
                    rows.append(idx[has])
                    cols.append(idx[has])
                    vals.append(s * c[has, A])
                else:
                    tgt = c[has].copy()
                    tgt[:, A] -= 1
                    tgt[:, B] += 1
                    rows.append(self.index(tgt))
                    cols.append(idx[has])
                    vals.append(s * (tgt[:, B]).astype(float))
        if rows:
            r = np.concatenate(rows)
            cc = np.concatenate(cols)
            v = np.concatenate(vals).astype(complex)
        else:
            r = cc = np.zeros(0, np.int64)
            v = np.zeros(0, complex)
        T = sp.csr_matrix((v, (r, cc)), shape=(self.size, self.size))
        return T, cc, r, v

    def __len__(self):
        return self.size


def _multinomial(n, a, b):
    """n! / (a! b!) for a + b = n, elementwise; zero elsewhere."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.array([float(comb(n, int(x))) if x + y == n and x >= 0 and y >= 0 else 0.0
                     for x, y in zip(a, b)])


def enumerate_basis(n_atoms: int, max_elements: int = DEFAULT_MAX_ELEMENTS):
    """Ordered list of counts tuples (n_ee, n_gg, n_eg, n_ge)."""
    return [tuple(int(x) for x in row) for row in CountsBasis(n_atoms, max_elements).counts]


# --- single-atom superoperators --------------------------------------------

_SM = np.array([[0, 0], [1, 0]], dtype=complex)   # |g><e| in (e, g) ordering
_SP = _SM.T.copy()
_SZ = np.diag([1.0, -1.0]).astype(complex)
_ID = np.eye(2, dtype=complex)


def _factor_matrix(k):
    ket, bra = _KETBRA[k]
    m = np.zeros((2, 2), complex)
    m[ket, bra] = 1.0
    return m


_FACTORS = [_factor_matrix(k) for k in range(4)]


def single_atom_superop(left=None, right=None) -> np.ndarray:
    """4x4 matrix of A -> left @ A @ right in the (ee, gg, eg, ge) basis."""
    L = _ID if left is None else left
    R = _ID if right is None else right
    S = np.zeros((4, 4), complex)
    for A in range(4):
        out = L @ _FACTORS[A] @ R
        for B in range(4):
            ket, bra = _KETBRA[B]
            S[B, A] = out[ket, bra]
    return S


SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z = _SM, _SP, _SZ
