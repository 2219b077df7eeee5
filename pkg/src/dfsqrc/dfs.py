"""Singlet (decoherence-free) subspace of an even number of qubits."""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DomainError
from .hilbert import CompositeSpace, total_spin_squared
from .tensor import herm_eig

NULL_TOL = 1e-8
_GS_TOL = 1e-6
_PHASE_TOL = 1e-10


def singlet_count(n_qubits: int) -> int:
    """Multiplicity of the j = 0 irrep in the n-fold product of spin 1/2."""
    if n_qubits < 2 or n_qubits % 2:
        raise DomainError(f"singlets exist only for even n >= 2, got {n_qubits}")
    # multiplicities keyed by 2j; adding one spin-1/2 branches j -> j +- 1/2
    mult = {1: 1}
    for _ in range(n_qubits - 1):
        nxt: dict[int, int] = {}
        for two_j, m in mult.items():
            nxt[two_j + 1] = nxt.get(two_j + 1, 0) + m
            if two_j > 0:
                nxt[two_j - 1] = nxt.get(two_j - 1, 0) + m
        mult = nxt
    return mult.get(0, 0)


@dataclass(frozen=True)
class SingletBasis:
    vectors: np.ndarray  # (2**n, n_singlets), orthonormal columns
    n_qubits: int

    @property
    def size(self) -> int:
        return self.vectors.shape[1]


def _canonical_basis(null_vectors: np.ndarray, count: int) -> np.ndarray:
    q = null_vectors @ null_vectors.conj().T
    accepted: list[np.ndarray] = []
    for k in range(q.shape[0]):
        v = q[:, k].copy()
        for _ in range(2):
            for u in accepted:
                v -= u * (u.conj() @ v)
        norm = np.linalg.norm(v)
        if norm < _GS_TOL:
            continue
        v /= norm
        lead = v[np.flatnonzero(np.abs(v) > _PHASE_TOL)[0]]
        v *= abs(lead) / lead
        accepted.append(v)
        if len(accepted) == count:
            break
    return np.column_stack(accepted)


@functools.lru_cache(maxsize=None)
def build_singlet_basis(n_qubits: int = 6) -> SingletBasis:
    """Orthonormal basis of the null space of the total-spin Casimir.

    The basis is fixed by Gram-Schmidt over the null-space projections of the
    computational basis vectors in lexicographic order, with the first
    nonzero coordinate of every vector made real positive.
    """
    count = singlet_count(n_qubits)
    s2 = total_spin_squared(CompositeSpace.qubits(n_qubits))
    # singlets have S_z = 0 and S^2 commutes with S_z, so diagonalize that sector only;
    # coordinates outside it are then exactly zero
    sector = np.flatnonzero(np.array([bin(i).count("1") for i in range(2**n_qubits)]) == n_qubits // 2)
    vals, vecs = herm_eig(s2[np.ix_(sector, sector)])
    null = np.zeros((2**n_qubits, int(np.sum(vals < NULL_TOL))), dtype=complex)
    null[sector] = vecs[:, vals < NULL_TOL]
    if null.shape[1] != count:
        raise ConsistencyError(f"null space of S^2 has dimension {null.shape[1]}, expected {count}")
    basis = _canonical_basis(null, count)
    if basis.shape[1] != count:
        raise ConsistencyError("Gram-Schmidt canonicalization lost rank")
    basis.setflags(write=False)
    return SingletBasis(basis, n_qubits)


def singlet_projectors(basis: SingletBasis) -> np.ndarray:
    """Stack of rank-one projectors ``|I><I|``, shape ``(k, d, d)``."""
    v = basis.vectors
    return np.einsum("ik,jk->kij", v, v.conj())


def dump_basis_csv(basis: SingletBasis, path: str | Path) -> None:
    """Write the basis as one row per computational index with re/im columns."""
    header = ["index"]
    for k in range(basis.size):
        header += [f"re_{k}", f"im_{k}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(basis.vectors):
            cells = [str(i)]
            for z in row:
                cells += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            w.writerow(cells)


def load_basis_csv(path: str | Path, n_qubits: int) -> SingletBasis:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    data = np.array([[float(x) for x in r[1:]] for r in rows])
    return SingletBasis(data[:, 0::2] + 1j * data[:, 1::2], n_qubits)
