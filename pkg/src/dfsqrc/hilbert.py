"""Subsystem operators embedded into composite tensor-product spaces.

Conventions used throughout the package:

* qubit basis ``|0>`` = ground, ``|1>`` = excited;
* ``sigma_minus = |0><1|`` equals ``lowering_op(2)`` and ``sigma_z = diag(-1, +1)``,
  so ``sigma_z = 2 b^H b - 1``;
* composite spaces list reservoir qubits first and teacher subsystems last.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .tensor import check_shape

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)

N_RESERVOIR = 6


@dataclass(frozen=True)
class CompositeSpace:
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        check_shape(dims, math.prod(dims))
        if len(self.labels) != len(dims):
            raise DimensionError(f"{len(self.labels)} labels for {len(dims)} subsystems")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @classmethod
    def qubits(cls, n: int) -> "CompositeSpace":
        return cls((2,) * n, tuple(f"q{i}" for i in range(n)))


def reservoir_space(n_qubits: int = N_RESERVOIR) -> CompositeSpace:
    return CompositeSpace((2,) * n_qubits, tuple(f"r{i}" for i in range(n_qubits)))


def joint_space(teacher_dims: Sequence[int], n_reservoir: int = N_RESERVOIR) -> CompositeSpace:
    """Reservoir qubits ``0..n-1`` followed by the teacher subsystems."""
    labels = [f"r{i}" for i in range(n_reservoir)]
    labels += [f"t{n_reservoir + k}" for k in range(len(teacher_dims))]
    return CompositeSpace((2,) * n_reservoir + tuple(teacher_dims), tuple(labels))


def lowering_op(d: int) -> np.ndarray:
    if d < 2:
        raise DomainError(f"lowering operator needs d >= 2, got {d}")
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def embed_many(ops: Mapping[int, np.ndarray], space: CompositeSpace) -> np.ndarray:
    """Tensor product with ``ops[site]`` at each listed site and identities elsewhere."""
    for site, op in ops.items():
        if not 0 <= site < space.n_sites:
            raise DimensionError(f"site {site} out of range for {space.n_sites} subsystems")
        if np.shape(op) != (space.dims[site], space.dims[site]):
            raise DimensionError(
                f"operator of shape {np.shape(op)} does not act on subsystem {site} "
                f"of dimension {space.dims[site]}"
            )
    # identity runs collapse into one np.eye so only a handful of krons are needed
    out = np.ones((1, 1), dtype=complex)
    run = 1
    for site, d in enumerate(space.dims):
        if site in ops:
            if run > 1:
                out = np.kron(out, np.eye(run, dtype=complex))
                run = 1
            out = np.kron(out, np.asarray(ops[site], dtype=complex))
        else:
            run *= d
    if run > 1:
        out = np.kron(out, np.eye(run, dtype=complex))
    return out


def embed(op, site: int, space: CompositeSpace) -> np.ndarray:
    return embed_many({site: op}, space)


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """An operator acting on one subsystem of a composite space.

    Behaves as its dense embedding under ``np.asarray`` while letting
    consumers exploit the tensor structure.
    """

    op: np.ndarray
    site: int
    space: CompositeSpace

    def __post_init__(self):
        op = np.asarray(self.op, dtype=complex)
        if not 0 <= self.site < self.space.n_sites:
            raise DimensionError(f"site {self.site} out of range for {self.space.n_sites} subsystems")
        if op.shape != (self.space.dims[self.site],) * 2:
            raise DimensionError(f"operator of shape {op.shape} does not fit subsystem {self.site}")
        object.__setattr__(self, "op", op)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.space.dim, self.space.dim)

    def full(self) -> np.ndarray:
        return embed(self.op, self.site, self.space)

    def dag(self) -> "LocalOperator":
        return LocalOperator(self.op.conj().T, self.site, self.space)

    def __array__(self, dtype=None, copy=None):
        m = self.full()
        return m if dtype is None else m.astype(dtype)


def _require_qubits(space: CompositeSpace) -> None:
    if any(d != 2 for d in space.dims):
        raise DimensionError(f"total spin needs all subsystems of dimension 2, got {space.dims}")


def total_spin(space: CompositeSpace, component: str) -> np.ndarray:
    """Collective ``S^alpha = sum_i sigma^alpha_i`` for alpha in plus, minus, z."""
    _require_qubits(space)
    single = {"plus": SIGMA_PLUS, "minus": SIGMA_MINUS, "z": SIGMA_Z}
    try:
        op = single[component]
    except KeyError:
        raise DomainError(f"component must be one of {sorted(single)}, got {component!r}") from None
    if component == "z":
        # diagonal: avoid building n dense embeddings
        bits = (np.arange(space.dim)[:, None] >> np.arange(space.n_sites)[None, ::-1]) & 1
        return np.diag((2 * bits.sum(axis=1) - space.n_sites).astype(float)).astype(complex)
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for i in range(space.n_sites):
        out += embed(op, i, space)
    return out


def total_spin_squared(space: CompositeSpace) -> np.ndarray:
    """Casimir ``S_x^2 + S_y^2 + (S_z/2)^2`` with eigenvalues ``j(j+1)``.

    ``S_x = (S^+ + S^-)/2`` and ``S_y = (S^+ - S^-)/2i`` are spin-1/2 sums, while
    ``S_z`` sums Pauli matrices, hence the factor 1/2 on the z part.
    """
    sp = total_spin(space, "plus")
    sm = total_spin(space, "minus")
    sz = total_spin(space, "z")
    sx = 0.5 * (sp + sm)
    sy = (sp - sm) / 2j
    jz = 0.5 * sz
    s2 = sx @ sx + sy @ sy + jz @ jz
    return 0.5 * (s2 + s2.conj().T)


def number_op(site: int, space: CompositeSpace) -> np.ndarray:
    a = lowering_op(space.dims[site]) if 0 <= site < space.n_sites else None
    if a is None:
        raise DimensionError(f"site {site} out of range for {space.n_sites} subsystems")
    return embed(a.conj().T @ a, site, space)
