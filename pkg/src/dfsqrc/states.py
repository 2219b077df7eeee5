"""Labeled teacher states and logarithmic negativity.

Two families are generated: two-qubit states (product of random qubit states
versus Ginibre states filtered by log-negativity) and two-mode Fock states
truncated at ``n_fock`` levels (product of random mode states versus squeezed
thermal states).
"""

from __future__ import annotations

import csv
import math
import struct
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, GenerationError
from .hilbert import lowering_op
from .tensor import check_shape, expm, herm_eigvals, partial_transpose, trace_norm

PRODUCT = 0
ENTANGLED = 1

NU_MIN = 0.15
N_FOCK = 4
MAX_ATTEMPTS = 100_000

S_RANGE = (0.8, 0.95)
PHI_RANGE = (0.5 - math.pi / 10, 0.5 + math.pi / 10)


@dataclass(frozen=True)
class TeacherState:
    rho: np.ndarray
    dims: tuple[int, int]
    label: int
    logneg: float
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SqueezeParams:
    s: float
    phi: float
    theta: float

    def __post_init__(self):
        if not S_RANGE[0] <= self.s <= S_RANGE[1]:
            raise DomainError(f"s={self.s} outside {S_RANGE}")
        if not PHI_RANGE[0] <= self.phi <= PHI_RANGE[1]:
            raise DomainError(f"phi={self.phi} outside {PHI_RANGE}")
        if not 0.0 <= self.theta < 2 * math.pi:
            raise DomainError(f"theta={self.theta} outside [0, 2pi)")

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "SqueezeParams":
        s = rng.uniform(*S_RANGE)
        phi = rng.uniform(*PHI_RANGE)
        theta = rng.uniform(0.0, 2 * math.pi)
        return cls(float(s), float(phi), float(theta))

    @property
    def alpha(self) -> complex:
        return self.s * math.sin(self.phi) * complex(math.cos(self.theta), math.sin(self.theta))


def log_negativity(rho, shape: Sequence[int], formula: str = "trace_norm") -> float:
    """log2 of the trace norm of the partial transpose on the second factor.

    ``formula="literal"`` evaluates ``log2 Tr(G G^H)`` instead; that quantity is
    the log purity, not an entanglement monotone, and is kept for audits only.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = check_shape(shape, rho.shape[0])
    g = partial_transpose(rho, dims, len(dims) - 1)
    if formula == "literal":
        return math.log2(float(np.real(np.vdot(g, g))))
    if formula != "trace_norm":
        raise DomainError(f"unknown log-negativity formula {formula!r}")
    value = math.log2(trace_norm(g))
    # ||G||_1 >= Tr G = 1, so small negatives are round-off
    return 0.0 if -1e-12 <= value < 0.0 else value


def random_density_matrix(rng: np.random.Generator, d: int) -> np.ndarray:
    """Ginibre (Hilbert-Schmidt) random density matrix."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(rng: np.random.Generator, d: int) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def _product(rng: np.random.Generator, d: int) -> TeacherState:
    rho = np.kron(random_density_matrix(rng, d), random_density_matrix(rng, d))
    return TeacherState(rho, (d, d), PRODUCT, log_negativity(rho, (d, d)))


def random_product_two_qubit(rng: np.random.Generator) -> TeacherState:
    return _product(rng, 2)


def random_product_fock(rng: np.random.Generator, n_fock: int = N_FOCK) -> TeacherState:
    return _product(rng, n_fock)


def random_entangled_two_qubit(
    rng: np.random.Generator, nu_min: float = NU_MIN, max_attempts: int = MAX_ATTEMPTS
) -> TeacherState:
    if not 0.0 < nu_min <= 1.0:
        raise DomainError(f"nu_min must lie in (0, 1], got {nu_min}")
    for _ in range(max_attempts):
        rho = random_density_matrix(rng, 4)
        ln = log_negativity(rho, (2, 2))
        if ln >= nu_min:
            return TeacherState(rho, (2, 2), ENTANGLED, ln)
    raise GenerationError(f"no two-qubit state with log-negativity >= {nu_min} in {max_attempts} draws")


def mean_occupation(s: float, phi: float) -> tuple[float, float]:
    """Thermal mean occupation ``s^2 cos^2 phi`` and inverse temperature ``ln(1 + 1/n)``."""
    if s <= 0:
        raise DomainError(f"s must be positive, got {s}")
    n_bar = s**2 * math.cos(phi) ** 2
    if n_bar <= 0.0:
        raise DomainError("zero mean occupation gives infinite beta")
    return n_bar, math.log1p(1.0 / n_bar)


def thermal_two_mode(beta: float, n_fock: int = N_FOCK) -> np.ndarray:
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    weights = np.exp(-beta * np.arange(n_fock))
    p = weights / weights.sum()
    return np.diag(np.kron(p, p)).astype(complex)


def squeeze_operator(alpha: complex, n_fock: int = N_FOCK) -> np.ndarray:
    a = lowering_op(n_fock)
    eye = np.eye(n_fock)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    gen = alpha * (a1.conj().T @ a2.conj().T) - np.conj(alpha) * (a1 @ a2)
    return expm(gen)


def squeezed_thermal(params: SqueezeParams, n_fock: int = N_FOCK) -> np.ndarray:
    _, beta = mean_occupation(params.s, params.phi)
    sq = squeeze_operator(params.alpha, n_fock)
    ups = sq @ thermal_two_mode(beta, n_fock) @ sq.conj().T
    return 0.5 * (ups + ups.conj().T)


def random_squeezed_thermal(
    rng: np.random.Generator,
    n_fock: int = N_FOCK,
    nu_min: float = NU_MIN,
    max_attempts: int = MAX_ATTEMPTS,
) -> TeacherState:
    """Squeezed thermal state redrawn until its log-negativity reaches ``nu_min``."""
    for _ in range(max_attempts):
        params = SqueezeParams.sample(rng)
        ups = squeezed_thermal(params, n_fock)
        ln = log_negativity(ups, (n_fock, n_fock))
        if ln >= nu_min:
            p = {"s": params.s, "phi": params.phi, "theta": params.theta}
            return TeacherState(ups, (n_fock, n_fock), ENTANGLED, ln, p)
    raise GenerationError(f"no squeezed state with log-negativity >= {nu_min} in {max_attempts} draws")


def check_teacher(state: TeacherState, nu_min: float = NU_MIN, tol: float = 1e-10) -> list[str]:
    """Return the list of violated TeacherState invariants (empty when valid)."""
    problems = []
    rho = state.rho
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        problems.append("hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        problems.append("unit_trace")
    if herm_eigvals(rho, tol=1e-8).min() < -tol:
        problems.append("positive")
    if state.label == ENTANGLED and state.logneg < nu_min:
        problems.append("entangled_logneg")
    if state.label == PRODUCT and state.logneg > 1e-9:
        problems.append("product_logneg")
    return problems


# -- dataset serialization --------------------------------------------------

PARAM_KEYS = ("s", "phi", "theta")
_MAGIC = b"DFSQRCT1"


def _record(state: TeacherState) -> list[float]:
    row = [float(state.label), float(state.logneg)]
    row += [float(state.params.get(k, math.nan)) for k in PARAM_KEYS]
    flat = state.rho.ravel()
    inter = np.empty(2 * flat.size)
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    return row + inter.tolist()


def _from_record(row: Sequence[float], dims: tuple[int, int]) -> TeacherState:
    d = dims[0] * dims[1]
    label, ln = int(row[0]), float(row[1])
    params = {k: float(v) for k, v in zip(PARAM_KEYS, row[2:5]) if not math.isnan(v)}
    inter = np.asarray(row[5:], dtype=float)
    rho = (inter[0::2] + 1j * inter[1::2]).reshape(d, d)
    return TeacherState(rho, dims, label, ln, params)


def write_dataset_csv(states: Sequence[TeacherState], path: str | Path) -> None:
    """One row per sample: label, logneg, s, phi, theta, then re/im pairs row-major."""
    dims = states[0].dims
    d = dims[0] * dims[1]
    header = ["label", "logneg", *PARAM_KEYS]
    for i in range(d):
        for j in range(d):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"# dims={dims[0]}x{dims[1]}"])
        w.writerow(header)
        for st in states:
            w.writerow([f"{x:.17g}" for x in _record(st)])


def read_dataset_csv(path: str | Path) -> list[TeacherState]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    d1, d2 = (int(x) for x in rows[0][0].split("=")[1].split("x"))
    return [_from_record([float(x) for x in r], (d1, d2)) for r in rows[2:]]


def write_dataset_binary(states: Sequence[TeacherState], path: str | Path) -> None:
    """Binary layout, all little-endian.

    Header: 8-byte magic ``DFSQRCT1``, then int64 ``n_records``, ``d1``, ``d2``.
    Each record is ``5 + 2*(d1*d2)**2`` float64 values in the CSV column order.
    """
    dims = states[0].dims
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", len(states), dims[0], dims[1]))
        for st in states:
            fh.write(np.asarray(_record(st), dtype="<f8").tobytes())


def read_dataset_binary(path: str | Path) -> list[TeacherState]:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError(f"{path}: not a teacher dataset file")
    n, d1, d2 = struct.unpack("<qqq", raw[8:32])
    width = 5 + 2 * (d1 * d2) ** 2
    data = np.frombuffer(raw[32:], dtype="<f8").reshape(n, width)
    return [_from_record(row, (d1, d2)) for row in data]
