"""Dense complex linear-algebra kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  A
"shape" is a sequence of subsystem dimensions describing how a matrix index
factorizes into a tensor product; subsystem 0 is the most significant digit
of the flat index.
"""

from __future__ import annotations

import math
import string
from collections.abc import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

HERMITIAN_TOL = 1e-10

# Pade(13) coefficients and the matching 1-norm bound (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got array of ndim {m.ndim}")
    return m


def check_shape(shape: Sequence[int], dim: int) -> tuple[int, ...]:
    """Validate a subsystem factorization of a ``dim``-dimensional space."""
    dims = tuple(int(d) for d in shape)
    if not dims:
        raise DimensionError("shape must have at least one factor")
    if any(d < 2 for d in dims):
        raise DimensionError(f"subsystem dimensions must be at least 2: {dims}")
    if math.prod(dims) != dim:
        raise DimensionError(f"shape {dims} does not factorize dimension {dim}")
    return dims


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return float(np.max(np.abs(a - a.conj().T), initial=0.0)) <= tol * scale


def require_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    if not is_hermitian(m, tol):
        defect = float(np.max(np.abs(m - m.conj().T)))
        raise ValidationError(f"matrix is not Hermitian (max |A - A^H| = {defect:.3e})")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def partial_trace(rho, shape: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems appear in ascending index order in the result.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square matrix, got {rho.shape}")
    dims = check_shape(shape, rho.shape[0])
    n = len(dims)
    kept = sorted(set(int(k) for k in keep))
    if not kept or kept[0] < 0 or kept[-1] >= n:
        raise DimensionError(f"keep must be a nonempty subset of 0..{n - 1}, got {kept}")
    if len(kept) == n:
        return rho.copy()

    letters = string.ascii_letters
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for k in range(n):
        if k not in kept:
            cols[k] = rows[k]
    spec = "".join(rows) + "".join(cols) + "->"
    spec += "".join(rows[k] for k in kept) + "".join(cols[k] for k in kept)
    out = np.einsum(spec, rho.reshape(dims + dims))
    d = math.prod(dims[k] for k in kept)
    return out.reshape(d, d)


def partial_transpose(rho, shape: Sequence[int], subsystem: int) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square matrix, got {rho.shape}")
    dims = check_shape(shape, rho.shape[0])
    n = len(dims)
    if not 0 <= subsystem < n:
        raise DimensionError(f"subsystem {subsystem} out of range for shape {dims}")
    t = rho.reshape(dims + dims).swapaxes(subsystem, n + subsystem)
    return t.reshape(rho.shape).copy()


def herm_eig(a, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""
    m = require_hermitian(a, tol)
    m = 0.5 * (m + m.conj().T)
    return np.linalg.eigh(m)


def herm_eigvals(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = require_hermitian(a, tol)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def spectral_radius(a) -> float:
    return float(np.max(np.abs(herm_eigvals(a)), initial=0.0))


def trace_norm(a, tol: float = HERMITIAN_TOL) -> float:
    return float(np.sum(np.abs(herm_eigvals(a, tol))))


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a degree-13 Pade core."""
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("expm requires finite entries")
    norm1 = float(np.max(np.sum(np.abs(a), axis=0), initial=0.0))
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
        a = a / 2.0**s

    b = _PADE13
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r
