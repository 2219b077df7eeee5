"""Reservoir Hamiltonians, Lindblad generator and density-matrix propagation.

The master equation is

    d rho/dt = -i [H, rho] + sum_k (r_k / 2) (2 x_k rho x_k^H - x_k^H x_k rho - rho x_k^H x_k)

integrated with fixed-step RK4 directly on the matrix.  Two structural
shortcuts keep the 1024-dimensional Fock runs at desk scale:

* the effective Hamiltonian ``H - i sum (r/2) x^H x`` is split into the
  connected components of its sparsity graph (excitation-number sectors for
  hopping Hamiltonians), so ``H_eff @ rho`` is a set of small block products;
* collapse operators with at most one nonzero per row and column (all ladder
  operators) apply their jump term by index gathering instead of matmuls.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .dfs import build_singlet_basis, singlet_projectors
from .errors import DomainError, IntegrationError
from .hilbert import (
    N_RESERVOIR,
    SIGMA_MINUS,
    SIGMA_PLUS,
    CompositeSpace,
    LocalOperator,
    embed,
    embed_many,
    joint_space,
    lowering_op,
    reservoir_space,
)
from .states import TeacherState
from .tensor import as_matrix, partial_trace, require_hermitian, spectral_radius

STEP_BOUND = 0.05
TRACE_TOL = 1e-7
HERM_TOL = 1e-8
POS_TOL = 1e-7

Collapse = Sequence[tuple[np.ndarray, float]]


@dataclass(frozen=True)
class ReservoirParams:
    J: np.ndarray
    gamma: float
    pump: float

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise DomainError(f"J must be square, got shape {J.shape}")
        if not np.allclose(J, J.T, atol=0, rtol=0) or np.any(np.diag(J) != 0):
            raise DomainError("J must be symmetric with zero diagonal")
        if self.gamma <= 0 or self.pump < 0:
            raise DomainError(f"need gamma > 0 and pump >= 0, got {self.gamma}, {self.pump}")
        object.__setattr__(self, "J", J)

    @property
    def n_qubits(self) -> int:
        return self.J.shape[0]

    @classmethod
    def sample(cls, rng: np.random.Generator, n: int = N_RESERVOIR, pump_ratio: float = 0.5) -> "ReservoirParams":
        """Uniform couplings on [-1, 1] for each unordered pair; gamma is the spectral radius of H_R."""
        J = np.zeros((n, n))
        iu = np.triu_indices(n, 1)
        J[iu] = rng.uniform(-1.0, 1.0, size=len(iu[0]))
        J = J + J.T
        gamma = spectral_radius(_hopping(J, reservoir_space(n)))
        if gamma <= 0:
            raise DomainError("sampled reservoir Hamiltonian has zero spectral radius")
        return cls(J, gamma, pump_ratio * gamma)


@dataclass(frozen=True)
class CouplingParams:
    W: np.ndarray
    f: tuple[float, ...] = (10.0, 10.0)
    tau: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))
        object.__setattr__(self, "f", tuple(float(x) for x in self.f))

    @classmethod
    def sample(cls, rng: np.random.Generator, n: int = N_RESERVOIR, f: float = 10.0, n_teacher: int = 2):
        return cls(rng.uniform(-1.0, 1.0, size=n), (f,) * n_teacher)


@dataclass(frozen=True)
class EvolutionConfig:
    """Integration settings.

    The RK4 step is the largest ``dt <= max_dt`` that divides the interval
    evenly and satisfies ``dt * (||H||_2 + ||sum (r/2) x^H x||_2) <= step_bound``.
    ``stride`` is the number of steps between recorded checkpoints.
    """

    t_equilibration: float = 0.0
    t_reading: float = 0.0
    step_bound: float = STEP_BOUND
    max_dt: float | None = None
    stride: int | None = None
    max_halvings: int = 3
    check: bool = True

    @classmethod
    def from_gamma(
        cls,
        gamma: float,
        eq_coef: float = 0.2,
        read_coef: float = 0.01,
        time_rule: str = "times_gamma",
        **kw,
    ) -> "EvolutionConfig":
        if time_rule == "times_gamma":
            return cls(eq_coef * gamma, read_coef * gamma, **kw)
        if time_rule == "per_gamma":
            return cls(eq_coef / gamma, read_coef / gamma, **kw)
        raise DomainError(f"unknown time rule {time_rule!r}")


# -- Hamiltonians -------------------------------------------------------------


def _hopping(J: np.ndarray, space: CompositeSpace) -> np.ndarray:
    h = np.zeros((space.dim, space.dim), dtype=complex)
    n = J.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if J[i, j] != 0:
                term = embed_many({i: SIGMA_PLUS, j: SIGMA_MINUS}, space)
                h += J[i, j] * (term + term.conj().T)
    return h


def reservoir_hamiltonian(params: ReservoirParams, space: CompositeSpace | None = None) -> np.ndarray:
    """``sum_{i<j} J_ij (b_i^H b_j + b_j^H b_i)`` on the first ``n`` qubits of ``space``."""
    space = space or reservoir_space(params.n_qubits)
    if any(d != 2 for d in space.dims[: params.n_qubits]):
        raise DomainError("reservoir sites must be qubits")
    return _hopping(params.J, space)


def interaction_hamiltonian(params: CouplingParams, space: CompositeSpace) -> np.ndarray:
    """``sum_k sum_j f_k W_j (a_k^H b_j + b_j^H a_k)`` with teachers after the reservoir."""
    n_res = len(params.W)
    teachers = range(n_res, space.n_sites)
    if len(teachers) != len(params.f):
        raise DomainError(f"{len(params.f)} teacher couplings for {len(teachers)} teacher sites")
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for f, k in zip(params.f, teachers):
        ak = lowering_op(space.dims[k])
        for j, w in enumerate(params.W):
            if w == 0 or f == 0:
                continue
            term = embed_many({j: SIGMA_PLUS, k: ak}, space)
            h += f * w * (term + term.conj().T)
    return h


def reservoir_collapse(params: ReservoirParams, space: CompositeSpace | None = None) -> list[tuple[LocalOperator, float]]:
    """Per-qubit decay ``(b_j, gamma)`` and pump ``(b_j^H, P)`` on the reservoir sites."""
    space = space or reservoir_space(params.n_qubits)
    ops = []
    for j in range(params.n_qubits):
        b = LocalOperator(SIGMA_MINUS, j, space)
        ops.append((b, params.gamma))
        if params.pump > 0:
            ops.append((b.dag(), params.pump))
    return ops


# -- Lindblad generator -------------------------------------------------------


@dataclass
class _Jump:
    rate: float
    dense: np.ndarray | None = None
    # index-gather form: x[rows, cols] = w, at most one entry per row and column
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    values: np.ndarray | None = None
    weights: np.ndarray | None = None  # rate * w_i * conj(w_k)
    # tensor-view form for single-site operators
    view: tuple[int, int, int] | None = None  # (pre, d, post)
    entries: list | None = None  # [(r, c, w)] nonzeros of the local operator


def _monomial(x: np.ndarray):
    rows, cols = np.nonzero(x)
    if len(np.unique(rows)) != len(rows) or len(np.unique(cols)) != len(cols):
        return None
    return rows, cols, x[rows, cols]


def _compile_jump(op, rate: float, d: int) -> tuple[_Jump, np.ndarray]:
    """Return the jump term and ``x^H x`` (dense or as a diagonal vector)."""
    if isinstance(op, LocalOperator):
        if op.shape != (d, d):
            raise DomainError(f"collapse operator shape {op.shape} does not match ({d}, {d})")
        dims = op.space.dims
        view = (math.prod(dims[: op.site]), dims[op.site], math.prod(dims[op.site + 1 :]))
        rows, cols = np.nonzero(op.op)
        entries = [(int(r), int(c), complex(op.op[r, c])) for r, c in zip(rows, cols)]
        local = op.op.conj().T @ op.op
        if np.count_nonzero(local - np.diag(np.diag(local))) == 0:
            xdx = np.kron(np.kron(np.ones(view[0]), np.real(np.diag(local))), np.ones(view[2]))
        else:
            xdx = op.full().conj().T @ op.full()
        return _Jump(rate, view=view, entries=entries), xdx
    x = as_matrix(op)
    if x.shape != (d, d):
        raise DomainError(f"collapse operator shape {x.shape} does not match ({d}, {d})")
    mono = _monomial(x)
    if mono is not None:
        rows, cols, w = mono
        xdx = np.zeros(d)
        xdx[cols] = np.abs(w) ** 2
        return _Jump(rate, rows=rows, cols=cols, values=w, weights=rate * np.outer(w, w.conj())), xdx
    return _Jump(rate, dense=x), x.conj().T @ x


class Lindbladian:
    """Precompiled generator for a fixed Hamiltonian and collapse set.

    Collapse operators may be dense matrices or :class:`LocalOperator` objects.
    """

    def __init__(self, h, collapse: Collapse = ()):
        h = require_hermitian(h)
        d = h.shape[0]
        self.dim = d
        k_diag = np.zeros(d)
        k_dense = None
        self.jumps: list[_Jump] = []
        for op, rate in collapse:
            if rate == 0:
                continue
            jump, xdx = _compile_jump(op, float(rate), d)
            self.jumps.append(jump)
            if xdx.ndim == 1:
                k_diag += 0.5 * rate * xdx
            else:
                k_dense = 0.5 * rate * xdx if k_dense is None else k_dense + 0.5 * rate * xdx
        heff = h - 1j * np.diag(k_diag)
        if k_dense is not None:
            heff = heff - 1j * k_dense
        self.heff = heff
        self._blocks = self._split(heff)
        if self._blocks is None:
            h_norm = spectral_radius(h)
        else:
            h_norm = max(spectral_radius(h[np.ix_(idx, idx)]) for idx, _ in self._blocks)
        if k_dense is None:
            k_norm = float(np.max(k_diag, initial=0.0))
        else:
            k_norm = spectral_radius(np.diag(k_diag) + k_dense)
        self.scale = h_norm + k_norm

    @staticmethod
    def _split(heff: np.ndarray):
        n, labels = connected_components(csr_matrix(np.abs(heff) > 0), directed=False)
        if n == 1:
            return None
        blocks = []
        for c in range(n):
            idx = np.flatnonzero(labels == c)
            blocks.append((idx, heff[np.ix_(idx, idx)]))
        return blocks

    def _heff_apply(self, a: np.ndarray, adjoint: bool = False) -> np.ndarray:
        if self._blocks is None:
            m = self.heff.conj().T if adjoint else self.heff
            return m @ a
        out = np.empty_like(a)
        for idx, blk in self._blocks:
            b = blk.conj().T if adjoint else blk
            out[..., idx, :] = b @ a[..., idx, :]
        return out

    def _jump_terms(self, a: np.ndarray, out: np.ndarray, adjoint: bool) -> None:
        """Add ``sum rate x a x^H`` (or ``x^H a x`` when adjoint) to ``out`` in place."""
        lead = a.shape[:-2]
        for jp in self.jumps:
            if jp.view is not None:
                pre, dd, post = jp.view
                a6 = a.reshape(lead + (pre, dd, post, pre, dd, post))
                o6 = out.reshape(lead + (pre, dd, post, pre, dd, post))
                for r1, c1, w1 in jp.entries:
                    for r2, c2, w2 in jp.entries:
                        if adjoint:
                            o6[..., :, c1, :, :, c2, :] += (jp.rate * w1.conjugate() * w2) * a6[..., :, r1, :, :, r2, :]
                        else:
                            o6[..., :, r1, :, :, r2, :] += (jp.rate * w1 * w2.conjugate()) * a6[..., :, c1, :, :, c2, :]
            elif jp.dense is not None:
                x = jp.dense
                if adjoint:
                    out += jp.rate * (x.conj().T @ a @ x)
                else:
                    out += jp.rate * (x @ a @ x.conj().T)
            elif adjoint:
                src = a[..., jp.rows[:, None], jp.rows[None, :]]
                out[..., jp.cols[:, None], jp.cols[None, :]] += jp.weights.conj() * src
            else:
                src = a[..., jp.cols[:, None], jp.cols[None, :]]
                out[..., jp.rows[:, None], jp.rows[None, :]] += jp.weights * src

    def rhs(self, rho: np.ndarray, hermitian: bool = False) -> np.ndarray:
        """Schrodinger-picture time derivative of ``rho``."""
        m = self._heff_apply(rho)
        if hermitian:
            m *= -1j
            out = _add_adjoint(m)
        else:
            right = np.swapaxes(self._heff_apply(np.swapaxes(rho, -1, -2).conj()), -1, -2).conj()
            out = -1j * (m - right)
        out = np.ascontiguousarray(out)
        self._jump_terms(np.ascontiguousarray(rho), out, adjoint=False)
        return out

    def adjoint_rhs(self, a: np.ndarray, hermitian: bool = False) -> np.ndarray:
        """Heisenberg-picture time derivative of an observable ``a``."""
        m = self._heff_apply(a, adjoint=True)
        if hermitian:
            m *= 1j
            out = _add_adjoint(m)
        else:
            right = np.swapaxes(self._heff_apply(np.swapaxes(a, -1, -2).conj(), adjoint=True), -1, -2).conj()
            out = 1j * (m - right)
        out = np.ascontiguousarray(out)
        self._jump_terms(np.ascontiguousarray(a), out, adjoint=True)
        return out


def _adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose of the trailing two axes as a fresh C-contiguous array."""
    out = np.empty(a.shape, dtype=complex)
    # transpose in row panels; a single strided pass thrashes the cache on large matrices
    panel = 64
    for i in range(0, a.shape[-2], panel):
        np.conjugate(np.swapaxes(a[..., i : i + panel, :], -1, -2), out=out[..., :, i : i + panel])
    return out


def _add_adjoint(m: np.ndarray) -> np.ndarray:
    out = _adjoint(m)
    out += m
    return out


def lindblad_rhs(rho, h, collapse: Collapse = ()) -> np.ndarray:
    return Lindbladian(h, collapse).rhs(as_matrix(rho))


# -- integration ---------------------------------------------------------------


def _rk4_step(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    """Classical RK4 accumulated in place to limit full-size temporaries."""
    acc = np.array(y, dtype=complex)
    stage = np.empty_like(acc)
    k = f(y)
    for stage_coef, weight in ((0.5, 1 / 6), (0.5, 1 / 3), (1.0, 1 / 3), (None, 1 / 6)):
        if stage_coef is not None:
            np.multiply(k, stage_coef * dt, out=stage)
            stage += y
        k *= weight * dt
        acc += k
        if stage_coef is None:
            break
        k = f(stage)
    return acc


def _hermitize(a: np.ndarray) -> np.ndarray:
    out = _add_adjoint(np.asarray(a, dtype=complex))
    out *= 0.5
    return out


def state_defects(rho: np.ndarray) -> dict[str, float]:
    """Trace error, Hermiticity defect and most negative eigenvalue of ``rho``."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    ev = np.linalg.eigvalsh(_hermitize(rho))
    return {
        "trace": abs(float(np.trace(rho).real) - 1.0),
        "hermiticity": herm,
        "min_eig": float(ev[0]),
    }


def positivity_certified(rho: np.ndarray, tol: float = POS_TOL) -> bool:
    """True when every eigenvalue of the Hermitian part of ``rho`` is at least ``-tol``.

    A Cholesky factorization of ``rho + tol I`` exists exactly in that case and
    costs a fraction of a full eigendecomposition.
    """
    shifted = _hermitize(rho)
    shifted[np.diag_indices(rho.shape[0])] += tol
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        return False
    return True


def check_state(rho: np.ndarray) -> str | None:
    trace = abs(float(np.trace(rho).real) - 1.0)
    if trace > TRACE_TOL:
        return f"trace drift {trace:.3e}"
    defect = _adjoint(rho)
    defect -= rho
    herm = float(np.max(np.abs(defect)))
    if herm > HERM_TOL:
        return f"Hermiticity defect {herm:.3e}"
    if not positivity_certified(rho):
        return f"negative eigenvalue {np.linalg.eigvalsh(_hermitize(rho))[0]:.3e}"
    return None


def _n_steps(gen: Lindbladian, t_total: float, config: EvolutionConfig) -> int:
    dt = config.step_bound / gen.scale if gen.scale > 0 else t_total
    if config.max_dt is not None:
        dt = min(dt, config.max_dt)
    return max(1, math.ceil(t_total / dt - 1e-12))


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    rows: list[np.ndarray] = field(default_factory=list)

    def extend(self, other: "Trajectory", offset: float = 0.0, skip_first: bool = False) -> None:
        start = 1 if skip_first else 0
        self.times += [t + offset for t in other.times[start:]]
        self.rows += other.rows[start:]


def _integrate(
    gen: Lindbladian,
    rho0: np.ndarray,
    t_total: float,
    config: EvolutionConfig,
    observe: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, Trajectory]:
    n = _n_steps(gen, t_total, config)
    f = lambda y: gen.rhs(y, hermitian=True)  # noqa: E731
    for attempt in range(config.max_halvings + 1):
        dt = t_total / n
        stride = config.stride or n
        traj = Trajectory()
        rho = _hermitize(rho0)
        if observe is not None:
            traj.times.append(0.0)
            traj.rows.append(observe(rho))
        failure = None
        for step in range(1, n + 1):
            rho = _hermitize(_rk4_step(f, rho, dt))
            if step % stride == 0 or step == n:
                if config.check:
                    failure = check_state(rho)
                    if failure:
                        break
                if observe is not None:
                    traj.times.append(step * dt)
                    traj.rows.append(observe(rho))
        if failure is None:
            return rho, traj
        n *= 2
    raise IntegrationError(
        f"{failure} after {config.max_halvings} step halvings (dt={t_total / n * 2:.3e}); use a smaller step_bound"
    )


def propagate(rho0, h, collapse: Collapse, t_total: float, config: EvolutionConfig | None = None) -> np.ndarray:
    """Density matrix at ``t_total``; invariants are checked at every checkpoint."""
    rho0 = as_matrix(rho0)
    if t_total < 0:
        raise DomainError(f"t_total must be >= 0, got {t_total}")
    if t_total == 0:
        return rho0.copy()
    gen = Lindbladian(h, collapse)
    return _integrate(gen, rho0, t_total, config or EvolutionConfig())[0]


def _flat_entries(jp: _Jump):
    """Global ``(rows, cols, values)`` of a jump with one entry per row and column, else None."""
    if jp.rows is not None:
        return jp.rows, jp.cols, jp.values
    if jp.view is None:
        return None
    pre, d, post = jp.view
    r = np.array([e[0] for e in jp.entries])
    c = np.array([e[1] for e in jp.entries])
    if len(set(r)) != len(r) or len(set(c)) != len(c):
        return None
    w = np.array([e[2] for e in jp.entries])
    p = np.arange(pre)[:, None, None] * (d * post)
    q = np.arange(post)[None, None, :]
    rows = (p + r[None, :, None] * post + q).ravel()
    cols = (p + c[None, :, None] * post + q).ravel()
    vals = np.broadcast_to(w[None, :, None], (pre, len(w), post)).ravel()
    return rows, cols, vals


class _SectorAdjoint:
    """Adjoint generator restricted to observables block-diagonal in the H_eff blocks.

    Applicable when every jump maps each block into a single block, which
    holds for ladder operators and excitation-conserving Hamiltonians.  The
    state is one flat buffer holding the diagonal blocks back to back.
    """

    def __init__(self, gen: Lindbladian, blocks, pieces):
        self.gen = gen
        self.blocks = blocks
        self.pieces = pieces
        labels = np.empty(gen.dim, dtype=int)
        for b, (idx, _) in enumerate(blocks):
            labels[idx] = b
        self.off_block = labels[:, None] != labels[None, :]
        sizes = [len(idx) ** 2 for idx, _ in blocks]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])

    @classmethod
    def build(cls, gen: Lindbladian):
        if gen._blocks is None:
            return None
        labels = np.empty(gen.dim, dtype=int)
        local = np.empty(gen.dim, dtype=int)
        for b, (idx, _) in enumerate(gen._blocks):
            labels[idx] = b
            local[idx] = np.arange(len(idx))
        pieces = []
        for jp in gen.jumps:
            flat = _flat_entries(jp)
            if flat is None:
                return None
            rows, cols, vals = flat
            tgt, src = labels[cols], labels[rows]
            for b in np.unique(tgt):
                sel = tgt == b
                if len(np.unique(src[sel])) != 1:
                    return None
                w = vals[sel]
                ci, ri = local[cols[sel]], local[rows[sel]]
                wprod = jp.rate * np.outer(w.conj(), w)
                pieces.append((int(b), ci[:, None], ci[None, :], int(src[sel][0]), ri[:, None], ri[None, :], wprod))
        return cls(gen, gen._blocks, pieces)

    def _views(self, buf: np.ndarray):
        k = buf.shape[0]
        return [
            buf[:, self.offsets[b] : self.offsets[b + 1]].reshape(k, len(idx), len(idx))
            for b, (idx, _) in enumerate(self.blocks)
        ]

    def split(self, a: np.ndarray) -> np.ndarray | None:
        if np.max(np.abs(a[:, self.off_block]), initial=0.0) > 1e-13 * max(1.0, float(np.max(np.abs(a)))):
            return None
        buf = np.empty((a.shape[0], self.offsets[-1]), dtype=complex)
        for v, (idx, _) in zip(self._views(buf), self.blocks):
            v[...] = a[:, idx[:, None], idx[None, :]]
        return buf

    def merge(self, buf: np.ndarray) -> np.ndarray:
        d = self.gen.dim
        out = np.zeros((buf.shape[0], d, d), dtype=complex)
        for v, (idx, _) in zip(self._views(buf), self.blocks):
            out[:, idx[:, None], idx[None, :]] = v
        return out

    def rhs(self, buf: np.ndarray) -> np.ndarray:
        out = np.empty_like(buf)
        src = self._views(buf)
        dst = self._views(out)
        for a, o, (_, blk) in zip(src, dst, self.blocks):
            m = blk.conj().T @ a
            o[...] = 1j * (m - np.swapaxes(m, -1, -2).conj())
        for b, ci0, ci1, s, ri0, ri1, wprod in self.pieces:
            dst[b][:, ci0, ci1] += wprod * src[s][:, ri0, ri1]
        return out

    def hermitize(self, buf: np.ndarray) -> np.ndarray:
        out = np.empty_like(buf)
        for a, o in zip(self._views(buf), self._views(out)):
            o[...] = 0.5 * (a + np.swapaxes(a, -1, -2).conj())
        return out


def propagate_observables(obs, h, collapse: Collapse, t_total: float, config: EvolutionConfig | None = None):
    """Evolve Hermitian observables (shape ``(k, d, d)`` or ``(d, d)``) with the adjoint generator.

    ``Tr(rho(t) A) == Tr(rho(0) A(t))`` for every initial state.
    """
    a = np.asarray(obs, dtype=complex)
    if t_total == 0:
        return a.copy()
    single = a.ndim == 2
    if single:
        a = a[None]
    config = config or EvolutionConfig()
    gen = Lindbladian(h, collapse)
    n = _n_steps(gen, t_total, config)
    dt = t_total / n

    sector = _SectorAdjoint.build(gen)
    buf = sector.split(a) if sector is not None else None
    if buf is not None:
        buf = sector.hermitize(buf)
        for _ in range(n):
            buf = sector.hermitize(_rk4_step(sector.rhs, buf, dt))
        a = sector.merge(buf)
    else:
        f = lambda y: gen.adjoint_rhs(y, hermitian=True)  # noqa: E731
        a = _hermitize(a)
        for _ in range(n):
            a = _hermitize(_rk4_step(f, a, dt))
    return a[0] if single else a


# -- experiment phases ---------------------------------------------------------


def reservoir_observables(n_qubits: int = N_RESERVOIR) -> np.ndarray:
    """Stack of the six number operators followed by the five singlet projectors."""
    space = reservoir_space(n_qubits)
    nums = [embed(np.diag([0.0, 1.0]), j, space) for j in range(n_qubits)]
    proj = singlet_projectors(build_singlet_basis(n_qubits))
    return np.concatenate([np.array(nums), proj])


def _observe_reservoir(n_qubits: int):
    """Row ``(n_0..n_{n-1}, m_0..m_{k-1})`` for a reservoir density matrix."""
    pops = np.arange(2**n_qubits)[:, None] >> np.arange(n_qubits)[None, ::-1] & 1
    basis = build_singlet_basis(n_qubits).vectors

    def observe(rho: np.ndarray) -> np.ndarray:
        diag = np.real(np.diag(rho))
        m = np.real(np.einsum("ik,ij,jk->k", basis.conj(), rho, basis))
        return np.concatenate([diag @ pops, m])

    return observe


def ground_state(n_qubits: int = N_RESERVOIR) -> np.ndarray:
    rho = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def random_product_pure(rng: np.random.Generator, n_qubits: int = N_RESERVOIR) -> np.ndarray:
    from .states import random_pure_state

    rho = np.ones((1, 1), dtype=complex)
    for _ in range(n_qubits):
        rho = np.kron(rho, random_pure_state(rng, 2))
    return rho


def equilibrate(reservoir_rho0, params: ReservoirParams, config: EvolutionConfig) -> tuple[np.ndarray, Trajectory]:
    """Teacher-free evolution for ``config.t_equilibration``.

    Returns the final state and a trajectory of rows ``(n_0..n_5, m_0..m_4)``.
    """
    rho0 = as_matrix(reservoir_rho0)
    n = params.n_qubits
    if rho0.shape != (2**n, 2**n):
        raise DomainError(f"reservoir state must be {2**n}x{2**n}, got {rho0.shape}")
    gen = Lindbladian(reservoir_hamiltonian(params), reservoir_collapse(params))
    observe = _observe_reservoir(n)
    if config.t_equilibration == 0:
        return rho0.copy(), Trajectory([0.0], [observe(rho0)])
    return _integrate(gen, rho0, config.t_equilibration, config, observe)


def _reading_segments(coupling: CouplingParams, config: EvolutionConfig) -> tuple[float, float]:
    tau = config.t_reading if coupling.tau is None else coupling.tau
    on = min(config.t_reading, tau)
    return on, config.t_reading - on


def _reading_generators(params: ReservoirParams, coupling: CouplingParams, space: CompositeSpace):
    hr = reservoir_hamiltonian(params, space)
    collapse = reservoir_collapse(params, space)
    return hr + interaction_hamiltonian(coupling, space), hr, collapse


def read_teacher(
    reservoir_rho,
    teacher: TeacherState,
    coupling: CouplingParams,
    params: ReservoirParams,
    config: EvolutionConfig,
    record: bool = False,
):
    """Couple a teacher to the reservoir for ``t_reading`` and trace the teacher out.

    The joint state is ``reservoir_rho (x) teacher.rho`` with reservoir factors
    first.  With ``record=True`` returns ``(rho, Trajectory)`` whose rows are
    reservoir observables of the reduced state at each checkpoint.
    """
    res = as_matrix(reservoir_rho)
    n = params.n_qubits
    space = joint_space(teacher.dims, n)
    keep = range(n)
    h_on, h_off, collapse = _reading_generators(params, coupling, space)
    rho = np.kron(res, teacher.rho)
    on, off = _reading_segments(coupling, config)
    base = _observe_reservoir(n)
    observe = (lambda r: base(partial_trace(r, space.dims, keep))) if record else None  # noqa: E731
    traj = Trajectory()
    offset = 0.0
    for h, t in ((h_on, on), (h_off, off)):
        if t <= 0:
            continue
        rho, seg = _integrate(Lindbladian(h, collapse), rho, t, config, observe)
        traj.extend(seg, offset, skip_first=bool(traj.times))
        offset += t
    out = partial_trace(rho, space.dims, keep)
    if record:
        if not traj.times:
            traj = Trajectory([0.0], [base(out)])
        return out, traj
    return out


def evolve_reading_observables(
    observables,
    teacher_dims: Sequence[int],
    coupling: CouplingParams,
    params: ReservoirParams,
    config: EvolutionConfig,
) -> np.ndarray:
    """Heisenberg-picture counterpart of :func:`read_teacher`.

    ``observables`` are reservoir operators of shape ``(k, 64, 64)``; the result
    holds their joint-space images ``(k, D, D)`` after the reading window.
    """
    obs = np.asarray(observables, dtype=complex)
    space = joint_space(teacher_dims, params.n_qubits)
    dt = math.prod(teacher_dims)
    a = np.array([np.kron(o, np.eye(dt)) for o in obs])
    h_on, h_off, collapse = _reading_generators(params, coupling, space)
    on, off = _reading_segments(coupling, config)
    # adjoint maps compose in reverse time order
    a = propagate_observables(a, h_off, collapse, off, config)
    return propagate_observables(a, h_on, collapse, on, config)


def teacher_response(evolved: np.ndarray, reservoir_rho, teacher_dims: Sequence[int]) -> np.ndarray:
    """Effective teacher operators ``B_k`` with ``Tr(teacher_rho B_k)`` = reading expectation."""
    res = as_matrix(reservoir_rho)
    dr = res.shape[0]
    dt = math.prod(teacher_dims)
    a = np.asarray(evolved).reshape(-1, dr, dt, dr, dt)
    return np.einsum("sr,krasb->kab", res, a)
