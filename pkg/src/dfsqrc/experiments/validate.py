"""Registry of numerical invariants checked by the ``validate`` subcommand."""

from __future__ import annotations

import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..dfs import SingletBasis, build_singlet_basis, singlet_count
from ..dynamics import (
    HERM_TOL,
    POS_TOL,
    TRACE_TOL,
    ReservoirParams,
    evolve_reading_observables,
    propagate,
    read_teacher,
    reservoir_collapse,
    reservoir_hamiltonian,
    reservoir_observables,
    state_defects,
    teacher_response,
)
from ..hilbert import N_RESERVOIR, CompositeSpace, reservoir_space, total_spin
from ..readout import reservoir_features
from ..states import (
    check_teacher,
    log_negativity,
    random_density_matrix,
    random_entangled_two_qubit,
    random_product_two_qubit,
    squeeze_operator,
)
from ..tensor import expm, partial_trace
from .config import ExperimentConfig, load_config
from .pipelines import make_instance
from .rng import stream

BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


@dataclass
class Context:
    cfg: ExperimentConfig
    basis: SingletBasis
    cache: dict = field(default_factory=dict)

    def rng(self, salt: int) -> np.random.Generator:
        return stream(self.cfg.seed, 10_000 + salt, "test")


Check = Callable[[Context], tuple[bool, str]]
REGISTRY: dict[str, Check] = {}


def invariant(name: str):
    def register(fn: Check) -> Check:
        REGISTRY[name] = fn
        return fn

    return register


def _haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@invariant("tensor.partial_trace_product")
def _partial_trace(ctx):
    rng = ctx.rng(0)
    a, b = random_density_matrix(rng, 3), random_density_matrix(rng, 4)
    err = np.max(np.abs(partial_trace(np.kron(a, b), (3, 4), [0]) - a))
    return err <= 1e-12, f"max deviation {err:.2e}"


@invariant("tensor.expm_unitary")
def _expm_unitary(ctx):
    rng = ctx.rng(1)
    g = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    u = expm(-1j * (g + g.conj().T))
    err = np.max(np.abs(u @ u.conj().T - np.eye(16)))
    return err <= 1e-12, f"max |U U^H - I| {err:.2e}"


@invariant("hilbert.spin_commutator")
def _spin_commutator(ctx):
    space = reservoir_space()
    sp, sz = total_spin(space, "plus"), total_spin(space, "z")
    err = np.max(np.abs(sz @ sp - sp @ sz - 2 * sp))
    return err <= 1e-12, f"max |[S_z, S+] - 2 S+| {err:.2e}"


@invariant("dfs.singlet_count")
def _count(ctx):
    got = tuple(singlet_count(n) for n in (2, 4, 6, 8))
    return got == (1, 2, 5, 14) and ctx.basis.size == 5, f"counts {got}, basis size {ctx.basis.size}"


@invariant("dfs.orthonormal")
def _orthonormal(ctx):
    v = ctx.basis.vectors
    err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])))
    return err <= 1e-10, f"max |V^H V - I| {err:.2e}"


@invariant("dfs.annihilation")
def _annihilation(ctx):
    space = CompositeSpace.qubits(ctx.basis.n_qubits)
    worst = max(
        float(np.max(np.linalg.norm(total_spin(space, c) @ ctx.basis.vectors, axis=0)))
        for c in ("plus", "minus", "z")
    )
    return worst <= 1e-10, f"max ||S^a v|| {worst:.2e}"


@invariant("dfs.collective_protection")
def _protection(ctx):
    space = CompositeSpace.qubits(ctx.basis.n_qubits)
    rng = ctx.rng(2)
    c = rng.standard_normal((ctx.basis.size,) * 2) + 1j * rng.standard_normal((ctx.basis.size,) * 2)
    inner = c @ c.conj().T
    rho0 = ctx.basis.vectors @ (inner / np.trace(inner)) @ ctx.basis.vectors.conj().T
    collapse = [(total_spin(space, k), 1.0) for k in ("plus", "minus", "z")]
    rho = propagate(rho0, np.zeros_like(rho0), collapse, 1.0)
    err = np.max(np.abs(rho - rho0))
    return err <= 1e-8, f"max |rho(1) - rho(0)| {err:.2e}"


@invariant("states.logneg_bell")
def _bell(ctx):
    ln = log_negativity(np.outer(BELL, BELL.conj()), (2, 2))
    return abs(ln - 1.0) <= 1e-9, f"log-negativity {ln:.12f}"


@invariant("states.logneg_product")
def _product(ctx):
    rng = ctx.rng(3)
    worst = max(random_product_two_qubit(rng).logneg for _ in range(100))
    return worst <= 1e-9, f"max over 100 product states {worst:.2e}"


@invariant("states.logneg_local_unitary")
def _local_unitary(ctx):
    rng = ctx.rng(4)
    worst = 0.0
    for _ in range(20):
        rho = random_density_matrix(rng, 4)
        u = np.kron(_haar_unitary(rng, 2), _haar_unitary(rng, 2))
        worst = max(worst, abs(log_negativity(u @ rho @ u.conj().T, (2, 2)) - log_negativity(rho, (2, 2))))
    return worst <= 1e-9, f"max change {worst:.2e}"


@invariant("states.squeeze_unitary")
def _squeeze(ctx):
    s = squeeze_operator(0.7 * np.exp(0.3j), ctx.cfg.n_fock)
    err = np.max(np.abs(s @ s.conj().T - np.eye(s.shape[0])))
    return err <= 1e-12, f"max |S S^H - I| {err:.2e}"


@invariant("states.teacher_invariants")
def _teachers(ctx):
    rng = ctx.rng(5)
    bad = [p for _ in range(20) for p in check_teacher(random_entangled_two_qubit(rng, ctx.cfg.nu_min))]
    return not bad, f"violations {sorted(set(bad))}"


def _short_reading(ctx):
    """Equilibrated run-0 reservoir read by one entangled two-qubit teacher (computed once)."""
    if "reading" not in ctx.cache:
        cfg = ctx.cfg.replace(method="two_qubit")
        inst = make_instance(cfg, 0)
        teacher = random_entangled_two_qubit(ctx.rng(6), cfg.nu_min)
        rho = read_teacher(inst.rho, teacher, inst.coupling, inst.params, inst.evolution)
        ctx.cache["reading"] = (inst, teacher, rho)
    return ctx.cache["reading"]


@invariant("dynamics.lindblad_conservation")
def _conservation(ctx):
    inst, _, rho = _short_reading(ctx)
    worst = {}
    for state in (inst.rho, rho):
        for k, v in state_defects(state).items():
            worst[k] = max(worst.get(k, -np.inf), v) if k != "min_eig" else min(worst.get(k, np.inf), v)
    ok = worst["trace"] <= TRACE_TOL and worst["hermiticity"] <= HERM_TOL and worst["min_eig"] >= -POS_TOL
    return ok, ", ".join(f"{k} {v:.2e}" for k, v in sorted(worst.items()))


@invariant("dynamics.single_qubit_fixed_point")
def _fixed_point(ctx):
    n = 2
    params = ReservoirParams(np.zeros((n, n)), 1.0, 0.5)
    rho0 = np.zeros((2**n, 2**n), dtype=complex)
    rho0[0, 0] = 1
    rho = propagate(rho0, reservoir_hamiltonian(params), reservoir_collapse(params), 20.0)
    pops = [float(np.real(np.trace(partial_trace(rho, (2,) * n, [i]) @ np.diag([0, 1])))) for i in range(n)]
    err = max(abs(p - 1 / 3) for p in pops)
    return err <= 1e-4, f"max |n_i - 1/3| {err:.2e}"


@invariant("dynamics.heisenberg_duality")
def _duality(ctx):
    inst, teacher, rho = _short_reading(ctx)
    obs = reservoir_observables()
    evolved = evolve_reading_observables(obs, (2, 2), inst.coupling, inst.params, inst.evolution)
    heis = np.einsum("ab,kba->k", teacher.rho, teacher_response(evolved, inst.rho, (2, 2)))
    fwd = np.einsum("ij,kji->k", rho, obs)
    err = np.max(np.abs(heis - fwd))
    return err <= 1e-10, f"max |Heisenberg - Schroedinger| {err:.2e}"


@invariant("readout.feature_bounds")
def _feature_bounds(ctx):
    _, _, rho = _short_reading(ctx)
    bad = reservoir_features(rho, "singlet").violations() + reservoir_features(rho, "population").violations()
    return not bad, f"violations {bad}"


def run_checks(cfg: ExperimentConfig | None = None, basis: SingletBasis | None = None) -> list[dict]:
    """Evaluate every registered invariant; exceptions count as failures."""
    ctx = Context(cfg or load_config(), basis if basis is not None else build_singlet_basis(N_RESERVOIR))
    report = []
    for name, check in REGISTRY.items():
        try:
            ok, detail = check(ctx)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        report.append({"id": name, "ok": bool(ok), "detail": detail})
    return report


def summary(report: list[dict]) -> str:
    failed = [r["id"] for r in report if not r["ok"]]
    return json.dumps({"passed": not failed, "failed": failed, "checks": report}, indent=2)
