"""Experiment pipelines behind the CLI subcommands."""

from __future__ import annotations

import csv
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dfs import build_singlet_basis
from ..dynamics import (
    CouplingParams,
    EvolutionConfig,
    ReservoirParams,
    Trajectory,
    equilibrate,
    evolve_reading_observables,
    ground_state,
    random_product_pure,
    read_teacher,
    reservoir_observables,
    teacher_response,
)
from ..errors import GenerationError, IntegrationError, NumericalError
from ..hilbert import N_RESERVOIR
from ..readout import FeatureVector, fit, relative_error
from ..states import (
    TeacherState,
    random_entangled_two_qubit,
    random_product_fock,
    random_product_two_qubit,
    random_squeezed_thermal,
)
from .config import ExperimentConfig
from .rng import stream

N_POP = N_RESERVOIR
N_SINGLET = build_singlet_basis(N_RESERVOIR).size
TRAJECTORY_HEADER = ["t"] + [f"n_{i}" for i in range(N_POP)] + [f"m_{i}" for i in range(N_SINGLET)]
CURVE_HEADER = ["n_train", "mean_error", "min_error", "max_error"]
# Heisenberg-evolved identity must stay the identity (trace preservation)
TRACE_TOL = 1e-7


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def trajectory_rows(traj: Trajectory) -> list[list[float]]:
    return [[t, *row] for t, row in zip(traj.times, traj.rows)]


@dataclass(frozen=True)
class ReservoirInstance:
    """Random reservoir and input weights of one run, with its equilibrated state."""

    run: int
    params: ReservoirParams
    coupling: CouplingParams
    evolution: EvolutionConfig
    rho: np.ndarray
    trajectory: Trajectory = field(repr=False)


def initial_reservoir(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    return ground_state() if cfg.reservoir_init == "ground" else random_product_pure(rng)


def make_instance(cfg: ExperimentConfig, run: int, init: str | None = None) -> ReservoirInstance:
    params = ReservoirParams.sample(stream(cfg.seed, run, "couplings"), pump_ratio=cfg.pump_ratio)
    coupling = CouplingParams.sample(stream(cfg.seed, run, "weights"), f=cfg.coupling)
    evolution = EvolutionConfig.from_gamma(
        params.gamma, cfg.eq_coef, cfg.read_coef, cfg.time_rule, step_bound=cfg.step_bound, stride=cfg.stride
    )
    if init is not None:
        cfg = cfg.replace(reservoir_init=init)
    rho0 = initial_reservoir(cfg, stream(cfg.seed, run, "reservoir_init"))
    rho, traj = equilibrate(rho0, params, evolution)
    return ReservoirInstance(run, params, coupling, evolution, rho, traj)


def teacher_sampler(cfg: ExperimentConfig) -> Callable[[np.random.Generator, int], TeacherState]:
    """Sample ``i`` (0-based) is a product state for even ``i`` and entangled for odd ``i``."""
    if cfg.method == "two_qubit":
        product = random_product_two_qubit
        entangled = lambda rng: random_entangled_two_qubit(rng, cfg.nu_min)  # noqa: E731
    else:
        product = lambda rng: random_product_fock(rng, cfg.n_fock)  # noqa: E731
        entangled = lambda rng: random_squeezed_thermal(rng, cfg.n_fock, cfg.nu_min)  # noqa: E731

    def sample(rng: np.random.Generator, i: int) -> TeacherState:
        return entangled(rng) if i % 2 else product(rng)

    return sample


def teacher_set(cfg: ExperimentConfig, run: int, purpose: str, n: int) -> list[TeacherState]:
    rng = stream(cfg.seed, run, purpose)
    sample = teacher_sampler(cfg)
    return [sample(rng, i) for i in range(n)]


def _select(expectations: np.ndarray, basis: str) -> np.ndarray:
    """Slice population or singlet entries from ``(n_0..n_5, m_0..m_4)`` rows."""
    return expectations[..., :N_POP] if basis == "population" else expectations[..., N_POP:]


class ReadingMap:
    """Reservoir expectations after reading, as linear functionals of the teacher state.

    The reading observables are propagated once in the Heisenberg picture;
    every teacher then costs a single trace against the resulting
    ``teacher_response`` operators.
    """

    def __init__(self, instance: ReservoirInstance, teacher_dims: tuple[int, int]):
        self.instance = instance
        self.teacher_dims = teacher_dims
        d = 2**instance.params.n_qubits
        obs = np.concatenate([reservoir_observables(instance.params.n_qubits), np.eye(d)[None]])
        self.evolved = evolve_reading_observables(
            obs, teacher_dims, instance.coupling, instance.params, instance.evolution
        )
        self.response = self.responses(instance.rho)

    def responses(self, reservoir_rho: np.ndarray) -> np.ndarray:
        b = teacher_response(self.evolved, reservoir_rho, self.teacher_dims)
        defect = float(np.max(np.abs(b[-1] - np.eye(b.shape[-1]))))
        if defect > TRACE_TOL:
            raise IntegrationError(f"reading map changes the trace by {defect:.3e}")
        return b[:-1]

    @staticmethod
    def expectations(response: np.ndarray, teacher: TeacherState) -> np.ndarray:
        return np.einsum("ab,kba->k", teacher.rho, response)


@dataclass
class RunResult:
    run: int
    errors: dict[int, float] | None = None
    model: str | None = None
    gamma: float | None = None
    train_labels: list[int] = field(default_factory=list)
    train_lognegs: list[float] = field(default_factory=list)
    test_labels: list[int] = field(default_factory=list)
    test_lognegs: list[float] = field(default_factory=list)
    feature_violations: int = 0
    diagnostic: str | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        if self.errors is not None:
            d["errors"] = {str(k): v for k, v in self.errors.items()}
        return d


def _features(cfg, reading: ReadingMap, teachers, rng: np.random.Generator) -> list[FeatureVector]:
    out = []
    for st in teachers:
        if cfg.reequilibrate and cfg.reservoir_init == "random_product":
            # a ground-state start re-equilibrates to the same state, so only random starts differ
            rho, _ = equilibrate(random_product_pure(rng), reading.instance.params, reading.instance.evolution)
            response = reading.responses(rho)
        else:
            response = reading.response
        z = ReadingMap.expectations(response, st)
        out.append(FeatureVector.from_expectations(_select(z, cfg.basis), cfg.basis))
    return out


def learn_run(cfg: ExperimentConfig, run: int) -> RunResult:
    """Train on nested prefixes of one alternating sample stream and test on a fresh set."""
    start = time.perf_counter()
    result = RunResult(run)
    try:
        train = teacher_set(cfg, run, "train", cfg.n_train)
        test = teacher_set(cfg, run, "test", cfg.n_test)
        instance = make_instance(cfg, run)
        reading = ReadingMap(instance, cfg.teacher_dims)
        rng = stream(cfg.seed, run, "reservoir_init")
        x_train = _features(cfg, reading, train, rng)
        x_test = _features(cfg, reading, test, rng)
        y_train = [st.label for st in train]
        y_test = [st.label for st in test]
        seeds = {"seed": cfg.seed, "run": run}
        errors = {}
        model = None
        for n in cfg.sweep:
            model = fit(x_train[:n], y_train[:n], cfg.ridge, cfg.intercept, cfg.threshold, seeds)
            errors[n] = relative_error(model, x_test, y_test)
        result.errors = errors
        result.model = model.to_text()
        result.gamma = instance.params.gamma
        result.train_labels, result.test_labels = y_train, y_test
        result.train_lognegs = [st.logneg for st in train]
        result.test_lognegs = [st.logneg for st in test]
        result.feature_violations = sum(bool(f.violations()) for f in x_train + x_test)
    except (GenerationError, IntegrationError, NumericalError) as exc:
        result.diagnostic = f"{type(exc).__name__}: {exc}"
    result.seconds = time.perf_counter() - start
    return result


def _learn_run_args(args):
    return learn_run(*args)


def learn(cfg: ExperimentConfig) -> list[RunResult]:
    """All runs of a sweep, ordered by run index regardless of worker count."""
    jobs = [(cfg, r) for r in range(cfg.n_runs)]
    if cfg.workers == 1:
        return [learn_run(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_learn_run_args, jobs))


def error_curve(cfg: ExperimentConfig, results: Sequence[RunResult]) -> list[tuple[int, float, float, float]]:
    """Rows ``(n_train, mean, min, max)`` over the runs that completed."""
    done = [r.errors for r in results if r.errors is not None]
    if not done:
        return []
    rows = []
    for n in cfg.sweep:
        e = np.array([errs[n] for errs in done])
        rows.append((n, float(e.mean()), float(e.min()), float(e.max())))
    return rows


def run_record(cfg: ExperimentConfig, results: Sequence[RunResult], seconds: float) -> dict:
    return {
        "config": cfg.to_dict(),
        "curve": [dict(zip(CURVE_HEADER, row)) for row in error_curve(cfg, results)],
        "runs": [r.to_dict() for r in results],
        "wall_clock_seconds": seconds,
    }


def traces(cfg: ExperimentConfig, run: int = 0) -> dict[str, Trajectory]:
    """Recorded reading trajectories of one product and one entangled teacher on a shared reservoir."""
    instance = make_instance(cfg, run)
    product, entangled = teacher_set(cfg, run, "train", 2)
    out = {}
    for name, st in (("entangled", entangled), ("product", product)):
        _, traj = read_teacher(instance.rho, st, instance.coupling, instance.params, instance.evolution, record=True)
        out[name] = traj
    return out


def equilibration_runs(cfg: ExperimentConfig, run: int = 0) -> dict[str, Trajectory]:
    return {init: make_instance(cfg, run, init).trajectory for init in ("ground", "random_product")}


def max_pairwise_deviation(traj: Trajectory) -> float:
    pops = np.array(traj.rows)[:, :N_POP]
    return float(np.max(pops.max(axis=1) - pops.min(axis=1)))


def is_increasing(times: Sequence[float]) -> bool:
    return bool(np.all(np.diff(times) > 0)) and all(math.isfinite(t) for t in times)
