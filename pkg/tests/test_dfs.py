import numpy as np
import pytest

from dfsqrc.dfs import (
    SingletBasis,
    build_singlet_basis,
    dump_basis_csv,
    load_basis_csv,
    singlet_count,
    singlet_projectors,
)
from dfsqrc.dynamics import propagate
from dfsqrc.errors import DomainError
from dfsqrc.hilbert import CompositeSpace, total_spin, total_spin_squared


@pytest.mark.parametrize("n,count", [(2, 1), (4, 2), (6, 5), (8, 14), (10, 42)])
def test_singlet_count_catalan(n, count):
    assert singlet_count(n) == count


@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_singlet_count_domain(n):
    with pytest.raises(DomainError):
        singlet_count(n)


def test_two_qubit_singlet():
    b = build_singlet_basis(2)
    np.testing.assert_allclose(b.vectors[:, 0], [0, 1 / np.sqrt(2), -1 / np.sqrt(2), 0], atol=1e-15)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_basis_invariants(n):
    b = build_singlet_basis(n)
    assert b.size == singlet_count(n)
    v = b.vectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(b.size))) <= 1e-10
    space = CompositeSpace.qubits(n)
    assert np.max(np.linalg.norm(total_spin_squared(space) @ v, axis=0)) <= 1e-10
    for component in ("plus", "minus", "z"):
        assert np.max(np.linalg.norm(total_spin(space, component) @ v, axis=0)) <= 1e-10


def test_phase_convention():
    v = build_singlet_basis(6).vectors
    for k in range(v.shape[1]):
        lead = v[np.flatnonzero(np.abs(v[:, k]) > 1e-10)[0], k]
        assert lead.real > 0 and abs(lead.imag) <= 1e-15


def test_deterministic_bitwise():
    build_singlet_basis.cache_clear()
    first = build_singlet_basis(6).vectors.copy()
    build_singlet_basis.cache_clear()
    np.testing.assert_array_equal(build_singlet_basis(6).vectors, first)


def test_projectors():
    p = singlet_projectors(build_singlet_basis(6))
    assert p.shape == (5, 64, 64)
    for i in range(5):
        np.testing.assert_allclose(p[i] @ p[i], p[i], atol=1e-10)
        assert np.trace(p[i]).real == pytest.approx(1.0, abs=1e-12)
        for j in range(5):
            assert np.trace(p[i] @ p[j]).real == pytest.approx(float(i == j), abs=1e-12)
            if i != j:
                assert np.max(np.abs(p[i] @ p[j])) <= 1e-10
    total = p.sum(axis=0)
    np.testing.assert_allclose(total @ total, total, atol=1e-10)
    assert np.trace(total).real == pytest.approx(5.0)
    # maximally mixed state
    np.testing.assert_allclose(np.einsum("kii->k", p).real / 64, 1 / 64)


def test_csv_round_trip(tmp_path):
    b = build_singlet_basis(6)
    path = tmp_path / "basis.csv"
    dump_basis_csv(b, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("index,re_0,im_0")
    assert len(lines) == 65
    np.testing.assert_array_equal(load_basis_csv(path, 6).vectors, b.vectors)


def _random_dfs_state(rng, basis: SingletBasis) -> np.ndarray:
    c = rng.standard_normal((basis.size,) * 2) + 1j * rng.standard_normal((basis.size,) * 2)
    inner = c @ c.conj().T
    return basis.vectors @ (inner / np.trace(inner)) @ basis.vectors.conj().T


@pytest.mark.parametrize("n", [2, 4, 6])
def test_collective_noise_protection(rng, n):
    basis = build_singlet_basis(n)
    space = CompositeSpace.qubits(n)
    rho0 = _random_dfs_state(rng, basis)
    collapse = [(total_spin(space, c), r) for c, r in (("minus", 1.0), ("plus", 0.5), ("z", 0.3))]
    rho = propagate(rho0, np.zeros_like(rho0), collapse, 1.0)
    assert np.max(np.abs(rho - rho0)) <= 1e-8


def test_collective_noise_dephases_non_singlets(rng):
    # control: a state outside the DFS is not protected
    space = CompositeSpace.qubits(2)
    psi = np.array([0, 1, 0, 0], dtype=complex)
    rho0 = np.outer(psi, psi)
    rho = propagate(rho0, np.zeros((4, 4)), [(total_spin(space, "minus"), 1.0)], 1.0)
    assert np.max(np.abs(rho - rho0)) > 1e-2
