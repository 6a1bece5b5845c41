import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixprep.corpus import random_density, random_state
from mixprep.linalg import (
    DensityMatrix,
    DimensionError,
    StateVector,
    ValidationError,
    eigh,
    fidelity,
    frobenius_norm,
    hermitian_psd_check,
    jacobi_eigh,
    partial_trace,
    trace_distance,
    trace_norm,
)

from conftest import random_hermitian

seeds = st.integers(0, 2**32 - 1)


def test_psd_check_examples():
    r = hermitian_psd_check(np.eye(2) / 2)
    assert r.hermitian and r.psd
    assert r.min_eigenvalue == pytest.approx(0.5)
    assert not hermitian_psd_check([[0, 1], [-1, 0]]).hermitian
    r = hermitian_psd_check([[0.5, 0.6], [0.6, 0.5]])
    assert r.hermitian and not r.psd
    assert r.min_eigenvalue == pytest.approx(-0.1)
    with pytest.raises(DimensionError):
        hermitian_psd_check(np.ones((2, 3)))


def test_eigh_examples():
    w, v = eigh(np.diag([0.3, 0.7]))
    np.testing.assert_allclose(w, [0.7, 0.3])
    np.testing.assert_allclose(np.abs(v), [[0, 1], [1, 0]], atol=1e-15)
    w, _ = eigh(np.full((2, 2), 0.5))
    np.testing.assert_allclose(w, [1, 0], atol=1e-15)
    with pytest.raises(ValidationError):
        eigh([[0, 1], [0, 0]])


@pytest.mark.parametrize("d", [1, 2, 3, 7, 16, 33, 64])
def test_jacobi_round_trip(d, rng):
    m = random_hermitian(d, rng)
    w, v = jacobi_eigh(m)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm((v * w) @ v.conj().T - m) <= 1e-9 * np.linalg.norm(m)
    assert np.abs(v.conj().T @ v - np.eye(d)).max() <= 1e-9
    np.testing.assert_allclose(w, np.linalg.eigvalsh(m)[::-1], atol=1e-12 * np.linalg.norm(m))


def test_eigh_lapack_above_jacobi_limit(rng):
    m = random_hermitian(80, rng)
    w, v = eigh(m)
    assert np.linalg.norm((v * w) @ v.conj().T - m) <= 1e-9 * np.linalg.norm(m)


def test_jacobi_handles_tiny_offdiagonals():
    m = np.diag([1.0, 0.5, 0.25]).astype(complex)
    m[0, 1] = m[1, 0] = 1e-310
    w, _ = jacobi_eigh(m)
    np.testing.assert_allclose(w, [1.0, 0.5, 0.25])


def test_norm_examples():
    assert frobenius_norm(np.eye(2)) == pytest.approx(np.sqrt(2))
    assert trace_norm(np.eye(2)) == pytest.approx(2)
    assert frobenius_norm(np.zeros((2, 2))) == 0
    assert trace_norm(np.zeros((2, 2))) == 0
    assert frobenius_norm(np.diag([0.6, -0.8])) == pytest.approx(1.0)
    assert trace_norm(np.diag([0.6, -0.8])) == pytest.approx(1.4)


def test_trace_norm_non_hermitian():
    a = np.array([[0, 2], [0, 0]])
    assert trace_norm(a) == pytest.approx(2)


def test_distance_and_fidelity_examples():
    zero, one = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    half = np.eye(2) / 2
    assert trace_distance(half, half) == pytest.approx(0, abs=1e-15)
    assert trace_distance(zero, one) == pytest.approx(1)
    assert trace_distance(half, zero) == pytest.approx(0.5)
    assert fidelity(half, half) == pytest.approx(1)
    assert fidelity(zero, one) == pytest.approx(0, abs=1e-15)
    assert fidelity(half, zero) == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        trace_distance(half, np.eye(4) / 4)
    with pytest.raises(ValidationError):
        fidelity(np.diag([1.5, -0.5]), half)


def test_partial_trace_examples():
    p00 = np.zeros((4, 4))
    p00[0, 0] = 1
    np.testing.assert_allclose(partial_trace(p00, [0]), np.diag([1, 0]))
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(partial_trace(np.outer(bell, bell), [0]), np.eye(2) / 2, atol=1e-15)
    with pytest.raises(ValueError):
        partial_trace(p00, [])


def test_partial_trace_of_purification(rng):
    # brute force: sum over ancilla basis states
    n, m, ell = 2, 2, 3
    w = np.array([0.5, 0.3, 0.2])
    states = [random_state(n, rng).amplitudes for _ in range(ell)]
    big = sum(np.sqrt(p) * np.kron(s, np.eye(1 << m)[i]) for i, (p, s) in enumerate(zip(w, states)))
    rho = np.outer(big, big.conj())
    expected = sum(p * np.outer(s, s.conj()) for p, s in zip(w, states))
    np.testing.assert_allclose(partial_trace(rho, [0, 1]), expected, atol=1e-14)
    brute = np.zeros((4, 4), dtype=complex)
    for a in range(1 << m):
        e = np.kron(np.eye(4), np.eye(1 << m)[a][:, None])
        brute += e.T @ rho @ e
    np.testing.assert_allclose(partial_trace(rho, [0, 1]), brute, atol=1e-14)


def test_containers_validate():
    with pytest.raises(ValidationError, match="unit-norm"):
        StateVector(np.array([0.9, 0.0]) ** 0.5)
    with pytest.raises(DimensionError):
        StateVector([1, 0, 0])
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(ValidationError):
        DensityMatrix([[0.5, 0.6], [0.6, 0.5]])
    assert StateVector.basis(3, 2).num_qubits == 2


@given(seeds, st.integers(1, 3))
def test_fuchs_van_de_graaf(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_density(n, rng), random_density(n, rng, rank=1)
    f, d = fidelity(a, b), trace_distance(a, b)
    assert 1 - np.sqrt(f) <= d + 1e-12
    assert d <= np.sqrt(1 - f) + 1e-9


@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_partial_trace_of_product(seed, na, nb):
    rng = np.random.default_rng(seed)
    a, b = random_density(na, rng), random_density(nb, rng)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), range(na)), a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), range(na, na + nb)), b, atol=1e-12)


@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_trace_norm_dominates_frobenius(seed, r, c):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
    assert trace_norm(m) >= frobenius_norm(m) * (1 - 1e-12)
    rank1 = np.outer(m[:, 0], m[0].conj())
    assert trace_norm(rank1) == pytest.approx(frobenius_norm(rank1), rel=1e-9)
