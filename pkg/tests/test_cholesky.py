import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixprep.cholesky import (
    BreakdownError,
    CholeskyFactor,
    EmptyEnsembleError,
    Ensemble,
    IndefiniteMatrixError,
    ensemble_from_eigh,
    ensemble_from_factor,
    factorize_density,
    fill_reducing_order,
    incomplete_cholesky,
    pivoted_cholesky,
    prune_zero_columns,
)
from mixprep.corpus import random_density, sparse_density
from mixprep.linalg import ValidationError

seeds = st.integers(0, 2**32 - 1)
s = np.sqrt(0.5)


def test_pivoted_diagonal():
    f = pivoted_cholesky(np.diag([0.5, 0.5]))
    np.testing.assert_allclose(f.L, np.diag([s, s]))
    assert f.rank == 2 and list(f.permutation) == [0, 1]


def test_pivoted_rank_one_projector():
    f = pivoted_cholesky(np.full((2, 2), 0.5))
    assert f.rank == 1
    np.testing.assert_allclose(f.unpermuted()[:, 0], [s, s])
    assert np.all(f.L[:, 1] == 0)


def test_pivoted_reveals_rank_and_prunes(rng):
    a = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    f = pivoted_cholesky(rho)
    assert f.rank == 3
    fm = prune_zero_columns(f)
    assert fm.A.shape == (8, 3)
    assert np.linalg.norm(fm.A @ fm.A.conj().T - rho) <= 1e-12


def test_pivot_ties_prefer_lowest_index():
    f = pivoted_cholesky(np.diag([0.2, 0.4, 0.4]))
    assert list(f.permutation) == [1, 2, 0]


def test_pivoted_rejects_indefinite():
    with pytest.raises(IndefiniteMatrixError):
        pivoted_cholesky([[0.5, 0.6], [0.6, 0.5]])
    with pytest.raises(ValidationError):
        pivoted_cholesky([[1, 1], [0, 1]])


def test_unpivoted_zero_pivot_with_consistent_column():
    f = pivoted_cholesky(np.diag([0.0, 1.0]), pivot=False)
    assert f.rank == 1
    np.testing.assert_allclose(f.reconstruct(), np.diag([0.0, 1.0]))


def test_prune_examples():
    f = CholeskyFactor(np.diag([1.0, 0.0]).astype(complex), np.arange(2), 1)
    np.testing.assert_array_equal(prune_zero_columns(f).A, [[1], [0]])
    full = pivoted_cholesky(np.diag([0.7, 0.3]))
    assert prune_zero_columns(full).ell == 2


def test_incomplete_zero_tolerance_matches_unpivoted(rng):
    rho = random_density(3, rng)
    a = incomplete_cholesky(rho, 0.0)
    b = pivoted_cholesky(rho, pivot=False)
    np.testing.assert_array_equal(a.L, b.L)
    assert a.kind == "incomplete" and b.kind == "complete"


def test_incomplete_diagonal_is_exact():
    rho = np.diag([0.1, 0.2, 0.3, 0.4])
    for eps in (1e-3, 0.5):
        f = incomplete_cholesky(rho, eps)
        np.testing.assert_allclose(f.reconstruct(), rho, atol=1e-16)


def test_incomplete_banded_d16(rng):
    rho = sparse_density(16, rng)
    eps = 1e-2
    full = pivoted_cholesky(rho, pivot=False)
    inc = incomplete_cholesky(rho, eps)
    err = np.linalg.norm(inc.reconstruct() - rho) / np.linalg.norm(rho)
    assert err <= 10 * eps
    assert inc.nnz <= full.nnz


def test_incomplete_nnz_monotone(rng):
    rho = sparse_density(32, rng)
    nnz = [incomplete_cholesky(rho, eps).nnz for eps in (0, 1e-4, 1e-3, 1e-2, 1e-1)]
    assert nnz == sorted(nnz, reverse=True)


def _coupled(c):
    # the 0-1 coupling falls under the 0.3 drop threshold; without it the last pivot is c^2 - 0.64 short
    return np.array([[1, 0.2, 0.6], [0.2, 1, c], [0.6, c, 1]])


def test_incomplete_shift_recovers_from_breakdown():
    m = _coupled(np.sqrt(0.64 + 1e-8))
    assert np.linalg.eigvalsh(m).min() > 0.05
    assert incomplete_cholesky(m, 0.0).shift == 0.0
    f = incomplete_cholesky(m, 0.3)
    assert f.shift_trail == (1e-12, 1e-11, 1e-10, 1e-09, 1e-08)
    assert f.shift == 1e-08 and f.rank == 3


def test_incomplete_breakdown_reports_trail():
    with pytest.raises(BreakdownError) as info:
        incomplete_cholesky(_coupled(0.82), 0.3)
    assert info.value.shifts == tuple(10.0 ** k for k in range(-12, -4))


def test_fill_reducing_order():
    m = np.array([[1, 1, 1], [1, 1, 0], [1, 0, 1]])
    assert list(fill_reducing_order(m)) == [1, 2, 0]
    rho = sparse_density(16, 3)
    f = incomplete_cholesky(rho, 1e-3, reorder=True)
    assert np.linalg.norm(f.reconstruct() - rho) / np.linalg.norm(rho) <= 1e-2


def test_ensemble_examples():
    e = ensemble_from_factor(np.diag([s, s]))
    np.testing.assert_allclose(e.weights, [0.5, 0.5])
    np.testing.assert_allclose(e.states[1].amplitudes, [0, 1])
    e = ensemble_from_factor(np.array([[s], [s]]))
    np.testing.assert_allclose(e.weights, [1.0])
    np.testing.assert_allclose(e.states[0].amplitudes, [s, s])
    with pytest.raises(EmptyEnsembleError):
        ensemble_from_factor(np.zeros((2, 2)))


def test_ensemble_renormalizes_truncated_factor(rng):
    a = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    a *= np.sqrt(0.98 / np.sum(np.abs(a) ** 2))
    e = ensemble_from_factor(a)
    assert e.weights.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(e.density_matrix(), a @ a.conj().T / 0.98, atol=1e-12)


def test_ensemble_from_eigh_examples(rng):
    e = ensemble_from_eigh(np.eye(2) / 2)
    np.testing.assert_allclose(e.weights, [0.5, 0.5])
    assert abs(np.vdot(e.states[0].amplitudes, e.states[1].amplitudes)) < 1e-12
    psi = np.array([0.6, 0.8j])
    assert ensemble_from_eigh(np.outer(psi, psi.conj())).size == 1
    rho = random_density(3, rng)
    np.testing.assert_allclose(ensemble_from_eigh(rho).density_matrix(), rho, atol=1e-9)


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        Ensemble([0.5, 0.6], ([1, 0], [0, 1]))
    with pytest.raises(EmptyEnsembleError):
        Ensemble([], ())


def test_factorize_density_paths(rng):
    rho = random_density(2, rng)
    f, fm, e = factorize_density(rho)
    assert f.kind == "complete" and fm.ell == 4
    f, fm, e = factorize_density(rho, 1e-3)
    assert f.kind == "incomplete"


@pytest.mark.parametrize("d", [2, 4, 8, 16, 32, 64])
def test_reconstruction(d, rng):
    rho = random_density(d.bit_length() - 1, rng)
    fm = prune_zero_columns(pivoted_cholesky(rho))
    assert np.linalg.norm(rho - fm.A @ fm.A.conj().T) <= 1e-10


@given(seeds, st.integers(1, 5), st.data())
def test_rank_revealed(seed, n, data):
    d = 1 << n
    r = data.draw(st.integers(1, max(1, d // 2)))
    f = pivoted_cholesky(random_density(n, seed, rank=r))
    assert f.rank == r
    assert prune_zero_columns(f).ell == r


@given(seeds, st.integers(1, 4))
def test_unitary_freedom(seed, n):
    rho = random_density(n, seed, rank=max(1, (1 << n) - 1))
    a = ensemble_from_factor(prune_zero_columns(pivoted_cholesky(rho))).density_matrix()
    b = ensemble_from_eigh(rho).density_matrix()
    assert np.abs(a - b).max() <= 1e-9


@given(seeds, st.integers(1, 5))
def test_triangular_structural_zeros(seed, n):
    rho = random_density(n, seed)
    f = pivoted_cholesky(rho)
    cols = f.L[:, np.any(f.L != 0, axis=0)]
    ell = cols.shape[1]
    assert np.count_nonzero(cols[:ell] == 0) >= ell * (ell - 1) // 2
