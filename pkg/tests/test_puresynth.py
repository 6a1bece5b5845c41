import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixprep.circuit import UCR, Circuit, Controlled, gate_counts, lower_all, unitary_of
from mixprep.corpus import random_state
from mixprep.linalg import StateVector, ValidationError
from mixprep.puresynth import (
    diagonal_phase_gates,
    phase_tree,
    pure_angles,
    synth_pure,
    synth_pure_as_controlled,
)
from mixprep.sim import simulate_statevector

seeds = st.integers(0, 2**32 - 1)


def _fidelity(psi, c):
    out = simulate_statevector(c)
    return abs(np.vdot(np.asarray(psi), out)) ** 2


def _rebuild(tree):
    """Amplitudes the RY/RZ ladder produces from |0...0>, computed without any circuit."""
    amp = np.ones(1, dtype=complex)
    for k in range(tree.num_qubits):
        t, p = tree.theta_y[k], tree.phi_z[k]
        lo = amp * np.cos(t / 2) * np.exp(-0.5j * p)
        hi = amp * np.sin(t / 2) * np.exp(0.5j * p)
        amp = np.stack([lo, hi], axis=1).reshape(-1)
    return amp


def test_angles_examples():
    tree, _ = pure_angles(StateVector.basis(0, 3))
    assert all(np.all(t == 0) for t in tree.theta_y + tree.phi_z)
    tree, _ = pure_angles([0, 1])
    assert tree.theta_y[0][0] == pytest.approx(np.pi)
    assert tree.phi_z[0][0] == 0
    tree, ledger = pure_angles(np.full(4, 0.5))
    assert tree.theta_y[0][0] == pytest.approx(np.pi / 2)
    np.testing.assert_allclose(tree.theta_y[1], [np.pi / 2, np.pi / 2])
    assert all(np.all(p == 0) for p in tree.phi_z) and ledger.global_phase == 0
    with pytest.raises(ValidationError):
        pure_angles(np.zeros(4))


@given(seeds, st.integers(1, 6))
def test_angle_tree_reconstructs_state(seed, n):
    psi = random_state(n, seed).amplitudes
    tree, ledger = pure_angles(psi)
    for t, p in zip(tree.theta_y, tree.phi_z):
        assert np.all((t >= 0) & (t <= np.pi))
        assert np.all((p > -np.pi - 1e-15) & (p <= np.pi))
    np.testing.assert_allclose(_rebuild(tree), np.exp(1j * ledger.global_phase) * psi, atol=1e-12)


def test_phase_tree_zero_leaves_inherit_sibling():
    levels, root = phase_tree(np.array([0.3, 9.0, 1.0, 1.4]), np.array([True, False, True, True]))
    np.testing.assert_allclose(levels[1], [0.0, 0.4])
    np.testing.assert_allclose(levels[0], [1.2 - 0.3])
    assert root == pytest.approx((0.3 + 1.2) / 2)


@pytest.mark.parametrize("n", range(1, 11))
def test_worst_case_counts(n, rng):
    c = synth_pure(random_state(n, rng), skip_zeros=False)
    r = gate_counts(c, skip_zeros=False)
    assert r.cnot == 2 ** (n + 1) - 2 * n - 2
    assert r.one_qubit_rotations == 2 ** (n + 1) - 2


def test_ladder_order_is_y_then_z_per_level(rng):
    c = synth_pure(random_state(3, rng), skip_zeros=False)
    assert [(g.axis, g.target, len(g.controls)) for g in c.gates] == [
        ("y", 0, 0), ("z", 0, 0), ("y", 1, 1), ("z", 1, 1), ("y", 2, 2), ("z", 2, 2)]


def test_n3_example(rng):
    psi = random_state(3, rng)
    c = synth_pure(psi)
    r = gate_counts(c)
    assert (r.cnot, r.one_qubit_rotations) == (8, 14)
    assert _fidelity(psi.amplitudes, lower_all(c)) >= 1 - 1e-10


@pytest.mark.parametrize("n", range(1, 9))
def test_fidelity_random_states(n, rng):
    for _ in range(10):
        psi = random_state(n, rng)
        assert _fidelity(psi.amplitudes, synth_pure(psi)) >= 1 - 1e-10


def test_global_phase_ledger(rng):
    psi = random_state(4, rng).amplitudes
    c = synth_pure(psi)
    out = simulate_statevector(c)
    np.testing.assert_allclose(out, np.exp(1j * c.metadata["global_phase"]) * psi, atol=1e-12)


@given(seeds, st.integers(1, 6))
def test_product_state_needs_no_cnot(seed, n):
    one = random_state(1, seed).amplitudes
    psi = one
    for _ in range(n - 1):
        psi = np.kron(psi, one)
    c = synth_pure(psi)
    assert gate_counts(c).cnot == 0
    assert _fidelity(psi, lower_all(c)) >= 1 - 1e-10


@given(st.integers(1, 7), st.data())
def test_basis_state(n, data):
    a = data.draw(st.integers(0, (1 << n) - 1))
    c = synth_pure(StateVector.basis(a, n))
    r = gate_counts(c)
    low = lower_all(c)
    assert r.cnot == 0 and r.one_qubit_rotations <= n
    assert all(abs(g.param - np.pi) < 1e-12 for g in low.gates)
    assert _fidelity(StateVector.basis(a, n).amplitudes, low) >= 1 - 1e-12


@given(seeds, st.integers(1, 6), st.data())
def test_sparse_states(seed, n, data):
    rng = np.random.default_rng(seed)
    s = data.draw(st.integers(1, 1 << n))
    psi = np.zeros(1 << n, dtype=complex)
    idx = rng.choice(1 << n, size=s, replace=False)
    psi[idx] = rng.normal(size=s) + 1j * rng.normal(size=s)
    psi /= np.linalg.norm(psi)
    skipped, dense = synth_pure(psi), synth_pure(psi, skip_zeros=False)
    r = gate_counts(skipped)
    assert r.cnot <= 2 ** (n + 1) - 2 * n - 2
    if s == 1:
        assert r.cnot == 0
    f_skip = _fidelity(psi, lower_all(skipped))
    f_dense = _fidelity(psi, lower_all(dense, skip_zeros=False))
    assert abs(f_skip - f_dense) <= 1e-12
    assert f_skip >= 1 - 1e-10


def test_controlled_empty_controls_is_plain_ladder(rng):
    psi = random_state(2, rng)
    assert synth_pure_as_controlled(psi, []) == list(synth_pure(psi).gates)


def test_controlled_one_qubit_flip():
    gates = synth_pure_as_controlled([0, 1], [(0, True)], qubits=[1])
    u = unitary_of(Circuit(2, tuple(gates)))
    # control 0 leaves |00> alone, control 1 flips the target
    np.testing.assert_allclose(u[:, 0], [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(np.abs(u[:, 2]), [0, 0, 0, 1], atol=1e-12)
    np.testing.assert_allclose(np.abs(u), np.eye(4)[:, [0, 1, 3, 2]], atol=1e-12)


def test_controlled_negative_controls(rng):
    psi = random_state(1, rng).amplitudes
    c = Circuit(3, tuple(synth_pure_as_controlled(psi, [(1, False), (2, False)], qubits=[0])))
    u = unitary_of(c)
    for anc in range(4):
        col = u[:, anc].reshape(2, 4)
        assert np.abs(col[:, [a for a in range(4) if a != anc]]).max() <= 1e-12
        expected = psi if anc == 0 else np.array([1, 0])
        assert abs(abs(np.vdot(expected, col[:, anc])) - 1) <= 1e-12


def _branch_outputs(u, n, m):
    outs = []
    for anc in range(1 << m):
        outs.append(u[:, anc].reshape(1 << n, 1 << m)[:, anc])
    return outs


@given(seeds, st.integers(1, 3), st.integers(1, 2), st.data())
def test_branch_phase_exactness(seed, n, m, data):
    psi = random_state(n, seed).amplitudes
    pattern = data.draw(st.integers(0, (1 << m) - 1))
    controls = [(n + j, bool((pattern >> (m - 1 - j)) & 1)) for j in range(m)]
    c = Circuit(n + m, tuple(synth_pure_as_controlled(psi, controls)))
    outs = _branch_outputs(unitary_of(c), n, m)
    # fix the unobservable global phase on an inactive branch, where the target stays |0>
    ref = next(outs[a][0] for a in range(1 << m) if a != pattern) if m else 1
    ref /= abs(ref)
    assert np.abs(outs[pattern] - ref * psi).max() <= 1e-12
    for a in range(1 << m):
        if a != pattern:
            assert np.abs(outs[a] - ref * np.eye(1 << n)[0]).max() <= 1e-12


def test_controlled_without_phase_fix_is_off_by_branch_phase(rng):
    psi = random_state(2, rng).amplitudes * np.exp(0.9j)
    c = Circuit(3, tuple(synth_pure_as_controlled(psi, [(2, True)], phase_fix=False)))
    outs = _branch_outputs(unitary_of(c), 2, 1)
    assert abs(abs(np.vdot(psi, outs[1])) - 1) <= 1e-12
    assert np.abs(outs[1] - outs[0][0] * psi).max() > 1e-3


def test_controlled_overlap_error():
    with pytest.raises(ValueError, match="overlap"):
        synth_pure_as_controlled([0.6, 0.8], [(0, True)], qubits=[0])


@given(seeds, st.integers(1, 3))
def test_diagonal_phase_gates(seed, m):
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-3, 3, 1 << m)
    u = unitary_of(Circuit(m, tuple(diagonal_phase_gates(phases, range(m)))))
    d = np.diag(u)
    assert np.abs(u - np.diag(d)).max() <= 1e-12
    rel = d * np.exp(-1j * phases)
    assert np.abs(rel - rel[0]).max() <= 1e-12
