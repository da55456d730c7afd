"""Linear-algebra core: eigen-decomposition, trace distance, mean states.

Oracles: trace distance is cross-checked against the nuclear norm computed
through an independent SVD route; the ground-state solver against the full
spectrum and the residual identity; small cases against hand closed forms.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtboost.qcore import (ATOL_SOLVER, ATOL_STATE, DensityMatrix, MAX_QUBITS,
                           StateVector, eigsh_ground, eigvalsh, kron,
                           mean_state, num_qubits, rng, trace_distance)


def random_density(dim, seed):
    gen = np.random.default_rng(seed)
    a = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_state(dim, seed):
    gen = np.random.default_rng(seed)
    v = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return v / np.linalg.norm(v)


# ------------------------------------------------------------------- rng


def test_rng_bit_reproducible():
    a = rng([7, 3, 1]).standard_normal(100)
    b = rng([7, 3, 1]).standard_normal(100)
    assert np.array_equal(a, b)


def test_rng_distinct_streams():
    a = rng([7, 3, 1]).standard_normal(100)
    b = rng([7, 3, 2]).standard_normal(100)
    assert not np.array_equal(a, b)


def test_num_qubits():
    assert num_qubits(1) == 0
    assert num_qubits(8) == 3
    with pytest.raises(ValueError):
        num_qubits(6)
    with pytest.raises(ValueError):
        num_qubits(0)


# ------------------------------------------------------------ containers


def test_statevector_validates_norm():
    StateVector(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        StateVector(np.array([np.nan, 0.0]))


def test_statevector_density_matrix():
    psi = StateVector(np.array([1.0, 1.0]) / np.sqrt(2))
    rho = psi.density_matrix()
    np.testing.assert_allclose(rho.matrix, np.full((2, 2), 0.5), atol=1e-15)


def test_density_matrix_validates():
    DensityMatrix(np.diag([0.25, 0.75]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.6]))  # trace != 1
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1.5, 0.0], [0.0, -0.5]]))  # not PSD
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))  # not Hermitian


# ------------------------------------------------------- eigensolver core


def test_eigvalsh_2x2_closed_form():
    # eigenvalues of [[a, b], [b, c]] are (a+c)/2 ± √(((a−c)/2)² + b²)
    a, b, c = 0.9, -0.4, 0.1
    mid, rad = (a + c) / 2, np.hypot((a - c) / 2, b)
    np.testing.assert_allclose(eigvalsh(np.array([[a, b], [b, c]])),
                               [mid - rad, mid + rad], atol=ATOL_SOLVER)


def test_eigvalsh_ascending_and_hermitian_check():
    vals = eigvalsh(random_density(8, 0))
    assert np.all(np.diff(vals) >= 0)
    with pytest.raises(ValueError):
        eigvalsh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigsh_ground_matches_spectrum_and_residual():
    gen = np.random.default_rng(3)
    h = gen.standard_normal((16, 16))
    h = h + h.T
    energy, vec = eigsh_ground(h)
    assert abs(energy - np.linalg.eigvalsh(h)[0]) <= ATOL_SOLVER * np.abs(h).max()
    assert np.linalg.norm(h @ vec - energy * vec) <= 1e-7 * np.linalg.norm(h)
    np.testing.assert_allclose(np.linalg.norm(vec), 1.0, atol=ATOL_STATE)


def test_eigsh_ground_sign_convention_deterministic():
    h = np.diag([-2.0, 1.0, 3.0])
    _, vec = eigsh_ground(h)
    # largest-magnitude component is made positive, so the vector is +e_0
    np.testing.assert_allclose(vec, [1.0, 0.0, 0.0], atol=ATOL_SOLVER)
    _, vec2 = eigsh_ground(-np.eye(3) + 0.1 * np.diag([0.0, 1.0, 2.0]))
    assert vec2[np.argmax(np.abs(vec2))] > 0


# ---------------------------------------------------------- trace distance


def test_trace_distance_nuclear_norm_oracle():
    # ½‖a − b‖₁ equals half the sum of singular values of the difference
    for seed in range(5):
        a, b = random_density(8, seed), random_density(8, 100 + seed)
        expected = 0.5 * np.linalg.svd(a - b, compute_uv=False).sum()
        assert abs(trace_distance(a, b) - expected) <= 1e-12


def test_trace_distance_pure_state_closed_form():
    # for pure states: D = √(1 − |⟨ψ|φ⟩|²)
    psi, phi = random_state(8, 1), random_state(8, 2)
    expected = np.sqrt(1.0 - np.abs(np.vdot(psi, phi)) ** 2)
    d = trace_distance(np.outer(psi, psi.conj()), np.outer(phi, phi.conj()))
    np.testing.assert_allclose(d, expected, atol=1e-12)


def test_trace_distance_orthogonal_and_identical():
    zero = np.diag([1.0, 0.0])
    one = np.diag([0.0, 1.0])
    np.testing.assert_allclose(trace_distance(zero, one), 1.0, atol=1e-15)
    assert trace_distance(zero, zero) == 0.0


def test_trace_distance_accepts_wrappers_and_checks_dims():
    rho = DensityMatrix(np.diag([0.5, 0.5]))
    psi = StateVector(np.array([1.0, 0.0]))
    np.testing.assert_allclose(trace_distance(rho, psi), 0.5, atol=1e-12)
    with pytest.raises(ValueError):
        trace_distance(np.eye(2) / 2, np.eye(4) / 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000))
def test_trace_distance_metric_axioms(sa, sb, sc):
    a, b, c = (random_density(4, s) for s in (sa, sb, sc))
    dab, dba = trace_distance(a, b), trace_distance(b, a)
    assert abs(dab - dba) <= 1e-12
    assert -1e-12 <= dab <= 1.0 + 1e-12
    assert trace_distance(a, c) <= dab + trace_distance(b, c) + 1e-10


# -------------------------------------------------------------------- kron


def test_kron_matches_hand_example():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1.0, -1.0])
    np.testing.assert_allclose(kron(x, z),
                               [[0, 0, 1, 0], [0, 0, 0, -1],
                                [1, 0, 0, 0], [0, -1, 0, 0]], atol=0)


def test_kron_capacity_budget():
    big = np.eye(1 << (MAX_QUBITS - 1))
    with pytest.raises(ValueError):
        kron(big, np.eye(4))
    kron(big, np.eye(2))  # exactly at the budget: allowed


# -------------------------------------------------------------- mean_state


def test_mean_state_pure_stack_equals_projector_average():
    vecs = np.stack([random_state(4, s) for s in range(6)])
    rho = mean_state(vecs).matrix
    manual = sum(np.outer(v, v.conj()) for v in vecs) / 6
    np.testing.assert_allclose(rho, manual, atol=1e-14)


def test_mean_state_weighted_list_of_densities():
    a, b = random_density(4, 5), random_density(4, 6)
    got = mean_state([DensityMatrix(a), DensityMatrix(b)], weights=[3, 1]).matrix
    np.testing.assert_allclose(got, 0.75 * a + 0.25 * b, atol=1e-14)


def test_mean_state_rejects_empty_and_mixed_dims():
    with pytest.raises(ValueError):
        mean_state(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        mean_state([np.eye(2) / 2, np.eye(4) / 4])
