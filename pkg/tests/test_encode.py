"""Feature encodings, pinned against explicit Kronecker-product rotations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtboost.encode import EncodingSpec, encode, encode_batch


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def embed(u, qubit, n):
    return np.kron(np.kron(np.eye(1 << qubit), u), np.eye(1 << (n - 1 - qubit)))


def angle_oracle(x, n):
    """Round-robin single-qubit rotations applied to |0…0⟩, qubit 0 = MSB."""
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    for i, val in enumerate(x):
        gate = ry if (i // n) % 2 == 0 else rx
        psi = embed(gate(val), i % n, n) @ psi
    return psi


def test_spec_validation():
    EncodingSpec("angle", 4)
    with pytest.raises(ValueError):
        EncodingSpec("fourier", 4)
    with pytest.raises(ValueError):
        EncodingSpec("angle", 0)


def test_amplitude_normalizes_and_pads():
    spec = EncodingSpec("amplitude", 2)
    out = encode_batch(np.array([[3.0, 4.0]]), spec)
    np.testing.assert_allclose(out[0], [0.6, 0.8, 0.0, 0.0], atol=1e-15)
    assert out.dtype == np.complex128


def test_amplitude_scale_invariance():
    spec = EncodingSpec("amplitude", 3)
    x = np.random.default_rng(5).standard_normal((4, 6))
    a = encode_batch(x, spec)
    b = encode_batch(917.3 * x, spec)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_amplitude_rejects_zero_vector_and_overflow():
    spec = EncodingSpec("amplitude", 2)
    with pytest.raises(ValueError):
        encode_batch(np.zeros((1, 3)), spec)
    with pytest.raises(ValueError):
        encode_batch(np.ones((1, 5)), spec)  # 5 features > 2^2


def test_raw_passthrough_and_validation():
    spec = EncodingSpec("raw", 2)
    v = np.array([0.5, 0.5, 0.5, 0.5])
    np.testing.assert_array_equal(encode_batch(v[None], spec)[0], v)
    with pytest.raises(ValueError):
        encode_batch(np.array([[1.0, 1.0, 0.0, 0.0]]), spec)  # not unit norm
    with pytest.raises(ValueError):
        encode_batch(np.array([[1.0, 0.0]]), spec)  # wrong length


@pytest.mark.parametrize("n,d", [(2, 2), (3, 3), (3, 7), (4, 9), (2, 5)])
def test_angle_matches_rotation_oracle(n, d):
    x = np.random.default_rng(n * 100 + d).uniform(-np.pi, np.pi, size=(3, d))
    got = encode_batch(x, EncodingSpec("angle", n))
    for row, feats in zip(got, x):
        np.testing.assert_allclose(row, angle_oracle(feats, n), atol=1e-13)


def test_angle_round_robin_gate_alternation():
    # with n qubits, features n..2n-1 form the second pass and must use Rx
    n = 2
    x = np.array([0.0, 0.0, 1.1, 0.0])  # only feature 2 (pass 1, qubit 0) acts
    got = encode_batch(x[None], EncodingSpec("angle", n))[0]
    want = embed(rx(1.1), 0, n) @ np.array([1, 0, 0, 0], dtype=complex)
    np.testing.assert_allclose(got, want, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8),
       st.integers(min_value=1, max_value=3))
def test_angle_outputs_are_normalized(feats, n):
    out = encode_batch(np.array([feats]), EncodingSpec("angle", n))
    assert abs(np.linalg.norm(out[0]) - 1.0) < 1e-12


def test_single_sample_wrapper_returns_state():
    sv = encode([0.3, 0.7], EncodingSpec("angle", 2))
    assert sv.n_qubits == 2
    np.testing.assert_allclose(sv.amplitudes,
                               angle_oracle([0.3, 0.7], 2), atol=1e-13)
