"""Classical-to-quantum feature encodings.

Amplitude encoding zero-pads the feature vector to length 2^n and
normalizes it into state amplitudes.  Angle encoding starts from |0…0⟩ and
applies one rotation per feature: feature i goes to qubit (i mod n), with
the gate alternating between Ry and Rx on successive passes over the
qubits (pass 0 → Ry, pass 1 → Rx, pass 2 → Ry, ...), angle = raw feature
value.  RawState passes an already-normalized 2^n vector straight through
(used for ground-state inputs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import ATOL_STATE, StateVector

KINDS = ("amplitude", "angle", "raw")


@dataclass(frozen=True)
class EncodingSpec:
    kind: str
    n_qubits: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown encoding kind {self.kind!r}; expected one of {KINDS}")
        if self.n_qubits < 1:
            raise ValueError("encoding needs at least one qubit")


def encode_batch(features: np.ndarray, spec: EncodingSpec) -> np.ndarray:
    """Encode a (M, d) feature batch into a (M, 2^n) statevector batch."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = spec.n_qubits
    dim = 1 << n
    d = x.shape[1]

    if spec.kind == "amplitude":
        if d > dim:
            raise ValueError(f"amplitude encoding of {d} features needs more than {n} qubits")
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("amplitude encoding rejects the exact zero vector")
        out = np.zeros((x.shape[0], dim), dtype=np.complex128)
        out[:, :d] = x / norms[:, None]
        return out

    if spec.kind == "raw":
        if d != dim:
            raise ValueError(f"raw-state encoding needs exactly {dim} values, got {d}")
        norms = np.linalg.norm(x, axis=1)
        if np.any(np.abs(norms - 1.0) > ATOL_STATE):
            raise ValueError("raw-state encoding requires unit-norm inputs")
        return x.astype(np.complex128)

    # angle encoding
    out = np.zeros((x.shape[0], dim), dtype=np.complex128)
    out[:, 0] = 1.0
    for i in range(d):
        q = i % n
        use_ry = (i // n) % 2 == 0
        _rotate_per_sample(out, q, n, x[:, i], use_ry)
    return out


def _rotate_per_sample(psi: np.ndarray, q: int, n: int, angles: np.ndarray,
                       use_ry: bool) -> None:
    # per-sample rotation angles, so this stays plain numpy (encoding is not
    # on the training hot path)
    v = psi.reshape(psi.shape[0], 1 << q, 2, 1 << (n - 1 - q))
    c = np.cos(0.5 * angles)[:, None, None]
    s = np.sin(0.5 * angles)[:, None, None]
    a = v[:, :, 0, :].copy()
    b = v[:, :, 1, :].copy()
    if use_ry:
        v[:, :, 0, :] = c * a - s * b
        v[:, :, 1, :] = s * a + c * b
    else:
        v[:, :, 0, :] = c * a - 1j * s * b
        v[:, :, 1, :] = -1j * s * a + c * b


def encode(x, spec: EncodingSpec) -> StateVector:
    """Encode a single feature vector into a pure state."""
    return StateVector(encode_batch(np.asarray(x)[None, :], spec)[0],
                       validate=False)
