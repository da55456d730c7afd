"""Single-qubit Kraus noise channels: generalized amplitude damping,
depolarizing, and reset error.

Each channel acts on one qubit of an n-qubit density matrix,
ρ → Σ_i (I ⊗ E_i ⊗ I) ρ (I ⊗ E_i ⊗ I)†, with Σ E_i†E_i = I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .qcore import DensityMatrix, _as_matrix, num_qubits

KINDS = ("none", "depolarizing", "gad", "reset")

_ID2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class NoiseSpec:
    """Channel kind plus parameters.

    kind: one of 'none', 'depolarizing', 'gad', 'reset'.
    p: mixing probability in [0, 1] (unused for 'none').
    gamma: damping strength in [0, 1], only meaningful for 'gad'.
    """

    kind: str
    p: float = 0.0
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {KINDS}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"channel probability p={self.p} outside [0, 1]")
        if self.kind == "gad":
            if self.gamma is None:
                raise ValueError("the 'gad' channel needs a damping strength gamma")
            if not (0.0 <= self.gamma <= 1.0):
                raise ValueError(f"damping gamma={self.gamma} outside [0, 1]")
        elif self.gamma is not None:
            raise ValueError(f"gamma is only a parameter of the 'gad' channel, got kind={self.kind!r}")


def kraus_ops(spec: NoiseSpec) -> np.ndarray:
    """Kraus operators of the channel as a stacked (k, 2, 2) complex array.

    Operators with exactly zero norm (e.g. at p=0) are dropped, so the
    depolarizing channel at p=0 is literally {I}.
    """
    kind = spec.kind
    if kind == "none":
        ops = [_ID2]
    elif kind == "depolarizing":
        p = spec.p
        ops = [
            np.sqrt(1.0 - 0.75 * p) * _ID2,
            np.sqrt(0.25 * p) * _X,
            np.sqrt(0.25 * p) * _Y,
            np.sqrt(0.25 * p) * _Z,
        ]
    elif kind == "gad":
        # Damping toward a mixture of |0> and |1>;  labels E0/E1 follow the
        # convention where E0 carries the upward jump.
        g, p = spec.gamma, spec.p
        sp, sq = np.sqrt(p), np.sqrt(1.0 - p)
        sg, sgbar = np.sqrt(g), np.sqrt(1.0 - g)
        ops = [
            sp * np.array([[0, sg], [0, 0]], dtype=np.complex128),
            sp * np.array([[1, 0], [0, sgbar]], dtype=np.complex128),
            sq * np.array([[sgbar, 0], [0, 1]], dtype=np.complex128),
            sq * np.array([[0, 0], [sg, 0]], dtype=np.complex128),
        ]
    else:  # reset
        p = spec.p
        ops = [
            np.sqrt(1.0 - p) * _ID2,
            np.sqrt(p) * np.array([[1, 0], [0, 0]], dtype=np.complex128),
            np.sqrt(p) * np.array([[0, 1], [0, 0]], dtype=np.complex128),
        ]
    kept = [op for op in ops if np.linalg.norm(op) > 0.0]
    return np.ascontiguousarray(np.stack(kept))


def completeness_defect(kraus: np.ndarray) -> float:
    """Max-abs deviation of Σ E†E from the identity."""
    acc = np.einsum("kca,kcb->ab", np.conj(kraus), kraus)
    return float(np.max(np.abs(acc - _ID2)))


def adjoint_kraus(kraus: np.ndarray) -> np.ndarray:
    """Stack of E† for the Heisenberg-picture (observable) direction."""
    return np.ascontiguousarray(np.conj(np.transpose(kraus, (0, 2, 1))))


def apply_channel(rho, spec: NoiseSpec, qubit: int):
    """Apply the channel to one qubit of a density matrix.

    Args:
        rho: DensityMatrix or (d, d) array.
        spec: channel description.
        qubit: acted qubit index (0 = most significant).

    Returns:
        Same type as the input (DensityMatrix in → DensityMatrix out).
    """
    wrap = isinstance(rho, DensityMatrix)
    mat = _as_matrix(rho)
    n = num_qubits(mat.shape[0])
    if not (0 <= qubit < n):
        raise ValueError(f"qubit index {qubit} out of range for {n} qubits")
    if spec.kind == "none":
        return rho
    kraus = kraus_ops(spec)
    defect = completeness_defect(kraus)
    if defect > 1e-10:
        raise ValueError(f"Kraus set violates completeness by {defect}")
    batch = np.array(mat[None, :, :], dtype=np.complex128, order="C")
    kern = backend.kernels()
    kinds = np.array([4], dtype=np.int32)
    qubits = np.array([qubit], dtype=np.int32)
    args = np.array([-1], dtype=np.int32)
    kern.dm_run(batch, kinds, qubits, args, np.zeros(1), n, kraus)
    out = batch[0]
    if wrap:
        return DensityMatrix(out, validate=False)
    return out
