"""Dense complex linear algebra and quantum-state primitives.

Matrices are plain numpy complex128 arrays throughout; `StateVector` and
`DensityMatrix` are thin validating wrappers used at API boundaries (hot
loops work on raw batched arrays).  All numeric tolerances live in the
constants below so every invariant check in the package agrees on them.
"""

from __future__ import annotations

import numpy as np

# Centralized tolerance table.
ATOL_STATE = 1e-10      # state-vector norm / density-matrix Hermiticity and trace
ATOL_SOLVER = 1e-12     # eigensolver-grade agreement
EIG_FLOOR = -1e-9       # how negative an "eigenvalue >= 0" check may go
ATOL_HERM_INPUT = 1e-9  # Hermiticity required of eigensolver inputs
MAX_QUBITS = 12         # dimension budget: operators beyond 2^12 are refused


def rng(seed_parts) -> np.random.Generator:
    """Counter-based generator (Philox) seeded from an int or list of ints.

    Philox is used everywhere in the package so that any result can be
    regenerated bit-for-bit from its recorded seed material.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_parts)))


def num_qubits(dim: int) -> int:
    """Number of qubits for a power-of-two dimension (raises otherwise)."""
    n = int(dim).bit_length() - 1
    if dim <= 0 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


class StateVector:
    """Pure state of ``n_qubits``: a unit-norm complex vector of length 2^n.

    Qubit 0 is the most significant bit of the basis-state index.
    """

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, validate: bool = True):
        amp = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amp.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        self.n_qubits = num_qubits(amp.shape[0])
        if validate:
            norm = float(np.linalg.norm(amp))
            if abs(norm - 1.0) > ATOL_STATE:
                raise ValueError(f"state vector norm {norm} deviates from 1 beyond {ATOL_STATE}")
            if not np.all(np.isfinite(amp.view(np.float64))):
                raise ValueError("state vector has non-finite entries")
        self.amplitudes = amp

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, np.conj(self.amplitudes)),
                             validate=False)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


class DensityMatrix:
    """Mixed state: Hermitian, unit-trace, PSD complex matrix of dim 2^n."""

    __slots__ = ("matrix", "n_qubits")

    def __init__(self, matrix, validate: bool = True):
        mat = np.ascontiguousarray(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        self.n_qubits = num_qubits(mat.shape[0])
        if validate:
            if not np.all(np.isfinite(mat.view(np.float64))):
                raise ValueError("density matrix has non-finite entries")
            herm = float(np.max(np.abs(mat - mat.conj().T)))
            if herm > ATOL_STATE:
                raise ValueError(f"density matrix not Hermitian within {ATOL_STATE} (dev {herm})")
            tr = complex(np.trace(mat))
            if abs(tr - 1.0) > ATOL_STATE:
                raise ValueError(f"density matrix trace {tr} deviates from 1 beyond {ATOL_STATE}")
            lo = float(np.min(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))))
            if lo < EIG_FLOOR:
                raise ValueError(f"density matrix has eigenvalue {lo} below {EIG_FLOOR}")
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(n_qubits={self.n_qubits})"


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, DensityMatrix):
        return a.matrix
    if isinstance(a, StateVector):
        return np.outer(a.amplitudes, np.conj(a.amplitudes))
    return np.asarray(a, dtype=np.complex128)


def _require_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if dev > ATOL_HERM_INPUT:
        raise ValueError(f"matrix not Hermitian within {ATOL_HERM_INPUT} (dev {dev})")
    return 0.5 * (h + h.conj().T)


def eigvalsh(h) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    Raises:
        ValueError: non-square or non-Hermitian input.
    """
    return np.linalg.eigvalsh(_require_hermitian(_as_matrix(h)))


def eigsh_ground(h) -> tuple[float, np.ndarray]:
    """Minimal eigenvalue and a unit-norm eigenvector of a Hermitian matrix.

    Degenerate ground spaces return the solver's deterministic basis choice.
    The vector's global sign is fixed (largest-magnitude component made
    positive real) so regenerated datasets are bit-identical.
    """
    mat = _require_hermitian(_as_matrix(h))
    vals, vecs = np.linalg.eigh(mat)
    v = vecs[:, 0]
    pivot = int(np.argmax(np.abs(v)))
    phase = v[pivot] / abs(v[pivot])
    v = v * np.conj(phase)
    return float(vals[0]), v / np.linalg.norm(v)


def trace_distance(a, b) -> float:
    """Trace distance ½‖a − b‖₁ between two density matrices.

    Computed as half the sum of absolute eigenvalues of the (Hermitian)
    difference; lies in [0, 1] for valid states.  The difference matrix is
    sign-canonicalized before diagonalizing so that both argument orders
    run the eigensolver on the identical matrix, making symmetry hold to
    the last bit rather than up to rounding.
    """
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    diff = am - bm
    key = np.concatenate([diff.real.ravel(), diff.imag.ravel()])
    nz = np.nonzero(key)[0]
    if nz.size and key[nz[0]] < 0:
        diff = -diff
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def kron(a, b) -> np.ndarray:
    """Kronecker product with a hard dimension budget of 2^12.

    Raises:
        ValueError: if the product dimension exceeds the budget.
    """
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.ndim != 2 or bm.ndim != 2:
        raise ValueError("kron expects matrices")
    out_rows = am.shape[0] * bm.shape[0]
    out_cols = am.shape[1] * bm.shape[1]
    budget = 1 << MAX_QUBITS
    if out_rows > budget or out_cols > budget:
        raise ValueError(
            f"kron result {out_rows}x{out_cols} exceeds the {budget} dimension budget"
        )
    return np.kron(am, bm)


def mean_state(states, weights=None) -> DensityMatrix:
    """Arithmetic (optionally weighted) mean of density matrices.

    Accepts a non-empty list of DensityMatrix/arrays or a stacked
    (M, d, d) array; also accepts a stack of pure-state vectors (M, d),
    in which case the mean of their projectors is formed directly.
    """
    if isinstance(states, np.ndarray) and states.ndim == 2:
        if states.shape[0] == 0:
            raise ValueError("mean_state of empty collection")
        psi = np.ascontiguousarray(states, dtype=np.complex128)
        if weights is None:
            acc = np.einsum("mi,mj->ij", psi, np.conj(psi)) / psi.shape[0]
        else:
            w = np.asarray(weights, dtype=np.float64)
            acc = np.einsum("m,mi,mj->ij", w / w.sum(), psi, np.conj(psi))
        return DensityMatrix(acc, validate=False)
    if isinstance(states, np.ndarray) and states.ndim == 3:
        mats = states
    else:
        mats = [_as_matrix(s) for s in states]
        if len(mats) == 0:
            raise ValueError("mean_state of empty collection")
        dims = {m.shape for m in mats}
        if len(dims) != 1:
            raise ValueError("mean_state inputs must share a dimension")
        mats = np.stack(mats)
    if mats.shape[0] == 0:
        raise ValueError("mean_state of empty collection")
    if weights is None:
        acc = mats.mean(axis=0)
    else:
        w = np.asarray(weights, dtype=np.float64)
        acc = np.einsum("m,mij->ij", w / w.sum(), mats)
    return DensityMatrix(acc, validate=False)
