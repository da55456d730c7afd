"""Layered hardware-efficient ansatz and its evaluation/differentiation.

One layer applies, per qubit, the rotation triple (Rz, Ry, Rz), then a ring
of CNOTs (control q → target (q+1) mod n; both directions appear for n=2,
none for n=1).  Parameters are laid out layer-major: parameter
``3·n·layer + 3·qubit + k`` is the k-th rotation of that qubit's triple.
Conventions: Ry(θ)=exp(−iθY/2), Rz(θ)=exp(−iθZ/2), Rx(θ)=exp(−iθX/2);
qubit 0 is the most significant bit of the basis index, so "the first
qubit" observable Z₁ reads the top bit.

Gradients come in two flavors:

* `param_shift_grad` — the textbook two-point shift rule, h(θ±π/2·e_j);
  exact for these rotation gates (their generators square to identity) and
  also with fixed Kraus channels interleaved.
* reverse-mode sweeps (`sv_adjoint_grad`, `dm_adjoint_grad`) — algebraically
  identical derivatives computed in one backward pass over the circuit;
  these power the training loop where per-parameter shifting would be
  prohibitively slow.  Tests pin the two routes against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend
from ._opcodes import CHANNEL, CNOT, RX, RY, RZ
from .channels import NoiseSpec, adjoint_kraus, kraus_ops
from .qcore import DensityMatrix, StateVector

_PAULI = {
    RX: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    RY: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    RZ: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_NO_KRAUS = np.eye(2, dtype=np.complex128)[None, :, :]


@dataclass(frozen=True)
class Program:
    """Flattened op list plus per-layer slice bounds."""

    kinds: np.ndarray
    qubits: np.ndarray
    args: np.ndarray
    n_qubits: int
    layer_bounds: tuple[tuple[int, int], ...]

    @property
    def n_ops(self) -> int:
        return self.kinds.shape[0]


@lru_cache(maxsize=None)
def _build_program(n: int, layers: int, noisy: bool) -> Program:
    kinds: list[int] = []
    qubits: list[int] = []
    args: list[int] = []
    bounds = []
    for layer in range(layers):
        start = len(kinds)
        base = 3 * n * layer
        for q in range(n):
            for k, gate in enumerate((RZ, RY, RZ)):
                kinds.append(gate)
                qubits.append(q)
                args.append(base + 3 * q + k)
        if n >= 2:
            for q in range(n):
                kinds.append(CNOT)
                qubits.append(q)
                args.append((q + 1) % n)
        if noisy:
            for q in range(n):
                kinds.append(CHANNEL)
                qubits.append(q)
                args.append(-1)
        bounds.append((start, len(kinds)))
    return Program(
        kinds=np.asarray(kinds, dtype=np.int32),
        qubits=np.asarray(qubits, dtype=np.int32),
        args=np.asarray(args, dtype=np.int32),
        n_qubits=n,
        layer_bounds=tuple(bounds),
    )


@dataclass(frozen=True)
class Ansatz:
    """Circuit shape: (n_qubits, layers); the gate plan is fully determined."""

    n_qubits: int
    layers: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("ansatz needs at least one qubit")
        if self.layers < 0:
            raise ValueError("layer count must be non-negative")

    @property
    def n_params(self) -> int:
        return 3 * self.n_qubits * self.layers

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def program(self, noisy: bool = False) -> Program:
        return _build_program(self.n_qubits, self.layers, noisy)


def check_params(ansatz: Ansatz, theta) -> np.ndarray:
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.shape != (ansatz.n_params,):
        raise ValueError(
            f"parameter vector has shape {theta.shape}, expected ({ansatz.n_params},)"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector has non-finite entries")
    return theta


@dataclass(frozen=True)
class Observable:
    """Diagonal observable: Z on the first qubit, a basis projector |k⟩⟨k|,
    or the identity."""

    kind: str  # 'z1' | 'projector' | 'identity'
    n_qubits: int
    index: int = 0

    def __post_init__(self):
        if self.kind not in ("z1", "projector", "identity"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == "projector" and not (0 <= self.index < (1 << self.n_qubits)):
            raise ValueError(f"projector index {self.index} out of range")

    def diag(self) -> np.ndarray:
        return _observable_diag(self.kind, self.n_qubits, self.index)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag().astype(np.complex128))


@lru_cache(maxsize=None)
def _observable_diag(kind: str, n: int, index: int) -> np.ndarray:
    dim = 1 << n
    if kind == "z1":
        d = 1.0 - 2.0 * ((np.arange(dim) >> (n - 1)) & 1)
    elif kind == "projector":
        d = np.zeros(dim)
        d[index] = 1.0
    else:
        d = np.ones(dim)
    d.setflags(write=False)
    return d


@lru_cache(maxsize=None)
def _pauli_dense(kind: int, qubit: int, n: int) -> np.ndarray:
    mat = _PAULI[kind]
    full = np.kron(np.kron(np.eye(1 << qubit), mat), np.eye(1 << (n - 1 - qubit)))
    full = np.ascontiguousarray(full, dtype=np.complex128)
    full.setflags(write=False)
    return full


# ---------------------------------------------------------------- forward


def sv_forward(ansatz: Ansatz, theta, states: np.ndarray) -> np.ndarray:
    """Evolve a (M, 2^n) batch of statevectors; returns a new array."""
    theta = check_params(ansatz, theta)
    work = np.array(states, dtype=np.complex128, copy=True, order="C")
    prog = ansatz.program(noisy=False)
    backend.kernels().sv_run(work, prog.kinds, prog.qubits, prog.args, theta,
                             ansatz.n_qubits)
    return work


def apply_circuit(state: StateVector, ansatz: Ansatz, theta) -> StateVector:
    """Apply the ansatz to a pure state.

    Raises:
        ValueError: parameter-length mismatch or qubit-count mismatch.
    """
    if state.n_qubits != ansatz.n_qubits:
        raise ValueError(
            f"state has {state.n_qubits} qubits, ansatz {ansatz.n_qubits}"
        )
    out = sv_forward(ansatz, theta, state.amplitudes[None, :])[0]
    return StateVector(out, validate=False)


def dm_forward(ansatz: Ansatz, theta, rhos: np.ndarray,
               noise: NoiseSpec | None) -> np.ndarray:
    """Evolve a (M, d, d) density-matrix batch; returns a new array."""
    theta = check_params(ansatz, theta)
    noisy = noise is not None and noise.kind != "none"
    prog = ansatz.program(noisy=noisy)
    kraus = kraus_ops(noise) if noisy else _NO_KRAUS
    work = np.array(rhos, dtype=np.complex128, copy=True, order="C")
    backend.kernels().dm_run(work, prog.kinds, prog.qubits, prog.args, theta,
                             ansatz.n_qubits, kraus)
    return work


def apply_circuit_dm(rho: DensityMatrix, ansatz: Ansatz, theta,
                     noise: NoiseSpec | None = None) -> DensityMatrix:
    """Apply the ansatz to a density matrix, optionally inserting the noise
    channel on every qubit after each layer's CNOT block."""
    if rho.n_qubits != ansatz.n_qubits:
        raise ValueError(f"state has {rho.n_qubits} qubits, ansatz {ansatz.n_qubits}")
    out = dm_forward(ansatz, theta, rho.matrix[None, :, :], noise)[0]
    return DensityMatrix(out, validate=False)


def expectation(state, observable: Observable) -> float:
    """⟨O⟩ for a StateVector or DensityMatrix under a diagonal observable."""
    diag = observable.diag()
    if isinstance(state, StateVector):
        amp = state.amplitudes
        if amp.shape[0] != diag.shape[0]:
            raise ValueError("dimension mismatch between state and observable")
        return float(np.real(np.sum(diag * (np.abs(amp) ** 2))))
    if isinstance(state, DensityMatrix):
        mat = state.matrix
    else:
        mat = np.asarray(state)
        if mat.ndim == 1:
            return float(np.real(np.sum(diag * (np.abs(mat) ** 2))))
    if mat.shape[0] != diag.shape[0]:
        raise ValueError("dimension mismatch between state and observable")
    return float(np.real(np.einsum("ii,i->", mat, diag)))


def sv_expectations(phi: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Per-sample ⟨diag⟩ on a statevector batch."""
    return (np.abs(phi) ** 2) @ diag


def dm_expectations(rhos: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Per-sample ⟨diag⟩ on a density-matrix batch."""
    return np.real(np.einsum("mii,i->m", rhos, diag))


def forward_margins(ansatz: Ansatz, theta, states: np.ndarray,
                    observable: Observable,
                    noise: NoiseSpec | None = None) -> np.ndarray:
    """Expectation of ``observable`` after the circuit, per sample.

    `states` is a (M, 2^n) statevector batch; with noise the batch is
    promoted to density matrices and run through the channel-interleaved
    program.
    """
    diag = observable.diag()
    if noise is None or noise.kind == "none":
        return sv_expectations(sv_forward(ansatz, theta, states), diag)
    rhos = np.einsum("mi,mj->mij", states, np.conj(states))
    return dm_expectations(dm_forward(ansatz, theta, rhos, noise), diag)


# ------------------------------------------------------- shift-rule gradient


def param_shift_grad(state, ansatz: Ansatz, theta, observable: Observable,
                     noise: NoiseSpec | None = None) -> np.ndarray:
    """Two-point parameter-shift gradient of the expectation value.

    Component j is ½·[h(θ + π/2·e_j) − h(θ − π/2·e_j)].  Exact for the
    rotation gates used here; remains exact when fixed channels are
    interleaved (the shifted parameter still generates a plain rotation).
    """
    theta = check_params(ansatz, theta)
    diag = observable.diag()
    noisy = noise is not None and noise.kind != "none"

    if isinstance(state, StateVector):
        vec = state.amplitudes
    elif isinstance(state, DensityMatrix):
        vec = None
    else:
        arr = np.asarray(state)
        vec = arr if arr.ndim == 1 else None

    if vec is not None and not noisy:
        batch = vec[None, :]

        def h(params):
            return float(sv_expectations(sv_forward(ansatz, params, batch), diag)[0])
    else:
        if vec is not None:
            rho = np.outer(vec, np.conj(vec))
        else:
            rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)
        batch = rho[None, :, :]

        def h(params):
            return float(dm_expectations(dm_forward(ansatz, params, batch, noise), diag)[0])

    grad = np.zeros(ansatz.n_params)
    shift = 0.5 * np.pi
    for j in range(ansatz.n_params):
        plus = theta.copy()
        plus[j] += shift
        minus = theta.copy()
        minus[j] -= shift
        grad[j] = 0.5 * (h(plus) - h(minus))
    return grad


# ----------------------------------------------------- reverse-mode gradients


def sv_adjoint_grad(ansatz: Ansatz, theta, phi: np.ndarray,
                    lam: np.ndarray) -> np.ndarray:
    """Backward sweep over the noiseless program.

    `phi` is the evolved batch U(θ)ψ and `lam` the cotangent batch (observable
    and any per-sample loss coefficients already applied to φ).  Both arrays
    are consumed (walked back in place).  Returns d/dθ of Σ_m Re⟨λ_m|φ_m⟩
    taken through the circuit — for λ_m = c_m·O·φ_m this is
    Σ_m c_m · ∂⟨O⟩_m/∂θ.
    """
    theta = check_params(ansatz, theta)
    prog = ansatz.program(noisy=False)
    return backend.kernels().sv_adjoint(phi, lam, prog.kinds, prog.qubits,
                                        prog.args, theta, ansatz.n_qubits,
                                        ansatz.n_params)


def dm_forward_layers(ansatz: Ansatz, theta, rhos: np.ndarray,
                      noise: NoiseSpec | None):
    """Forward density-matrix pass that checkpoints the batch at each layer
    entry.  Returns (final batch, list of checkpoints)."""
    theta = check_params(ansatz, theta)
    noisy = noise is not None and noise.kind != "none"
    prog = ansatz.program(noisy=noisy)
    kraus = kraus_ops(noise) if noisy else _NO_KRAUS
    kern = backend.kernels()
    work = np.array(rhos, dtype=np.complex128, copy=True, order="C")
    checkpoints = []
    for start, stop in prog.layer_bounds:
        checkpoints.append(work.copy())
        kern.dm_run(work, prog.kinds[start:stop], prog.qubits[start:stop],
                    prog.args[start:stop], theta, ansatz.n_qubits, kraus)
    return work, checkpoints


def dm_adjoint_grad(ansatz: Ansatz, theta, checkpoints, noise: NoiseSpec | None,
                    obs_mats: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Gradient of Σ_m Σ_k coeffs[m,k]·Tr[O_k · circuit(ρ_m)] in one backward
    pass over the layers.

    The observables are pulled backward through each layer in the Heisenberg
    picture (adjoint channel direction), the per-layer states are recomputed
    from the forward checkpoints, and each rotation's derivative is read off
    as a commutator trace.  Cost ≈ two forward passes, independent of the
    parameter count.
    """
    theta = check_params(ansatz, theta)
    noisy = noise is not None and noise.kind != "none"
    prog = ansatz.program(noisy=noisy)
    kraus = kraus_ops(noise) if noisy else _NO_KRAUS
    kradj = adjoint_kraus(kraus)
    kern = backend.kernels()
    n = ansatz.n_qubits
    dim = 1 << n
    n_rot = 3 * n
    n_obs = obs_mats.shape[0]
    batch = coeffs.shape[0]

    obs = np.array(obs_mats, dtype=np.complex128, copy=True, order="C")
    grad = np.zeros(ansatz.n_params)
    obs_snaps = np.empty((n_rot, n_obs, dim, dim), dtype=np.complex128)
    rho_snaps = np.empty((n_rot, batch, dim, dim), dtype=np.complex128)

    for layer in range(len(prog.layer_bounds) - 1, -1, -1):
        start, stop = prog.layer_bounds[layer]
        kinds = prog.kinds[start:stop]
        qubits = prog.qubits[start:stop]
        args = prog.args[start:stop]
        # Heisenberg sweep: reversed ops, negated angles, adjoint Kraus.
        # Snapshots are taken before each (reversed) rotation, i.e. exactly
        # the observable seen by that rotation's output state.
        rev = slice(None, None, -1)
        kern.dm_rot_snapshots(obs, np.ascontiguousarray(kinds[rev]),
                              np.ascontiguousarray(qubits[rev]),
                              np.ascontiguousarray(args[rev]),
                              -theta, n, kradj, obs_snaps, True)
        work = checkpoints[layer].copy()
        kern.dm_rot_snapshots(work, kinds, qubits, args, theta, n, kraus,
                              rho_snaps, False)
        for r in range(n_rot):
            o_r = obs_snaps[n_rot - 1 - r]
            sigma = _pauli_dense(int(kinds[r]), int(qubits[r]), n)
            slot = int(args[r])
            for k in range(n_obs):
                comm = -0.5j * (o_r[k] @ sigma - sigma @ o_r[k])
                traces = np.real(np.einsum("ab,mba->m", comm, rho_snaps[r]))
                grad[slot] += coeffs[:, k] @ traces
    return grad
