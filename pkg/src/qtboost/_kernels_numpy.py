"""Pure-numpy batched state-evolution kernels (fallback backend).

Same call surface as `_kernels_numba`.  Statevectors are (M, 2^n) complex
arrays, density matrices (M, 2^n, 2^n); everything is modified in place.
"""

from __future__ import annotations

import numpy as np

from ._opcodes import CHANNEL, CNOT, RX, RY, RZ

_cnot_cache: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}


def _cnot_indices(n: int, control: int, target: int):
    key = (n, control, target)
    hit = _cnot_cache.get(key)
    if hit is None:
        idx = np.arange(1 << n)
        mask = ((idx >> (n - 1 - control)) & 1 == 1) & ((idx >> (n - 1 - target)) & 1 == 0)
        src = idx[mask]
        dst = src + (1 << (n - 1 - target))
        hit = (src, dst)
        _cnot_cache[key] = hit
    return hit


def _qubit_view(arr: np.ndarray, q: int, n: int) -> np.ndarray:
    # reshape a (..., 2^n) axis into (..., 2^q, 2, 2^(n-1-q)); axis -2 is qubit q
    lead = arr.shape[:-1]
    return arr.reshape(*lead, 1 << q, 2, 1 << (n - 1 - q))


def _sv_rot(psi: np.ndarray, kind: int, q: int, n: int, theta: float) -> None:
    v = _qubit_view(psi, q, n)
    half = 0.5 * theta
    if kind == RZ:
        v[..., 0, :] *= np.exp(-0.5j * theta)
        v[..., 1, :] *= np.exp(0.5j * theta)
        return
    c, s = np.cos(half), np.sin(half)
    a = v[..., 0, :].copy()
    b = v[..., 1, :].copy()
    if kind == RY:
        v[..., 0, :] = c * a - s * b
        v[..., 1, :] = s * a + c * b
    else:  # RX
        v[..., 0, :] = c * a - 1j * s * b
        v[..., 1, :] = -1j * s * a + c * b


def _sv_cnot(psi: np.ndarray, control: int, target: int, n: int) -> None:
    src, dst = _cnot_indices(n, control, target)
    tmp = psi[..., src].copy()
    psi[..., src] = psi[..., dst]
    psi[..., dst] = tmp


def sv_run(psi, kinds, qubits, args, thetas, n) -> None:
    """Run a statevector program over the batch in place."""
    for i in range(kinds.shape[0]):
        k = int(kinds[i])
        if k == CNOT:
            _sv_cnot(psi, int(qubits[i]), int(args[i]), n)
        else:
            _sv_rot(psi, k, int(qubits[i]), n, float(thetas[args[i]]))


def _pauli_im_dot(lam: np.ndarray, phi: np.ndarray, kind: int, q: int, n: int) -> float:
    # sum_m Im <lam_m| sigma_q |phi_m> for sigma in {Z, Y, X} matching the rotation kind
    if kind == RZ:
        sgn = 1.0 - 2.0 * ((np.arange(phi.shape[-1]) >> (n - 1 - q)) & 1)
        return float(np.imag(np.einsum("mb,mb->", np.conj(lam), phi * sgn)))
    lv = _qubit_view(lam, q, n)
    pv = _qubit_view(phi, q, n)
    l0, l1 = lv[..., 0, :], lv[..., 1, :]
    p0, p1 = pv[..., 0, :], pv[..., 1, :]
    if kind == RY:
        # Y|0> = i|1>, Y|1> = -i|0>
        acc = np.einsum("mab,mab->", np.conj(l0), -1j * p1) + np.einsum(
            "mab,mab->", np.conj(l1), 1j * p0
        )
    else:  # X
        acc = np.einsum("mab,mab->", np.conj(l0), p1) + np.einsum(
            "mab,mab->", np.conj(l1), p0
        )
    return float(np.imag(acc))


def sv_adjoint(phi, lam, kinds, qubits, args, thetas, n, n_params):
    """Reverse sweep over a statevector program.

    `phi` must hold the fully evolved batch and `lam` the cotangent batch
    (observable applied, per-sample coefficients already folded in).  Both
    are walked back to the circuit input in place.  Returns the gradient of
    sum_m Re<lam_m|phi_m-path> with respect to each parameter slot.
    """
    grad = np.zeros(n_params)
    for i in range(kinds.shape[0] - 1, -1, -1):
        k = int(kinds[i])
        q = int(qubits[i])
        if k == CNOT:
            _sv_cnot(phi, q, int(args[i]), n)
            _sv_cnot(lam, q, int(args[i]), n)
            continue
        grad[args[i]] += _pauli_im_dot(lam, phi, k, q, n)
        theta = float(thetas[args[i]])
        _sv_rot(phi, k, q, n, -theta)
        _sv_rot(lam, k, q, n, -theta)
    return grad


def _dm_view(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    m = rho.shape[0]
    a, b = 1 << q, 1 << (n - 1 - q)
    return rho.reshape(m, a, 2, b, a, 2, b)


def _dm_rot(rho: np.ndarray, kind: int, q: int, n: int, theta: float) -> None:
    v = _dm_view(rho, q, n)
    if kind == RZ:
        ph = np.exp(-1j * theta)
        v[:, :, 0, :, :, 1, :] *= ph
        v[:, :, 1, :, :, 0, :] *= np.conj(ph)
        return
    half = 0.5 * theta
    c, s = np.cos(half), np.sin(half)
    if kind == RY:
        g00, g01, g10, g11 = c, -s, s, c
    else:
        g00, g01, g10, g11 = c, -1j * s, -1j * s, c
    r0 = v[:, :, 0].copy()
    r1 = v[:, :, 1].copy()
    v[:, :, 0] = g00 * r0 + g01 * r1
    v[:, :, 1] = g10 * r0 + g11 * r1
    c0 = v[:, :, :, :, :, 0, :].copy()
    c1 = v[:, :, :, :, :, 1, :].copy()
    v[:, :, :, :, :, 0, :] = np.conj(g00) * c0 + np.conj(g01) * c1
    v[:, :, :, :, :, 1, :] = np.conj(g10) * c0 + np.conj(g11) * c1


def _dm_cnot(rho: np.ndarray, control: int, target: int, n: int) -> None:
    src, dst = _cnot_indices(n, control, target)
    tmp = rho[:, src, :].copy()
    rho[:, src, :] = rho[:, dst, :]
    rho[:, dst, :] = tmp
    tmp = rho[:, :, src].copy()
    rho[:, :, src] = rho[:, :, dst]
    rho[:, :, dst] = tmp


def _dm_channel(rho: np.ndarray, kraus: np.ndarray, q: int, n: int) -> None:
    # superoperator on the 2x2 qubit block: out_ab = sum_{k,c,d} E[k,a,c] B_cd conj(E[k,b,d])
    m4 = np.einsum("kac,kbd->abcd", kraus, np.conj(kraus))
    v = _dm_view(rho, q, n)
    blocks = [[v[:, :, 0, :, :, 0, :].copy(), v[:, :, 0, :, :, 1, :].copy()],
              [v[:, :, 1, :, :, 0, :].copy(), v[:, :, 1, :, :, 1, :].copy()]]
    for a in range(2):
        for b in range(2):
            acc = (
                m4[a, b, 0, 0] * blocks[0][0]
                + m4[a, b, 0, 1] * blocks[0][1]
                + m4[a, b, 1, 0] * blocks[1][0]
                + m4[a, b, 1, 1] * blocks[1][1]
            )
            v[:, :, a, :, :, b, :] = acc


def dm_run(rho, kinds, qubits, args, thetas, n, kraus) -> None:
    """Run a density-matrix program (rotations, CNOTs, channels) in place."""
    for i in range(kinds.shape[0]):
        k = int(kinds[i])
        q = int(qubits[i])
        if k == CNOT:
            _dm_cnot(rho, q, int(args[i]), n)
        elif k == CHANNEL:
            _dm_channel(rho, kraus, q, n)
        else:
            _dm_rot(rho, k, q, n, float(thetas[args[i]]))


def dm_rot_snapshots(rho, kinds, qubits, args, thetas, n, kraus, out, snap_before) -> None:
    """dm_run that also snapshots the batch at every rotation op.

    `out` has shape (#rotation ops in program, M, dim, dim).  With
    `snap_before` the copy is taken before the rotation is applied,
    otherwise after; non-rotation ops are never snapshotted.
    """
    r = 0
    for i in range(kinds.shape[0]):
        k = int(kinds[i])
        q = int(qubits[i])
        if k == CNOT:
            _dm_cnot(rho, q, int(args[i]), n)
        elif k == CHANNEL:
            _dm_channel(rho, kraus, q, n)
        else:
            if snap_before:
                out[r] = rho
                _dm_rot(rho, k, q, n, float(thetas[args[i]]))
            else:
                _dm_rot(rho, k, q, n, float(thetas[args[i]]))
                out[r] = rho
            r += 1
