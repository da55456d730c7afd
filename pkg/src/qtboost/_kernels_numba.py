"""Numba-accelerated batched state-evolution kernels (hot path).

Same call surface as `_kernels_numpy`; see that module for shape
conventions.  Everything here is plain loops over batch and basis indices
so numba can compile them to tight machine code; first use pays a one-off
compile cost that is cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._opcodes import CHANNEL, CNOT, RY, RZ


@njit(cache=True)
def _sv_rz(psi, q, n, theta):
    dim = psi.shape[1]
    shift = n - 1 - q
    p0 = np.exp(-0.5j * theta)
    p1 = np.exp(0.5j * theta)
    for m in range(psi.shape[0]):
        for i in range(dim):
            if (i >> shift) & 1 == 0:
                psi[m, i] *= p0
            else:
                psi[m, i] *= p1


@njit(cache=True)
def _sv_mix(psi, q, n, g00, g01, g10, g11):
    dim = psi.shape[1]
    stride = 1 << (n - 1 - q)
    for m in range(psi.shape[0]):
        for hi in range(0, dim, 2 * stride):
            for lo in range(stride):
                i0 = hi + lo
                i1 = i0 + stride
                a = psi[m, i0]
                b = psi[m, i1]
                psi[m, i0] = g00 * a + g01 * b
                psi[m, i1] = g10 * a + g11 * b


@njit(cache=True)
def _sv_cnot(psi, control, target, n):
    dim = psi.shape[1]
    cshift = n - 1 - control
    tshift = n - 1 - target
    tstride = 1 << tshift
    for m in range(psi.shape[0]):
        for i in range(dim):
            if (i >> cshift) & 1 == 1 and (i >> tshift) & 1 == 0:
                j = i + tstride
                tmp = psi[m, i]
                psi[m, i] = psi[m, j]
                psi[m, j] = tmp


@njit(cache=True)
def _sv_rot(psi, kind, q, n, theta):
    if kind == RZ:
        _sv_rz(psi, q, n, theta)
    else:
        c = np.cos(0.5 * theta)
        s = np.sin(0.5 * theta)
        if kind == RY:
            _sv_mix(psi, q, n, c + 0j, -s + 0j, s + 0j, c + 0j)
        else:
            _sv_mix(psi, q, n, c + 0j, -1j * s, -1j * s, c + 0j)


@njit(cache=True)
def sv_run(psi, kinds, qubits, args, thetas, n):
    for i in range(kinds.shape[0]):
        k = kinds[i]
        if k == CNOT:
            _sv_cnot(psi, qubits[i], args[i], n)
        else:
            _sv_rot(psi, k, qubits[i], n, thetas[args[i]])


@njit(cache=True)
def _pauli_im_dot(lam, phi, kind, q, n):
    dim = phi.shape[1]
    shift = n - 1 - q
    stride = 1 << shift
    acc = 0.0 + 0.0j
    if kind == RZ:
        for m in range(phi.shape[0]):
            for i in range(dim):
                if (i >> shift) & 1 == 0:
                    acc += np.conj(lam[m, i]) * phi[m, i]
                else:
                    acc -= np.conj(lam[m, i]) * phi[m, i]
    elif kind == RY:
        # Y|0> = i|1>, Y|1> = -i|0>
        for m in range(phi.shape[0]):
            for hi in range(0, dim, 2 * stride):
                for lo in range(stride):
                    i0 = hi + lo
                    i1 = i0 + stride
                    acc += np.conj(lam[m, i0]) * (-1j * phi[m, i1])
                    acc += np.conj(lam[m, i1]) * (1j * phi[m, i0])
    else:
        for m in range(phi.shape[0]):
            for hi in range(0, dim, 2 * stride):
                for lo in range(stride):
                    i0 = hi + lo
                    i1 = i0 + stride
                    acc += np.conj(lam[m, i0]) * phi[m, i1]
                    acc += np.conj(lam[m, i1]) * phi[m, i0]
    return acc.imag


@njit(cache=True)
def sv_adjoint(phi, lam, kinds, qubits, args, thetas, n, n_params):
    grad = np.zeros(n_params)
    for i in range(kinds.shape[0] - 1, -1, -1):
        k = kinds[i]
        q = qubits[i]
        if k == CNOT:
            _sv_cnot(phi, q, args[i], n)
            _sv_cnot(lam, q, args[i], n)
            continue
        grad[args[i]] += _pauli_im_dot(lam, phi, k, q, n)
        _sv_rot(phi, k, q, n, -thetas[args[i]])
        _sv_rot(lam, k, q, n, -thetas[args[i]])
    return grad


@njit(cache=True)
def _dm_rz(rho, q, n, theta):
    dim = rho.shape[1]
    shift = n - 1 - q
    ph = np.exp(-1j * theta)
    phc = np.conj(ph)
    for m in range(rho.shape[0]):
        for i in range(dim):
            bi = (i >> shift) & 1
            for j in range(dim):
                bj = (j >> shift) & 1
                if bi == 0 and bj == 1:
                    rho[m, i, j] *= ph
                elif bi == 1 and bj == 0:
                    rho[m, i, j] *= phc


@njit(cache=True)
def _dm_mix(rho, q, n, g00, g01, g10, g11):
    dim = rho.shape[1]
    stride = 1 << (n - 1 - q)
    h00 = np.conj(g00)
    h01 = np.conj(g01)
    h10 = np.conj(g10)
    h11 = np.conj(g11)
    for m in range(rho.shape[0]):
        # rows: rho <- G rho
        for hi in range(0, dim, 2 * stride):
            for lo in range(stride):
                i0 = hi + lo
                i1 = i0 + stride
                for j in range(dim):
                    a = rho[m, i0, j]
                    b = rho[m, i1, j]
                    rho[m, i0, j] = g00 * a + g01 * b
                    rho[m, i1, j] = g10 * a + g11 * b
        # cols: rho <- rho G^dagger
        for hi in range(0, dim, 2 * stride):
            for lo in range(stride):
                j0 = hi + lo
                j1 = j0 + stride
                for i in range(dim):
                    a = rho[m, i, j0]
                    b = rho[m, i, j1]
                    rho[m, i, j0] = h00 * a + h01 * b
                    rho[m, i, j1] = h10 * a + h11 * b


@njit(cache=True)
def _dm_rot(rho, kind, q, n, theta):
    if kind == RZ:
        _dm_rz(rho, q, n, theta)
    else:
        c = np.cos(0.5 * theta)
        s = np.sin(0.5 * theta)
        if kind == RY:
            _dm_mix(rho, q, n, c + 0j, -s + 0j, s + 0j, c + 0j)
        else:
            _dm_mix(rho, q, n, c + 0j, -1j * s, -1j * s, c + 0j)


@njit(cache=True)
def _dm_cnot(rho, control, target, n):
    dim = rho.shape[1]
    cshift = n - 1 - control
    tshift = n - 1 - target
    tstride = 1 << tshift
    for m in range(rho.shape[0]):
        for i in range(dim):
            if (i >> cshift) & 1 == 1 and (i >> tshift) & 1 == 0:
                i2 = i + tstride
                for j in range(dim):
                    tmp = rho[m, i, j]
                    rho[m, i, j] = rho[m, i2, j]
                    rho[m, i2, j] = tmp
        for j in range(dim):
            if (j >> cshift) & 1 == 1 and (j >> tshift) & 1 == 0:
                j2 = j + tstride
                for i in range(dim):
                    tmp = rho[m, i, j]
                    rho[m, i, j] = rho[m, i, j2]
                    rho[m, i, j2] = tmp


@njit(cache=True)
def _dm_channel(rho, kraus, q, n):
    dim = rho.shape[1]
    stride = 1 << (n - 1 - q)
    nk = kraus.shape[0]
    m4 = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for k in range(nk):
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for d in range(2):
                        m4[a, b, c, d] += kraus[k, a, c] * np.conj(kraus[k, b, d])
    for m in range(rho.shape[0]):
        for hi in range(0, dim, 2 * stride):
            for lo in range(stride):
                i0 = hi + lo
                i1 = i0 + stride
                for hj in range(0, dim, 2 * stride):
                    for lj in range(stride):
                        j0 = hj + lj
                        j1 = j0 + stride
                        b00 = rho[m, i0, j0]
                        b01 = rho[m, i0, j1]
                        b10 = rho[m, i1, j0]
                        b11 = rho[m, i1, j1]
                        rho[m, i0, j0] = (
                            m4[0, 0, 0, 0] * b00 + m4[0, 0, 0, 1] * b01
                            + m4[0, 0, 1, 0] * b10 + m4[0, 0, 1, 1] * b11
                        )
                        rho[m, i0, j1] = (
                            m4[0, 1, 0, 0] * b00 + m4[0, 1, 0, 1] * b01
                            + m4[0, 1, 1, 0] * b10 + m4[0, 1, 1, 1] * b11
                        )
                        rho[m, i1, j0] = (
                            m4[1, 0, 0, 0] * b00 + m4[1, 0, 0, 1] * b01
                            + m4[1, 0, 1, 0] * b10 + m4[1, 0, 1, 1] * b11
                        )
                        rho[m, i1, j1] = (
                            m4[1, 1, 0, 0] * b00 + m4[1, 1, 0, 1] * b01
                            + m4[1, 1, 1, 0] * b10 + m4[1, 1, 1, 1] * b11
                        )


@njit(cache=True)
def dm_run(rho, kinds, qubits, args, thetas, n, kraus):
    for i in range(kinds.shape[0]):
        k = kinds[i]
        q = qubits[i]
        if k == CNOT:
            _dm_cnot(rho, q, args[i], n)
        elif k == CHANNEL:
            _dm_channel(rho, kraus, q, n)
        else:
            _dm_rot(rho, k, q, n, thetas[args[i]])


@njit(cache=True)
def dm_rot_snapshots(rho, kinds, qubits, args, thetas, n, kraus, out, snap_before):
    r = 0
    for i in range(kinds.shape[0]):
        k = kinds[i]
        q = qubits[i]
        if k == CNOT:
            _dm_cnot(rho, q, args[i], n)
        elif k == CHANNEL:
            _dm_channel(rho, kraus, q, n)
        else:
            if snap_before:
                out[r] = rho
                _dm_rot(rho, k, q, n, thetas[args[i]])
            else:
                _dm_rot(rho, k, q, n, thetas[args[i]])
                out[r] = rho
            r += 1
