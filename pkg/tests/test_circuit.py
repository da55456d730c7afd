"""Layered ansatz: program layout, forward evolution, and gradients.

Every evolution path is pinned against an explicit dense-matrix oracle
built from Kronecker products (qubit 0 = most significant bit), and the
three gradient routes (parameter shift, finite differences, reverse-mode
adjoint sweeps) are pinned against each other.
"""

import numpy as np
import pytest

from qtboost import backend
from qtboost._opcodes import CHANNEL, CNOT, RY, RZ
from qtboost.channels import NoiseSpec, kraus_ops
from qtboost.circuit import (Ansatz, Observable, apply_circuit,
                             apply_circuit_dm, check_params, dm_adjoint_grad,
                             dm_expectations, dm_forward, dm_forward_layers,
                             expectation, forward_margins, param_shift_grad,
                             sv_adjoint_grad, sv_expectations, sv_forward)
from qtboost.qcore import DensityMatrix, StateVector


# ------------------------------------------------------------- dense oracles


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def embed(u, qubit, n):
    return np.kron(np.kron(np.eye(1 << qubit), u), np.eye(1 << (n - 1 - qubit)))


def cnot_dense(control, target, n):
    dim = 1 << n
    u = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        if (idx >> (n - 1 - control)) & 1:
            u[idx ^ (1 << (n - 1 - target)), idx] = 1.0
        else:
            u[idx, idx] = 1.0
    return u


def layer_unitary(n, layer, theta):
    """Gate block of one layer: rotation triples then the CNOT ring."""
    u = np.eye(1 << n, dtype=complex)
    base = 3 * n * layer
    for q in range(n):
        a, b, c = theta[base + 3 * q: base + 3 * q + 3]
        u = embed(rz(c) @ ry(b) @ rz(a), q, n) @ u
    if n >= 2:
        for q in range(n):
            u = cnot_dense(q, (q + 1) % n, n) @ u
    return u


def dense_unitary(ansatz, theta):
    u = np.eye(ansatz.dim, dtype=complex)
    for layer in range(ansatz.layers):
        u = layer_unitary(ansatz.n_qubits, layer, theta) @ u
    return u


def dense_channel(rho, kraus, qubit, n):
    out = np.zeros_like(rho)
    for e in kraus:
        op = embed(e, qubit, n)
        out += op @ rho @ op.conj().T
    return out


def dense_noisy_evolution(ansatz, theta, rho, noise):
    """Per layer: gate conjugation, then the channel on every qubit."""
    n = ansatz.n_qubits
    kraus = kraus_ops(noise)
    for layer in range(ansatz.layers):
        u = layer_unitary(n, layer, theta)
        rho = u @ rho @ u.conj().T
        for q in range(n):
            rho = dense_channel(rho, kraus, q, n)
    return rho


def random_states(n, m, seed):
    gen = np.random.default_rng(seed)
    psi = gen.standard_normal((m, 1 << n)) + 1j * gen.standard_normal((m, 1 << n))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


# ------------------------------------------------------------ program layout


def test_program_op_counts_and_layer_bounds():
    prog = Ansatz(3, 2).program(noisy=False)
    # per layer: 9 rotations + 3 ring CNOTs
    assert prog.n_ops == 24
    assert prog.layer_bounds == ((0, 12), (12, 24))
    noisy = Ansatz(3, 2).program(noisy=True)
    assert noisy.n_ops == 30
    assert list(noisy.kinds).count(CHANNEL) == 6


def test_program_single_qubit_has_no_cnot():
    prog = Ansatz(1, 3).program()
    assert CNOT not in set(prog.kinds.tolist())
    assert prog.n_ops == 9


def test_program_parameter_slots_layer_major():
    n, layers = 3, 2
    prog = Ansatz(n, layers).program()
    rot = prog.kinds != CNOT
    slots = prog.args[rot]
    assert slots.tolist() == list(range(3 * n * layers))
    # each qubit's triple is (Rz, Ry, Rz)
    kinds = prog.kinds[rot].reshape(-1, 3)
    assert np.all(kinds == [RZ, RY, RZ])


def test_ansatz_validation_and_counts():
    a = Ansatz(4, 20)
    assert a.n_params == 240
    assert a.dim == 16
    assert Ansatz(2, 0).n_params == 0
    with pytest.raises(ValueError):
        Ansatz(0, 3)
    with pytest.raises(ValueError):
        Ansatz(2, -1)


def test_check_params_shape_and_finiteness():
    a = Ansatz(2, 1)
    check_params(a, np.zeros(6))
    with pytest.raises(ValueError):
        check_params(a, np.zeros(5))
    with pytest.raises(ValueError):
        check_params(a, [np.nan] * 6)


# ---------------------------------------------------------------- evolution


def test_single_qubit_closed_form():
    a, b, c = 0.37, -1.2, 2.5
    got = sv_forward(Ansatz(1, 1), [a, b, c], np.array([[1.0, 0.0]]))[0]
    want = rz(c) @ ry(b) @ rz(a) @ np.array([1.0, 0.0])
    np.testing.assert_allclose(got, want, atol=1e-14)


@pytest.mark.parametrize("n,layers", [(2, 1), (3, 2), (4, 3)])
def test_sv_forward_matches_dense_unitary(n, layers):
    ansatz = Ansatz(n, layers)
    theta = np.random.default_rng(n * 10 + layers).uniform(-np.pi, np.pi,
                                                           ansatz.n_params)
    psi = random_states(n, 5, seed=3)
    got = sv_forward(ansatz, theta, psi)
    want = psi @ dense_unitary(ansatz, theta).T
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_forward_does_not_mutate_input():
    psi = random_states(2, 3, seed=9)
    before = psi.copy()
    sv_forward(Ansatz(2, 2), np.linspace(0, 1, 12), psi)
    np.testing.assert_array_equal(psi, before)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    ref = rhos.copy()
    dm_forward(Ansatz(2, 2), np.linspace(0, 1, 12), rhos, None)
    np.testing.assert_array_equal(rhos, ref)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_circuit_unitarity(n):
    ansatz = Ansatz(n, 3)
    theta = np.random.default_rng(n).uniform(-np.pi, np.pi, ansatz.n_params)
    basis = np.eye(ansatz.dim, dtype=complex)
    cols = sv_forward(ansatz, theta, basis)  # row i = U e_i
    u = cols.T
    np.testing.assert_allclose(u.conj().T @ u, np.eye(ansatz.dim), atol=1e-9)


def test_dm_forward_consistent_with_sv(seed=11):
    ansatz = Ansatz(3, 2)
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(3, 4, seed)
    phi = sv_forward(ansatz, theta, psi)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    out = dm_forward(ansatz, theta, rhos, None)
    want = np.einsum("mi,mj->mij", phi, phi.conj())
    np.testing.assert_allclose(out, want, atol=1e-12)


@pytest.mark.parametrize("noise", [NoiseSpec("depolarizing", 0.1),
                                   NoiseSpec("reset", 0.05),
                                   NoiseSpec("gad", 0.6, 0.3)])
def test_noise_channels_placed_after_each_cnot_block(noise):
    ansatz = Ansatz(2, 2)
    theta = np.random.default_rng(21).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 1, seed=5)[0]
    rho = np.outer(psi, psi.conj())
    got = dm_forward(ansatz, theta, rho[None], noise)[0]
    want = dense_noisy_evolution(ansatz, theta, rho, noise)
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert abs(np.trace(got).real - 1.0) < 1e-12


def test_apply_circuit_wrappers_and_mismatch():
    ansatz = Ansatz(2, 1)
    theta = np.linspace(-1, 1, ansatz.n_params)
    sv = StateVector(np.array([1, 0, 0, 0], dtype=complex))
    out = apply_circuit(sv, ansatz, theta)
    assert isinstance(out, StateVector)
    dm = apply_circuit_dm(sv.density_matrix(), ansatz, theta,
                          NoiseSpec("depolarizing", 0.2))
    assert isinstance(dm, DensityMatrix)
    np.testing.assert_allclose(np.trace(dm.matrix), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        apply_circuit(StateVector(np.array([1, 0], dtype=complex)), ansatz, theta)


# --------------------------------------------------------------- observables


def test_z1_reads_most_significant_bit():
    obs = Observable("z1", 3)
    np.testing.assert_array_equal(obs.diag(), [1, 1, 1, 1, -1, -1, -1, -1])
    e0 = np.zeros(8)
    e0[0] = 1.0
    e4 = np.zeros(8)
    e4[4] = 1.0
    assert expectation(StateVector(e0.astype(complex)), obs) == 1.0
    assert expectation(StateVector(e4.astype(complex)), obs) == -1.0


def test_projector_and_identity_observables():
    n = 2
    psi = random_states(n, 1, seed=2)[0]
    sv = StateVector(psi)
    total = sum(expectation(sv, Observable("projector", n, index=k))
                for k in range(4))
    assert abs(total - 1.0) < 1e-12
    assert abs(expectation(sv, Observable("identity", n)) - 1.0) < 1e-12
    obs = Observable("projector", n, index=3)
    np.testing.assert_array_equal(obs.matrix(), np.diag([0, 0, 0, 1.0]))
    with pytest.raises(ValueError):
        Observable("x1", n)
    with pytest.raises(ValueError):
        Observable("projector", n, index=4)


def test_expectation_accepts_all_state_forms():
    psi = random_states(2, 1, seed=7)[0]
    obs = Observable("z1", 2)
    rho = np.outer(psi, psi.conj())
    vals = [expectation(StateVector(psi), obs),
            expectation(DensityMatrix(rho), obs),
            expectation(psi, obs),
            expectation(rho, obs)]
    np.testing.assert_allclose(vals, vals[0], atol=1e-13)
    with pytest.raises(ValueError):
        expectation(StateVector(np.array([1, 0], dtype=complex)), obs)


def test_batch_expectation_helpers():
    psi = random_states(2, 6, seed=13)
    diag = Observable("z1", 2).diag()
    per = sv_expectations(psi, diag)
    assert per.shape == (6,)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    np.testing.assert_allclose(dm_expectations(rhos, diag), per, atol=1e-13)


def test_forward_margins_noiseless_vs_density_route():
    ansatz = Ansatz(3, 2)
    theta = np.random.default_rng(31).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(3, 5, seed=17)
    obs = Observable("z1", 3)
    pure = forward_margins(ansatz, theta, psi, obs)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    dense = dm_expectations(dm_forward(ansatz, theta, rhos, None), obs.diag())
    np.testing.assert_allclose(pure, dense, atol=1e-12)


# ----------------------------------------------------------------- gradients


def fd_grad(f, theta, h=1e-6):
    g = np.zeros_like(theta)
    for j in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (f(up) - f(dn)) / (2 * h)
    return g


def test_param_shift_matches_finite_differences_pure():
    ansatz = Ansatz(2, 2)
    theta = np.random.default_rng(41).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 1, seed=19)[0]
    obs = Observable("z1", 2)
    shift = param_shift_grad(StateVector(psi), ansatz, theta, obs)
    fd = fd_grad(lambda t: forward_margins(ansatz, t, psi[None], obs)[0], theta)
    np.testing.assert_allclose(shift, fd, atol=1e-8)


def test_param_shift_matches_finite_differences_noisy():
    ansatz = Ansatz(2, 2)
    theta = np.random.default_rng(43).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 1, seed=23)[0]
    obs = Observable("z1", 2)
    noise = NoiseSpec("gad", 0.4, 0.25)
    shift = param_shift_grad(psi, ansatz, theta, obs, noise=noise)
    fd = fd_grad(
        lambda t: forward_margins(ansatz, t, psi[None], obs, noise=noise)[0],
        theta)
    np.testing.assert_allclose(shift, fd, atol=1e-8)


def test_param_shift_accepts_density_matrix_input():
    ansatz = Ansatz(2, 1)
    theta = np.random.default_rng(47).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 1, seed=29)[0]
    obs = Observable("projector", 2, index=1)
    g_pure = param_shift_grad(StateVector(psi), ansatz, theta, obs)
    g_dm = param_shift_grad(DensityMatrix(np.outer(psi, psi.conj())),
                            ansatz, theta, obs)
    np.testing.assert_allclose(g_dm, g_pure, atol=1e-12)


def test_sv_adjoint_grad_matches_shift_rule():
    """Reverse-mode cotangent sweep with λ = c·O·φ reproduces c·∂⟨O⟩/∂θ."""
    ansatz = Ansatz(3, 2)
    theta = np.random.default_rng(53).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(3, 3, seed=31)
    obs = Observable("z1", 3)
    coeffs = np.array([1.0, -0.5, 2.25])

    phi = sv_forward(ansatz, theta, psi)
    lam = coeffs[:, None] * (obs.diag()[None, :] * phi)
    got = sv_adjoint_grad(ansatz, theta, phi.copy(), lam.copy())

    want = np.zeros(ansatz.n_params)
    for c, p in zip(coeffs, psi):
        want += c * param_shift_grad(p, ansatz, theta, obs)
    np.testing.assert_allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("noise", [None, NoiseSpec("depolarizing", 0.15)])
def test_dm_adjoint_grad_matches_shift_rule(noise):
    ansatz = Ansatz(2, 2)
    theta = np.random.default_rng(59).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 2, seed=37)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    observables = [Observable("projector", 2, index=0),
                   Observable("projector", 2, index=3)]
    obs_mats = np.stack([o.matrix() for o in observables])
    coeffs = np.array([[0.7, -1.3], [2.0, 0.4]])

    _, checkpoints = dm_forward_layers(ansatz, theta, rhos, noise)
    got = dm_adjoint_grad(ansatz, theta, checkpoints, noise, obs_mats, coeffs)

    want = np.zeros(ansatz.n_params)
    for m in range(2):
        for k, obs in enumerate(observables):
            want += coeffs[m, k] * param_shift_grad(psi[m], ansatz, theta, obs,
                                                    noise=noise)
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_dm_forward_layers_final_state_matches_plain_forward():
    ansatz = Ansatz(2, 3)
    theta = np.random.default_rng(61).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 2, seed=41)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    noise = NoiseSpec("reset", 0.1)
    final, checkpoints = dm_forward_layers(ansatz, theta, rhos, noise)
    assert len(checkpoints) == 3
    np.testing.assert_allclose(final, dm_forward(ansatz, theta, rhos, noise),
                               atol=1e-14)
    np.testing.assert_array_equal(checkpoints[0], rhos)


# ------------------------------------------------------------------ backends


def both_backends():
    from qtboost import _kernels_numpy
    mods = [("numpy", _kernels_numpy)]
    try:
        from qtboost import _kernels_numba
        mods.append(("numba", _kernels_numba))
    except ImportError:
        pass
    return mods


@pytest.mark.skipif(len(both_backends()) < 2, reason="numba not installed")
def test_backend_equivalence_forward_and_adjoint():
    ansatz = Ansatz(3, 2)
    theta = np.random.default_rng(67).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(3, 4, seed=43)
    prog = ansatz.program(noisy=False)
    diag = Observable("z1", 3).diag()

    results = {}
    for name, kern in both_backends():
        work = psi.copy()
        kern.sv_run(work, prog.kinds, prog.qubits, prog.args, theta, 3)
        lam = diag[None, :] * work
        grad = kern.sv_adjoint(work.copy(), lam.copy(), prog.kinds, prog.qubits,
                               prog.args, theta, 3, ansatz.n_params)
        results[name] = (work, grad)

    ref_phi, ref_grad = results["numpy"]
    phi, grad = results["numba"]
    np.testing.assert_allclose(phi, ref_phi, atol=1e-12)
    np.testing.assert_allclose(grad, ref_grad, atol=1e-12)


@pytest.mark.skipif(len(both_backends()) < 2, reason="numba not installed")
def test_backend_equivalence_noisy_density():
    ansatz = Ansatz(2, 2)
    theta = np.random.default_rng(71).uniform(-np.pi, np.pi, ansatz.n_params)
    psi = random_states(2, 3, seed=47)
    rhos = np.einsum("mi,mj->mij", psi, psi.conj())
    prog = ansatz.program(noisy=True)
    kraus = kraus_ops(NoiseSpec("gad", 0.35, 0.2))

    outs = []
    for _, kern in both_backends():
        work = rhos.copy()
        kern.dm_run(work, prog.kinds, prog.qubits, prog.args, theta, 2, kraus)
        outs.append(work)
    np.testing.assert_allclose(outs[1], outs[0], atol=1e-12)


def test_backend_env_selection(monkeypatch):
    monkeypatch.setenv("QTBOOST_BACKEND", "numpy")
    backend._reset_cache()
    assert backend.backend_name() == "numpy"
    assert backend.kernels().__name__.endswith("_kernels_numpy")
    monkeypatch.setenv("QTBOOST_BACKEND", "nonsense")
    with pytest.raises(ValueError):
        backend.backend_name()
    monkeypatch.delenv("QTBOOST_BACKEND")
    backend._reset_cache()
    assert backend.backend_name() in ("numba", "numpy")
