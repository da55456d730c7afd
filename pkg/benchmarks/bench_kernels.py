#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

The two backends implement the same four entry points (statevector run,
statevector adjoint sweep, density-matrix run, density-matrix snapshot
run); this script drives each on training-shaped workloads and prints a
side-by-side table.  Select workload sizes with --batch / --layers and
averaging with --repeats.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    QTBOOST_BACKEND=numpy python3 -m pytest tests  # same switch the tests use
"""

import argparse
import importlib
import os
import time

import numpy as np

from qtboost import backend
from qtboost.channels import NoiseSpec, kraus_ops
from qtboost.circuit import Ansatz


def random_pure_batch(m: int, n: int, rng) -> np.ndarray:
    psi = rng.standard_normal((m, 2 ** n)) + 1j * rng.standard_normal((m, 2 ** n))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def make_scenarios(batch: int, layers: int, rng):
    """Name → (n_qubits, callable(kernels) running one full workload)."""
    scenarios = {}
    for n in (4, 6):
        ansatz = Ansatz(n_qubits=n, layers=layers)
        theta = rng.uniform(-np.pi, np.pi, ansatz.n_params)
        prog = ansatz.program()
        noisy = ansatz.program(noisy=True)
        kraus = kraus_ops(NoiseSpec("depolarizing", 0.1, None))
        psi0 = random_pure_batch(batch, n, rng)
        # density matrices are quadratically bigger; keep the batch modest
        dm_batch = max(8, batch // 8)
        rho0 = np.einsum("mi,mj->mij", psi0[:dm_batch], np.conj(psi0[:dm_batch]))
        zdiag = 1.0 - 2.0 * ((np.arange(2 ** n) >> (n - 2)) & 1)

        def sv_forward(k, psi0=psi0, prog=prog, theta=theta, n=n):
            psi = psi0.copy()
            k.sv_run(psi, prog.kinds, prog.qubits, prog.args, theta, n)
            return psi

        def sv_gradient(k, psi0=psi0, prog=prog, theta=theta, n=n,
                        zdiag=zdiag, n_params=ansatz.n_params):
            phi = psi0.copy()
            k.sv_run(phi, prog.kinds, prog.qubits, prog.args, theta, n)
            lam = phi * zdiag
            return k.sv_adjoint(phi, lam, prog.kinds, prog.qubits, prog.args,
                                theta, n, n_params)

        def dm_noisy(k, rho0=rho0, noisy=noisy, theta=theta, n=n, kraus=kraus):
            rho = rho0.copy()
            k.dm_run(rho, noisy.kinds, noisy.qubits, noisy.args, theta, n, kraus)
            return rho

        def dm_snapshots(k, rho0=rho0, noisy=noisy, theta=theta, n=n,
                         kraus=kraus, n_params=ansatz.n_params):
            rho = rho0.copy()
            out = np.empty((n_params,) + rho.shape, dtype=np.complex128)
            k.dm_rot_snapshots(rho, noisy.kinds, noisy.qubits, noisy.args,
                               theta, n, kraus, out, True)
            return out

        scenarios[f"sv_run          n={n} L={layers} batch={batch}"] = sv_forward
        scenarios[f"sv_adjoint      n={n} L={layers} batch={batch}"] = sv_gradient
        scenarios[f"dm_run          n={n} L={layers} batch={dm_batch}"] = dm_noisy
        scenarios[f"dm_rot_snapshot n={n} L={layers} batch={dm_batch}"] = dm_snapshots
    return scenarios


def load_kernels(name: str):
    os.environ["QTBOOST_BACKEND"] = name
    backend._reset_cache()
    return backend.kernels()


def best_time(fn, kernels, repeats: int) -> float:
    fn(kernels)  # warmup (triggers JIT compilation on the numba side)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(kernels)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=600,
                        help="statevector batch size (default 600)")
    parser.add_argument("--layers", type=int, default=20,
                        help="ansatz depth (default 20)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repeats per cell, best kept (default 5)")
    args = parser.parse_args()

    try:
        importlib.import_module("numba")
        has_numba = True
    except ImportError:
        has_numba = False
        print("numba is not installed; timing the numpy fallback only\n")

    rng = np.random.default_rng(0)
    scenarios = make_scenarios(args.batch, args.layers, rng)
    backends = ["numpy"] + (["numba"] if has_numba else [])
    loaded = {name: load_kernels(name) for name in backends}

    width = max(map(len, scenarios))
    header = f"{'kernel':<{width}}" + "".join(f"{b:>12}" for b in backends)
    if has_numba:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, fn in scenarios.items():
        times = [best_time(fn, loaded[b], args.repeats) for b in backends]
        row = f"{label:<{width}}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if has_numba:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    os.environ.pop("QTBOOST_BACKEND", None)
    backend._reset_cache()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
