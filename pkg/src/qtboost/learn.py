"""Weighted losses, Adam, and the mini-batch training loop for one base
classifier.

Binary base classifiers read out ⟨Z₁⟩ and are trained on the weighted hinge
loss; multi-class ones read out the first K basis projectors and are
trained on weighted softmax cross-entropy.  Training tracks the weighted
0-1 train error per epoch and returns the parameters of the best epoch;
early stopping halts once the best error is below a threshold and
`patience` consecutive epochs brought no strict improvement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import circuit
from .channels import NoiseSpec
from .circuit import Ansatz, Observable
from .qcore import rng

MARGIN_EPS = 1e-12  # samples exactly at the hinge kink contribute no gradient


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 200
    learning_rate: float = 0.005
    max_epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    early_stopping: bool = True
    error_threshold: float | None = None  # None → 0.5 binary, (K−1)/K multi-class
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def resolved_threshold(self, n_classes: int) -> float:
        if self.error_threshold is not None:
            return self.error_threshold
        if n_classes <= 2:
            return 0.5
        return (n_classes - 1) / n_classes


@dataclass
class AdamState:
    """Canonical Adam with bias correction."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default=None)  # type: ignore[assignment]
    v: np.ndarray = field(default=None)  # type: ignore[assignment]
    t: int = 0

    @classmethod
    def init(cls, n_params: int, config: TrainConfig) -> "AdamState":
        return cls(lr=config.learning_rate, beta1=config.beta1,
                   beta2=config.beta2, eps=config.adam_eps,
                   m=np.zeros(n_params), v=np.zeros(n_params))

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def sign_pm1(h: np.ndarray) -> np.ndarray:
    """Sign with the tie convention sign(0) := +1."""
    return np.where(np.asarray(h) < 0, -1, 1).astype(np.int64)


def _as_dm_batch(states: np.ndarray) -> np.ndarray:
    if states.ndim == 3:
        return states
    return np.einsum("mi,mj->mij", states, np.conj(states))


def hinge_loss(theta, states, labels, weights, ansatz: Ansatz,
               noise: NoiseSpec | None = None):
    """Weighted hinge loss Σ_m w_m·max(0, 1 − y_m·h_m) and its gradient.

    `states` may be a statevector batch (M, 2^n) or, when evaluating under
    noise, a density-matrix batch (M, 2^n, 2^n).  Labels must be ±1.

    Returns:
        (loss value, gradient vector of length ansatz.n_params)
    """
    y = np.asarray(labels, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("hinge labels must be in {-1, +1}")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    obs = Observable("z1", ansatz.n_qubits)
    diag = obs.diag()
    noisy = noise is not None and noise.kind != "none"

    if not noisy and states.ndim == 2:
        phi = circuit.sv_forward(ansatz, theta, states)
        h = circuit.sv_expectations(phi, diag)
        margin = 1.0 - y * h
        loss = float(w @ np.maximum(0.0, margin))
        coeff = np.where(margin > MARGIN_EPS, -w * y, 0.0)
        lam = (coeff[:, None] * phi) * diag[None, :]
        grad = circuit.sv_adjoint_grad(ansatz, theta, phi, lam)
        return loss, grad

    rhos = _as_dm_batch(np.asarray(states, dtype=np.complex128))
    final, checkpoints = circuit.dm_forward_layers(ansatz, theta, rhos, noise)
    h = circuit.dm_expectations(final, diag)
    margin = 1.0 - y * h
    loss = float(w @ np.maximum(0.0, margin))
    coeff = np.where(margin > MARGIN_EPS, -w * y, 0.0)
    grad = circuit.dm_adjoint_grad(ansatz, theta, checkpoints, noise,
                                   obs.matrix()[None, :, :], coeff[:, None])
    return loss, grad


def cross_entropy_loss(theta, states, labels, weights, ansatz: Ansatz,
                       n_classes: int, noise: NoiseSpec | None = None):
    """Weighted softmax cross-entropy over the first K projector expectations.

    Labels are integers in [0, K).  Returns (loss, gradient).
    """
    if n_classes > (1 << ansatz.n_qubits):
        raise ValueError(
            f"{n_classes} classes need {n_classes} basis projectors but the "
            f"circuit has only {1 << ansatz.n_qubits} basis states"
        )
    y = np.asarray(labels, dtype=np.int64)
    if np.any(y < 0) or np.any(y >= n_classes):
        raise ValueError("class labels outside [0, K)")
    w = np.asarray(weights, dtype=np.float64)
    noisy = noise is not None and noise.kind != "none"

    if not noisy and states.ndim == 2:
        phi = circuit.sv_forward(ansatz, theta, states)
        hk = (np.abs(phi) ** 2)[:, :n_classes]
    else:
        rhos = _as_dm_batch(np.asarray(states, dtype=np.complex128))
        final, checkpoints = circuit.dm_forward_layers(ansatz, theta, rhos, noise)
        hk = np.real(np.diagonal(final, axis1=1, axis2=2))[:, :n_classes]

    z = hk - hk.max(axis=1, keepdims=True)
    expz = np.exp(z)
    probs = expz / expz.sum(axis=1, keepdims=True)
    logsum = np.log(expz.sum(axis=1))
    loss = float(w @ (logsum - z[np.arange(z.shape[0]), y]))
    delta = probs.copy()
    delta[np.arange(z.shape[0]), y] -= 1.0
    delta *= w[:, None]

    if not noisy and states.ndim == 2:
        lam = np.zeros_like(phi)
        lam[:, :n_classes] = delta
        lam *= phi
        grad = circuit.sv_adjoint_grad(ansatz, theta, phi, lam)
        return loss, grad

    dim = 1 << ansatz.n_qubits
    projectors = np.zeros((n_classes, dim, dim), dtype=np.complex128)
    for k in range(n_classes):
        projectors[k, k, k] = 1.0
    grad = circuit.dm_adjoint_grad(ansatz, theta, checkpoints, noise,
                                   projectors, delta)
    return loss, grad


@dataclass
class BaseClassifier:
    """One trained shallow circuit: parameters, readout, and training trace."""

    ansatz: Ansatz
    theta: np.ndarray
    n_classes: int
    noise: NoiseSpec | None
    train_log: list[float]
    best_epoch: int
    encoding: object | None = None

    @property
    def epochs_used(self) -> int:
        return len(self.train_log)

    @property
    def observable(self) -> Observable:
        return Observable("z1", self.ansatz.n_qubits)

    def margins(self, states: np.ndarray) -> np.ndarray:
        """⟨Z₁⟩ per sample (binary readout)."""
        return circuit.forward_margins(self.ansatz, self.theta, states,
                                       self.observable, self.noise)

    def class_scores(self, states: np.ndarray) -> np.ndarray:
        """Projector expectations (M, K) (multi-class readout)."""
        noisy = self.noise is not None and self.noise.kind != "none"
        if not noisy:
            phi = circuit.sv_forward(self.ansatz, self.theta, states)
            return (np.abs(phi) ** 2)[:, : self.n_classes]
        rhos = _as_dm_batch(np.asarray(states, dtype=np.complex128))
        final = circuit.dm_forward(self.ansatz, self.theta, rhos, self.noise)
        return np.real(np.diagonal(final, axis1=1, axis2=2))[:, : self.n_classes]

    def predict(self, states: np.ndarray) -> np.ndarray:
        if self.n_classes <= 2:
            return sign_pm1(self.margins(states))
        return np.argmax(self.class_scores(states), axis=1)


def _weighted_error(pred, labels, weights) -> float:
    return float(np.sum(weights[np.asarray(pred) != np.asarray(labels)]))


def train_base(states, labels, weights, ansatz: Ansatz, config: TrainConfig,
               *, loss: str = "hinge", n_classes: int = 2,
               noise: NoiseSpec | None = None, seed=None) -> BaseClassifier:
    """Train one base classifier with mini-batch Adam.

    θ is initialized i.i.d. standard normal from the seed; each epoch
    shuffles with a seeded permutation and steps Adam per batch (last short
    batch kept; sample weights used as-is, normalized globally).  The
    returned parameters are the snapshot with the minimum recorded weighted
    train error.
    """
    states = np.asarray(states)
    y = np.asarray(labels)
    w = np.asarray(weights, dtype=np.float64)
    m_samples = states.shape[0]
    if m_samples == 0:
        raise ValueError("empty training set")
    if w.shape[0] != m_samples or y.shape[0] != m_samples:
        raise ValueError("states, labels and weights must align")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1 (got {w.sum()})")
    if loss not in ("hinge", "cross_entropy"):
        raise ValueError(f"unknown loss {loss!r}")

    noisy = noise is not None and noise.kind != "none"
    data = _as_dm_batch(states.astype(np.complex128)) if noisy else states
    gen = rng(config.seed if seed is None else seed)
    theta = gen.standard_normal(ansatz.n_params)
    adam = AdamState.init(ansatz.n_params, config)
    threshold = config.resolved_threshold(n_classes)
    diag = Observable("z1", ansatz.n_qubits).diag()

    def full_error(params) -> float:
        if loss == "hinge":
            if noisy:
                h = circuit.dm_expectations(
                    circuit.dm_forward(ansatz, params, data, noise), diag)
            else:
                h = circuit.sv_expectations(
                    circuit.sv_forward(ansatz, params, data), diag)
            return _weighted_error(sign_pm1(h), y, w)
        if noisy:
            final = circuit.dm_forward(ansatz, params, data, noise)
            scores = np.real(np.diagonal(final, axis1=1, axis2=2))[:, :n_classes]
        else:
            phi = circuit.sv_forward(ansatz, params, data)
            scores = (np.abs(phi) ** 2)[:, :n_classes]
        return _weighted_error(np.argmax(scores, axis=1), y, w)

    log: list[float] = []
    best_err = np.inf
    best_theta = theta.copy()
    best_epoch = 0
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        order = gen.permutation(m_samples)
        for lo in range(0, m_samples, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            if loss == "hinge":
                _, grad = hinge_loss(theta, data[idx], y[idx], w[idx], ansatz,
                                     noise=noise)
            else:
                _, grad = cross_entropy_loss(theta, data[idx], y[idx], w[idx],
                                             ansatz, n_classes, noise=noise)
            theta = adam.step(theta, grad)
        err = full_error(theta)
        log.append(err)
        if err < best_err:
            best_err = err
            best_theta = theta.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
        if config.early_stopping and best_err < threshold and stale >= config.patience:
            break

    return BaseClassifier(ansatz=ansatz, theta=best_theta, n_classes=n_classes,
                          noise=noise, train_log=log, best_epoch=best_epoch)
