"""AdaBoost over quantum base classifiers.

Binary boosting trains hinge-loss base classifiers on the evolving sample
weights, stops early once the exponential error bound
γ_t = exp(−2·Σ_{i≤t}(½−ε_i)²) falls below a tolerance, and aggregates by
an α-weighted vote.  The multi-class variant uses cross-entropy base
classifiers with the (K−1)/K weak-learning threshold and argmax voting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import NoiseSpec
from .circuit import Ansatz
from .learn import BaseClassifier, TrainConfig, sign_pm1, train_base

CHECKPOINT_STEP = 5  # accuracy curves sample at 1, 6, 11, ...


@dataclass(frozen=True)
class BoostConfig:
    max_rounds: int = 200
    tolerance: float = 0.005

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if not (0.0 < self.tolerance):
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class RoundRecord:
    t: int
    epsilon: float
    alpha: float
    gamma: float
    epochs_used: int
    clamped: bool          # ε was below 1/(2M) and clamped for the α formula
    post_update_error: float  # member's weighted error under the next weights
    z_actual: float        # realized normalizer of the weight update


@dataclass
class BoostEnsemble:
    kind: str                    # 'binary' | 'multiclass'
    n_classes: int
    members: list[tuple[BaseClassifier, float, float]]  # (clf, α_t, ε_t)
    gamma_trace: list[float]
    termination: str             # 'Converged' | 'MaxRounds' | 'WeakFail'
    rounds: list[RoundRecord]
    noise: NoiseSpec | None
    seed: int
    node_id: int
    final_weights: np.ndarray | None
    weakfail: tuple[int, float, int] | None = None  # (round, ε, epochs) of the discarded member
    checkpoint_step: int = CHECKPOINT_STEP

    @property
    def n_members(self) -> int:
        return len(self.members)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([alpha for _, alpha, _ in self.members])

    @property
    def total_epochs(self) -> int:
        used = sum(rec.epochs_used for rec in self.rounds)
        if self.weakfail is not None:
            used += self.weakfail[2]
        return used


def member_seed(base_seed: int, node_id: int, t: int) -> list[int]:
    """Deterministic per-member seed material."""
    return [int(base_seed), int(node_id), int(t)]


def _require_binary_labels(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    present = set(np.unique(y).tolist())
    if not present <= {-1, 1}:
        raise ValueError("binary boosting labels must be in {-1, +1}")
    if present != {-1, 1}:
        raise ValueError("binary boosting needs both classes present")
    return y


def boost_binary(states, labels, ansatz: Ansatz, boost_config: BoostConfig,
                 train_config: TrainConfig, seed: int, *, node_id: int = 0,
                 noise: NoiseSpec | None = None) -> BoostEnsemble:
    """Run binary AdaBoost.

    Per round: train a base classifier on the current weights, measure its
    weighted error ε_t from sign predictions, stop with WeakFail at
    ε_t ≥ ½ (member discarded); otherwise α_t = ½·ln((1−ε_t)/ε_t),
    w ← w·exp(−α_t·y·pred)/Z, and stop Converged when the bound
    γ_t drops below the tolerance.  A perfect round (ε_t = 0) is clamped to
    ε = 1/(2M) for the α formula only; the true ε enters the bound.
    """
    states = np.asarray(states)
    y = _require_binary_labels(labels)
    m = states.shape[0]
    w = np.full(m, 1.0 / m)
    members: list[tuple[BaseClassifier, float, float]] = []
    rounds: list[RoundRecord] = []
    gamma_trace: list[float] = []
    termination = "MaxRounds"
    weakfail = None
    sum_sq = 0.0
    eps_floor = 1.0 / (2.0 * m)

    for t in range(1, boost_config.max_rounds + 1):
        clf = train_base(states, y, w, ansatz, train_config,
                         loss="hinge", n_classes=2, noise=noise,
                         seed=member_seed(seed, node_id, t))
        pred = sign_pm1(clf.margins(states))
        wrong = pred != y
        eps = float(w @ wrong)
        if eps >= 0.5:
            termination = "WeakFail"
            weakfail = (t, eps, clf.epochs_used)
            break
        sum_sq += (0.5 - eps) ** 2
        gamma = math.exp(-2.0 * sum_sq)
        gamma_trace.append(gamma)
        clamped = eps < eps_floor
        eps_a = max(eps, eps_floor)
        alpha = 0.5 * math.log((1.0 - eps_a) / eps_a)
        members.append((clf, alpha, eps))
        u = w * np.exp(-alpha * y * pred)
        z_actual = float(u.sum())
        w = u / z_actual
        post_err = float(w @ wrong)
        rounds.append(RoundRecord(t=t, epsilon=eps, alpha=alpha, gamma=gamma,
                                  epochs_used=clf.epochs_used, clamped=clamped,
                                  post_update_error=post_err, z_actual=z_actual))
        if gamma < boost_config.tolerance:
            termination = "Converged"
            break

    return BoostEnsemble(kind="binary", n_classes=2, members=members,
                         gamma_trace=gamma_trace, termination=termination,
                         rounds=rounds, noise=noise, seed=seed,
                         node_id=node_id, final_weights=w, weakfail=weakfail)


def member_predictions(ensemble: BoostEnsemble, states) -> np.ndarray:
    """Stacked member predictions: (T, M) of ±1 (binary) or class ids."""
    if ensemble.kind == "binary":
        return np.stack([sign_pm1(clf.margins(states))
                         for clf, _, _ in ensemble.members])
    return np.stack([clf.predict(states) for clf, _, _ in ensemble.members])


def predict_binary(ensemble: BoostEnsemble, states):
    """Aggregate ±1 prediction and margin in [−1, 1].

    Raises:
        ValueError: empty ensemble (e.g. WeakFail on the first round).
    """
    if ensemble.n_members == 0:
        raise ValueError(
            f"ensemble has no members (termination={ensemble.termination}); "
            "cannot predict"
        )
    preds = member_predictions(ensemble, states)
    alphas = ensemble.alphas
    margins = (alphas / np.abs(alphas).sum()) @ preds
    return sign_pm1(margins), margins


def boost_multiclass(states, labels, n_classes: int, ansatz: Ansatz,
                     boost_config: BoostConfig, train_config: TrainConfig,
                     seed: int, *, node_id: int = 0,
                     noise: NoiseSpec | None = None) -> BoostEnsemble:
    """Multi-class AdaBoost: weak-learning threshold (K−1)/K, coefficients
    α_t = ln((1−ε_t)/ε_t) + ln(K−1), multiplicative reweighting of wrong
    samples, argmax α-vote."""
    if n_classes < 2:
        raise ValueError("multi-class boosting needs K >= 2")
    states = np.asarray(states)
    y = np.asarray(labels, dtype=np.int64)
    if np.unique(y).shape[0] < 2:
        raise ValueError("training data contains a single class")
    m = states.shape[0]
    w = np.full(m, 1.0 / m)
    threshold = (n_classes - 1) / n_classes
    eps_floor = 1.0 / (2.0 * m)
    members: list[tuple[BaseClassifier, float, float]] = []
    rounds: list[RoundRecord] = []
    termination = "MaxRounds"
    weakfail = None

    for t in range(1, boost_config.max_rounds + 1):
        clf = train_base(states, y, w, ansatz, train_config,
                         loss="cross_entropy", n_classes=n_classes,
                         noise=noise, seed=member_seed(seed, node_id, t))
        pred = clf.predict(states)
        wrong = pred != y
        eps = float(w @ wrong)
        if eps >= threshold:
            termination = "WeakFail"
            weakfail = (t, eps, clf.epochs_used)
            break
        clamped = eps < eps_floor
        eps_a = max(eps, eps_floor)
        alpha = math.log((1.0 - eps_a) / eps_a) + math.log(n_classes - 1)
        members.append((clf, alpha, eps))
        u = w * np.exp(alpha * wrong)
        z_actual = float(u.sum())
        w = u / z_actual
        rounds.append(RoundRecord(t=t, epsilon=eps, alpha=alpha, gamma=float("nan"),
                                  epochs_used=clf.epochs_used, clamped=clamped,
                                  post_update_error=float(w @ wrong),
                                  z_actual=z_actual))

    return BoostEnsemble(kind="multiclass", n_classes=n_classes, members=members,
                         gamma_trace=[], termination=termination, rounds=rounds,
                         noise=noise, seed=seed, node_id=node_id,
                         final_weights=w, weakfail=weakfail)


def predict_multiclass(ensemble: BoostEnsemble, states) -> np.ndarray:
    """argmax_k Σ_t α_t·1[pred_t = k] (ties go to the smaller class id)."""
    if ensemble.n_members == 0:
        raise ValueError(
            f"ensemble has no members (termination={ensemble.termination}); "
            "cannot predict"
        )
    preds = member_predictions(ensemble, states)
    scores = np.zeros((preds.shape[1], ensemble.n_classes))
    for (_, alpha, _), row in zip(ensemble.members, preds):
        scores[np.arange(row.shape[0]), row] += alpha
    return np.argmax(scores, axis=1)


def default_checkpoints(n_members: int, step: int = CHECKPOINT_STEP) -> list[int]:
    """1, 1+step, 1+2·step, ... with the final member count always included."""
    pts = list(range(1, n_members + 1, step))
    if pts[-1] != n_members:
        pts.append(n_members)
    return pts


def prefix_predictions(ensemble: BoostEnsemble, states,
                       preds: np.ndarray | None = None) -> np.ndarray:
    """(T, M) array: row t−1 is the prediction of the first-t-members ensemble."""
    if preds is None:
        preds = member_predictions(ensemble, states)
    alphas = ensemble.alphas
    if ensemble.kind == "binary":
        votes = np.cumsum(alphas[:, None] * preds, axis=0)
        return sign_pm1(votes)
    t_count, m = preds.shape
    scores = np.zeros((m, ensemble.n_classes))
    out = np.empty((t_count, m), dtype=np.int64)
    for t in range(t_count):
        scores[np.arange(m), preds[t]] += alphas[t]
        out[t] = np.argmax(scores, axis=1)
    return out


def accuracy_curve(ensemble: BoostEnsemble, states, labels,
                   checkpoints=None) -> list[tuple[int, float]]:
    """Accuracy of the truncated ensemble at each checkpoint.

    Defaults to the 1, 6, 11, ... grid; the final member count is always
    appended.  Checkpoints must not exceed the ensemble size.
    """
    if ensemble.n_members == 0:
        raise ValueError("ensemble has no members")
    if checkpoints is None:
        checkpoints = default_checkpoints(ensemble.n_members,
                                          ensemble.checkpoint_step)
    else:
        checkpoints = sorted(set(int(c) for c in checkpoints))
        if checkpoints and checkpoints[-1] > ensemble.n_members:
            raise ValueError("checkpoint beyond ensemble size")
        if not checkpoints or checkpoints[-1] != ensemble.n_members:
            checkpoints = checkpoints + [ensemble.n_members]
    y = np.asarray(labels)
    prefix = prefix_predictions(ensemble, states)
    return [(c, float(np.mean(prefix[c - 1] == y))) for c in checkpoints]
