"""Experiment orchestration: dataset → encoding → training → metrics.

`run_experiment` drives every supported method over `repeats` seeded runs
and writes per-run and aggregate artifacts under the configured output
directory:

```
out_dir/
  config.json                resolved configuration (provenance)
  aggregate_metrics.json     mean/std/min/max across repeats
  run_<r>/
    metrics.json             accuracies (raw + 4-decimal), sizes, failures
    model.json + model.npz   the trained model, reloadable via load_model
    tree.txt                 (tree method only) the split structure
    <unit>_rounds.csv        per-round boosting log per trained ensemble
```

All artifact files are deterministic functions of the config — two runs of
the same config produce byte-identical output (timings go to stdout only).
"""

from __future__ import annotations

import dataclasses
import json
import os
import time

import numpy as np

from .boost import (BoostEnsemble, RoundRecord, accuracy_curve, boost_binary,
                    boost_multiclass, default_checkpoints,
                    member_predictions, predict_binary, predict_multiclass)
from .channels import NoiseSpec
from .circuit import Ansatz
from .config import (ConfigError, DatasetSpec, ExperimentConfig,
                     config_to_dict)
from .datasets import LabeledSet, gen_annni, gen_synthetic, load_csv
from .encode import EncodingSpec, encode_batch
from .learn import BaseClassifier, train_base
from .reduce import BinaryTask, make_reduction
from .tree import (TraceTree, build_tree, parse_tree, predict_tta,
                   serialize_tree, train_tta, truncated_tree)

_REDUCTION_KIND = {"OVR": "ovr", "OVO": "ovo", "Bitwise": "bitwise"}


# ------------------------------------------------------------------ data


def load_dataset(spec: DatasetSpec) -> tuple[LabeledSet, LabeledSet]:
    if spec.train_path is not None:
        return load_csv(spec.train_path), load_csv(spec.test_path)
    if spec.generator == "synthetic":
        return gen_synthetic(spec.dim, spec.per_class_train, spec.per_class_test,
                             spec.seed, classes=spec.classes,
                             n_intervals=spec.n_intervals)
    return gen_annni(spec.n_sites, spec.per_class_train, spec.per_class_test,
                     spec.seed)


# ----------------------------------------------------------------- model


@dataclasses.dataclass
class TrainedModel:
    """A trained classifier of any supported method, plus its provenance."""

    method: str
    n_classes: int
    run_seed: int
    ansatz: Ansatz
    encoding: EncodingSpec
    noise: NoiseSpec | None
    tree: TraceTree | None = None
    single: BaseClassifier | None = None
    multi: BoostEnsemble | None = None
    tasks: list[BinaryTask] | None = None
    task_ensembles: list[BoostEnsemble] | None = None

    def units(self) -> list[tuple[str, BoostEnsemble]]:
        """Label → boosted ensemble, for every ensemble this model holds."""
        if self.method == "TTA":
            return [(f"node_{n.node_id}", n.ensemble) for n in self.tree.nodes
                    if n.ensemble is not None]
        if self.method == "MultiBoost":
            return [("ensemble", self.multi)]
        if self.method == "Single":
            return []
        return [(f"task_{i}_{t.name}", e)
                for i, (t, e) in enumerate(zip(self.tasks, self.task_ensembles))]

    def failed_units(self) -> list[str]:
        return [label for label, ens in self.units()
                if ens.termination == "WeakFail"]

    @property
    def total_members(self) -> int:
        if self.method == "Single":
            return 1
        return sum(ens.n_members for _, ens in self.units())

    @property
    def total_epochs(self) -> int:
        if self.method == "Single":
            return self.single.epochs_used
        return sum(ens.total_epochs for _, ens in self.units())

    @property
    def total_params(self) -> int:
        return self.total_members * self.ansatz.n_params


def _binary_margins(ensemble: BoostEnsemble, states: np.ndarray,
                    upto: int | None = None) -> np.ndarray:
    """Normalized vote margin of the (possibly truncated) ensemble; a
    memberless ensemble contributes zero margin."""
    kept = ensemble.n_members if upto is None else min(upto, ensemble.n_members)
    if kept == 0:
        return np.zeros(np.asarray(states).shape[0])
    preds = member_predictions(ensemble, states)[:kept]
    alphas = ensemble.alphas[:kept]
    return (alphas / np.abs(alphas).sum()) @ preds


def train_model(config: ExperimentConfig, states: np.ndarray,
                labels: np.ndarray, n_classes: int,
                run_seed: int) -> TrainedModel:
    model = TrainedModel(method=config.method, n_classes=n_classes,
                         run_seed=run_seed, ansatz=config.ansatz,
                         encoding=config.encoding, noise=config.noise)
    if config.method == "TTA":
        tree = build_tree(states, labels, n_classes, config.splitter)
        model.tree = train_tta(tree, states, labels, config.ansatz,
                               config.boost, config.train, run_seed,
                               noise=config.noise)
    elif config.method == "Single":
        weights = np.full(labels.shape[0], 1.0 / labels.shape[0])
        model.single = train_base(states, labels, weights, config.ansatz,
                                  config.train, loss="cross_entropy",
                                  n_classes=n_classes, noise=config.noise,
                                  seed=[run_seed, 0, 1])
    elif config.method == "MultiBoost":
        model.multi = boost_multiclass(states, labels, n_classes,
                                       config.ansatz, config.boost,
                                       config.train, run_seed,
                                       noise=config.noise)
    else:
        tasks, _ = make_reduction(_REDUCTION_KIND[config.method],
                                  range(n_classes))
        ensembles = []
        for i, task in enumerate(tasks):
            mask = task.training_mask(labels)
            y = task.relabel(labels[mask])
            ensembles.append(boost_binary(states[mask], y, config.ansatz,
                                          config.boost, config.train,
                                          run_seed, node_id=i + 1,
                                          noise=config.noise))
        model.tasks, model.task_ensembles = tasks, ensembles
    return model


def predict_model(model: TrainedModel, states: np.ndarray,
                  upto: int | None = None) -> np.ndarray:
    """Class predictions; failed (memberless) ensembles fall back to the
    +1 branch / zero margin instead of raising, so that runs with
    non-convergent nodes still report metrics."""
    if model.method == "TTA":
        tree = model.tree if upto is None else truncated_tree(model.tree, upto)
        return predict_tta(tree, states, fallback_plus=True)
    if model.method == "Single":
        return np.argmax(model.single.class_scores(states), axis=1)
    if model.method == "MultiBoost":
        ens = model.multi
        kept = ens.n_members if upto is None else min(upto, ens.n_members)
        if kept == 0:
            return np.zeros(np.asarray(states).shape[0], dtype=np.int64)
        clipped = dataclasses.replace(ens, members=ens.members[:kept],
                                      rounds=ens.rounds[:kept])
        return predict_multiclass(clipped, states)
    _, decode = make_reduction(_REDUCTION_KIND[model.method],
                               range(model.n_classes))
    margins = np.stack([_binary_margins(ens, states, upto)
                        for ens in model.task_ensembles], axis=1)
    return decode(margins)


def accuracy(model: TrainedModel, states: np.ndarray,
             labels: np.ndarray) -> float:
    return float(np.mean(predict_model(model, states) == np.asarray(labels)))


# ----------------------------------------------------------- persistence


def _ensemble_arrays(prefix: str, ens: BoostEnsemble, store: dict) -> dict:
    thetas = (np.stack([clf.theta for clf, _, _ in ens.members])
              if ens.members else np.zeros((0, 0)))
    store[f"{prefix}_thetas"] = thetas
    store[f"{prefix}_rounds"] = np.array(
        [[r.t, r.epsilon, r.alpha, r.gamma, r.epochs_used,
          float(r.clamped), r.post_update_error, r.z_actual]
         for r in ens.rounds]).reshape(len(ens.rounds), 8)
    store[f"{prefix}_alphas"] = ens.alphas
    store[f"{prefix}_eps"] = np.array([e for _, _, e in ens.members])
    store[f"{prefix}_gamma"] = np.array(ens.gamma_trace)
    store[f"{prefix}_final_weights"] = (ens.final_weights
                                        if ens.final_weights is not None
                                        else np.zeros(0))
    return {"termination": ens.termination, "seed": ens.seed,
            "node_id": ens.node_id, "kind": ens.kind,
            "n_classes": ens.n_classes,
            "weakfail": list(ens.weakfail) if ens.weakfail else None}


def _noise_dict(noise: NoiseSpec | None) -> dict:
    if noise is None:
        return {"kind": "none"}
    return {"kind": noise.kind, "p": noise.p, "gamma": noise.gamma}


def save_model(model: TrainedModel, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    arrays: dict = {}
    meta = {
        "method": model.method, "n_classes": model.n_classes,
        "run_seed": model.run_seed,
        "ansatz": {"n_qubits": model.ansatz.n_qubits,
                   "layers": model.ansatz.layers},
        "encoding": {"kind": model.encoding.kind,
                     "n_qubits": model.encoding.n_qubits},
        "noise": _noise_dict(model.noise),
    }
    if model.method == "TTA":
        serialize_tree(model.tree, os.path.join(out_dir, "tree.txt"))
        meta["units"] = [dict(_ensemble_arrays(f"u{i}", n.ensemble, arrays),
                              label=f"node_{n.node_id}")
                         for i, n in enumerate(model.tree.nodes)]
    elif model.method == "Single":
        arrays["u0_thetas"] = model.single.theta[None, :]
        meta["units"] = [{"label": "single", "kind": "single",
                          "n_classes": model.n_classes}]
    elif model.method == "MultiBoost":
        meta["units"] = [dict(_ensemble_arrays("u0", model.multi, arrays),
                              label="ensemble")]
    else:
        meta["tasks"] = [{"name": t.name, "negative": list(t.negative),
                          "positive": list(t.positive),
                          "restricted": t.restricted} for t in model.tasks]
        meta["units"] = [dict(_ensemble_arrays(f"u{i}", ens, arrays),
                              label=f"task_{i}_{t.name}")
                         for i, (t, ens) in enumerate(zip(model.tasks,
                                                          model.task_ensembles))]
    with open(os.path.join(out_dir, "model.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    np.savez(os.path.join(out_dir, "model.npz"), **arrays)


def _rebuild_ensemble(unit: dict, arrays, prefix: str, ansatz: Ansatz,
                      noise: NoiseSpec | None) -> BoostEnsemble:
    thetas = arrays[f"{prefix}_thetas"]
    alphas = arrays[f"{prefix}_alphas"]
    eps = arrays[f"{prefix}_eps"]
    member_classes = 2 if unit["kind"] == "binary" else unit["n_classes"]
    members = [(BaseClassifier(ansatz=ansatz, theta=thetas[i],
                               n_classes=member_classes, noise=noise,
                               train_log=[], best_epoch=0),
                float(alphas[i]), float(eps[i]))
               for i in range(thetas.shape[0])]
    rounds = [RoundRecord(t=int(row[0]), epsilon=row[1], alpha=row[2],
                          gamma=row[3], epochs_used=int(row[4]),
                          clamped=bool(row[5]), post_update_error=row[6],
                          z_actual=row[7])
              for row in arrays[f"{prefix}_rounds"]]
    weakfail = unit.get("weakfail")
    final_w = arrays[f"{prefix}_final_weights"]
    return BoostEnsemble(kind=unit["kind"], n_classes=unit["n_classes"],
                         members=members,
                         gamma_trace=list(arrays[f"{prefix}_gamma"]),
                         termination=unit["termination"], rounds=rounds,
                         noise=noise, seed=unit["seed"],
                         node_id=unit["node_id"],
                         final_weights=final_w if final_w.size else None,
                         weakfail=tuple(weakfail) if weakfail else None)


def load_model(model_dir) -> TrainedModel:
    with open(os.path.join(model_dir, "model.json")) as fh:
        meta = json.load(fh)
    arrays = np.load(os.path.join(model_dir, "model.npz"))
    ansatz = Ansatz(**meta["ansatz"])
    encoding = EncodingSpec(**meta["encoding"])
    noise_d = meta["noise"]
    noise = (None if noise_d["kind"] == "none"
             else NoiseSpec(noise_d["kind"], noise_d["p"], noise_d["gamma"]))
    model = TrainedModel(method=meta["method"], n_classes=meta["n_classes"],
                         run_seed=meta["run_seed"], ansatz=ansatz,
                         encoding=encoding, noise=noise)
    if model.method == "TTA":
        tree = parse_tree(os.path.join(model_dir, "tree.txt"))
        for i, node in enumerate(tree.nodes):
            node.ensemble = _rebuild_ensemble(meta["units"][i], arrays,
                                              f"u{i}", ansatz, noise)
        model.tree = tree
    elif model.method == "Single":
        model.single = BaseClassifier(ansatz=ansatz,
                                      theta=arrays["u0_thetas"][0],
                                      n_classes=model.n_classes, noise=noise,
                                      train_log=[], best_epoch=0)
    elif model.method == "MultiBoost":
        model.multi = _rebuild_ensemble(meta["units"][0], arrays, "u0",
                                        ansatz, noise)
    else:
        model.tasks = [BinaryTask(name=t["name"],
                                  negative=tuple(t["negative"]),
                                  positive=tuple(t["positive"]),
                                  restricted=t["restricted"])
                       for t in meta["tasks"]]
        model.task_ensembles = [
            _rebuild_ensemble(unit, arrays, f"u{i}", ansatz, noise)
            for i, unit in enumerate(meta["units"])]
    return model


# -------------------------------------------------------------- artifacts


def write_rounds_csv(path, ensemble: BoostEnsemble) -> None:
    with open(path, "w") as fh:
        fh.write("t, epsilon_t, alpha_t, gamma_t, epochs_used\n")
        for r in ensemble.rounds:
            fh.write(f"{r.t}, {r.epsilon:.17g}, {r.alpha:.17g}, "
                     f"{r.gamma:.17g}, {r.epochs_used}\n")


def write_weights_csv(path, ensemble: BoostEnsemble) -> None:
    with open(path, "w") as fh:
        fh.write("sample_weight\n")
        if ensemble.final_weights is not None:
            for w in ensemble.final_weights:
                fh.write(f"{w:.17g}\n")


def _unit_eval_data(model: TrainedModel, label: str, states, labels):
    """Node/task-local binary view of an evaluation set (None for units
    that see the full multi-class data)."""
    if model.method == "TTA":
        node = model.tree.node(int(label.split("_")[1]))
        mask = np.isin(labels, node.classes)
        y = np.where(np.isin(labels[mask], node.minus), -1, 1).astype(np.int64)
        return states[mask], y
    if model.method in _REDUCTION_KIND:
        index = int(label.split("_")[1])
        task = model.tasks[index]
        mask = task.training_mask(labels)
        return states[mask], task.relabel(labels[mask])
    return states, np.asarray(labels)


def emit_curves(model: TrainedModel, train_states, train_labels, test_states,
                test_labels, out_dir) -> dict:
    """Accuracy-vs-member-count curves plus round logs, final per-node
    sample weights, and parameter counts.

    The aggregate curve truncates every ensemble to its first
    min(checkpoint, size) members, so members that converged early keep
    contributing their final result at later checkpoints; the last
    checkpoint therefore equals the untruncated classifier.
    """
    os.makedirs(out_dir, exist_ok=True)
    train_labels = np.asarray(train_labels)
    test_labels = np.asarray(test_labels)
    summary: dict = {"units": {}}

    for label, ens in model.units():
        write_rounds_csv(os.path.join(out_dir, f"{label}_rounds.csv"), ens)
        write_weights_csv(os.path.join(out_dir, f"{label}_weights.csv"), ens)
        if ens.n_members == 0:
            continue
        tr_states, tr_y = _unit_eval_data(model, label, train_states,
                                          train_labels)
        te_states, te_y = _unit_eval_data(model, label, test_states,
                                          test_labels)
        tr_curve = accuracy_curve(ens, tr_states, tr_y)
        te_curve = accuracy_curve(ens, te_states, te_y)
        with open(os.path.join(out_dir, f"{label}_curve.csv"), "w") as fh:
            fh.write("checkpoint, train_accuracy, test_accuracy\n")
            for (c, tr), (_, te) in zip(tr_curve, te_curve):
                fh.write(f"{c}, {tr:.17g}, {te:.17g}\n")
        summary["units"][label] = {"n_members": ens.n_members,
                                   "final_train": tr_curve[-1][1],
                                   "final_test": te_curve[-1][1]}

    member_counts = [ens.n_members for _, ens in model.units()]
    max_members = max(member_counts, default=0)
    if model.method != "Single" and max_members > 0:
        checkpoints = default_checkpoints(max_members)
        with open(os.path.join(out_dir, "aggregate_curve.csv"), "w") as fh:
            fh.write("checkpoint, train_accuracy, test_accuracy\n")
            for c in checkpoints:
                tr = float(np.mean(predict_model(model, train_states, upto=c)
                                   == train_labels))
                te = float(np.mean(predict_model(model, test_states, upto=c)
                                   == test_labels))
                fh.write(f"{c}, {tr:.17g}, {te:.17g}\n")
        summary["aggregate_checkpoints"] = checkpoints

    with open(os.path.join(out_dir, "parameter_count.csv"), "w") as fh:
        fh.write("unit, n_members, params_per_member, total_params\n")
        for label, ens in model.units():
            fh.write(f"{label}, {ens.n_members}, {model.ansatz.n_params}, "
                     f"{ens.n_members * model.ansatz.n_params}\n")
        fh.write(f"TOTAL, {model.total_members}, {model.ansatz.n_params}, "
                 f"{model.total_params}\n")
    summary["total_members"] = model.total_members
    summary["total_params"] = model.total_params
    return summary


# ------------------------------------------------------------ experiment


def _json_dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def encode_dataset(data: LabeledSet, encoding: EncodingSpec) -> np.ndarray:
    return encode_batch(data.features, encoding)


def run_experiment(config: ExperimentConfig, *, curves: bool = False,
                   quiet: bool = False) -> dict:
    """Train `config.method` for `config.repeats` seeded runs and write
    per-run + aggregate metrics (and optionally curve CSVs) to
    `config.out_dir`.  Returns the aggregate summary."""
    os.makedirs(config.out_dir, exist_ok=True)
    _json_dump(config_to_dict(config), os.path.join(config.out_dir,
                                                    "config.json"))
    train_ls, test_ls = load_dataset(config.dataset)
    n_classes = max(train_ls.n_classes, int(train_ls.labels.max()) + 1)
    if n_classes < 2:
        raise ConfigError("dataset: need at least 2 classes")
    train_states = encode_dataset(train_ls, config.encoding)
    test_states = encode_dataset(test_ls, config.encoding)

    runs = []
    for r in range(config.repeats):
        run_seed = config.seed + r
        run_dir = os.path.join(config.out_dir, f"run_{r}")
        os.makedirs(run_dir, exist_ok=True)
        started = time.perf_counter()
        model = train_model(config, train_states, train_ls.labels,
                            n_classes, run_seed)
        train_acc = accuracy(model, train_states, train_ls.labels)
        test_acc = accuracy(model, test_states, test_ls.labels)
        elapsed = time.perf_counter() - started

        metrics = {
            "run": r, "run_seed": run_seed,
            "train_accuracy": train_acc, "test_accuracy": test_acc,
            "train_accuracy_4dp": f"{train_acc:.4f}",
            "test_accuracy_4dp": f"{test_acc:.4f}",
            "n_members": model.total_members,
            "total_epochs": model.total_epochs,
            "total_params": model.total_params,
            "failed_units": model.failed_units(),
            "terminations": {label: ens.termination
                             for label, ens in model.units()},
        }
        _json_dump(metrics, os.path.join(run_dir, "metrics.json"))
        save_model(model, run_dir)
        for label, ens in model.units():
            write_rounds_csv(os.path.join(run_dir, f"{label}_rounds.csv"), ens)
        if curves:
            emit_curves(model, train_states, train_ls.labels, test_states,
                        test_ls.labels, os.path.join(run_dir, "curves"))
        if not quiet:
            print(f"run {r}: train {train_acc:.4f}  test {test_acc:.4f}  "
                  f"members {model.total_members}  "
                  f"epochs {model.total_epochs}  [{elapsed:.1f}s]")
        runs.append(metrics)

    def stats(key: str) -> dict:
        vals = np.array([m[key] for m in runs], dtype=np.float64)
        return {"mean": float(vals.mean()), "std": float(vals.std()),
                "min": float(vals.min()), "max": float(vals.max())}

    aggregate = {
        "method": config.method, "repeats": config.repeats,
        "train_accuracy": stats("train_accuracy"),
        "test_accuracy": stats("test_accuracy"),
        "n_members": stats("n_members"),
        "total_epochs": stats("total_epochs"),
        "runs": runs,
    }
    _json_dump(aggregate, os.path.join(config.out_dir,
                                       "aggregate_metrics.json"))
    if not quiet:
        tr, te = aggregate["train_accuracy"], aggregate["test_accuracy"]
        print(f"aggregate: train {tr['mean']:.4f}±{tr['std']:.4f}  "
              f"test {te['mean']:.4f}±{te['std']:.4f}")
    return aggregate


def compare_early_stopping(config: ExperimentConfig, *,
                           quiet: bool = False) -> dict:
    """Train the same seeded binary boosting twice — early stopping on and
    off — and report epochs, member counts, and accuracies for both."""
    train_ls, test_ls = load_dataset(config.dataset)
    classes = np.unique(train_ls.labels)
    if classes.shape[0] != 2:
        raise ConfigError("early-stopping study needs a binary dataset "
                          f"(got {classes.shape[0]} classes)")
    train_states = encode_dataset(train_ls, config.encoding)
    test_states = encode_dataset(test_ls, config.encoding)
    y_train = np.where(train_ls.labels == classes[0], -1, 1).astype(np.int64)
    y_test = np.where(test_ls.labels == classes[0], -1, 1).astype(np.int64)

    os.makedirs(config.out_dir, exist_ok=True)
    report: dict = {}
    for name, flag in (("with_early_stopping", True),
                       ("without_early_stopping", False)):
        train_cfg = dataclasses.replace(config.train, early_stopping=flag)
        ens = boost_binary(train_states, y_train, config.ansatz, config.boost,
                           train_cfg, config.seed, node_id=1,
                           noise=config.noise)
        if ens.n_members == 0:
            train_acc = test_acc = float("nan")
        else:
            train_acc = float(np.mean(predict_binary(ens, train_states)[0]
                                      == y_train))
            test_acc = float(np.mean(predict_binary(ens, test_states)[0]
                                     == y_test))
        write_rounds_csv(os.path.join(config.out_dir, f"rounds_{name}.csv"),
                         ens)
        report[name] = {
            "n_members": ens.n_members,
            "total_epochs": ens.total_epochs,
            "termination": ens.termination,
            "train_accuracy": train_acc, "test_accuracy": test_acc,
            "train_accuracy_4dp": f"{train_acc:.4f}",
            "test_accuracy_4dp": f"{test_acc:.4f}",
            "epsilon_series": [r.epsilon for r in ens.rounds],
        }
        if not quiet:
            print(f"{name}: members {ens.n_members}  epochs "
                  f"{ens.total_epochs}  train {train_acc:.4f}  "
                  f"test {test_acc:.4f}")
    with_e = report["with_early_stopping"]["total_epochs"]
    without_e = report["without_early_stopping"]["total_epochs"]
    report["epoch_reduction_factor"] = (without_e / with_e if with_e else
                                        float("nan"))
    _json_dump(report, os.path.join(config.out_dir, "early_stop_report.json"))
    return report
