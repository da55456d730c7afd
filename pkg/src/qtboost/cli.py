"""Command-line entry point.

Subcommands:

* ``gen-data``         generate the configured dataset and write CSVs
* ``build-tree``       build (only) the class-partition tree and save it
* ``train``            run the full training experiment with repeats
* ``eval``             evaluate a stored model (``model_dir`` in the config)
* ``curves``           emit accuracy-vs-member-count curve CSVs
* ``early-stop-study`` train the same binary task with early stopping on/off

Every subcommand takes ``--config <path>`` (JSON; all fields optional),
``--out <dir>``, ``--seed <u64>`` and ``--threads <n>``.  Exit code 0 on
success; config or data errors print a diagnostic and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import ConfigError, ExperimentConfig, config_from_json
from .datasets import save_csv
from .experiment import (accuracy, compare_early_stopping, emit_curves,
                         encode_dataset, load_dataset, load_model,
                         run_experiment)
from .tree import build_tree, serialize_tree


def _resolve_config(args) -> ExperimentConfig:
    config = (config_from_json(args.config) if args.config
              else ExperimentConfig())
    if args.out is not None:
        config = dataclasses.replace(config, out_dir=args.out)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
        if args.command == "gen-data":
            config = dataclasses.replace(
                config, dataset=dataclasses.replace(config.dataset,
                                                    seed=args.seed))
    if args.threads is not None:
        os.environ["NUMBA_NUM_THREADS"] = str(args.threads)
        config = dataclasses.replace(config, threads=args.threads)
    return config


def _cmd_gen_data(config: ExperimentConfig) -> int:
    train, test = load_dataset(config.dataset)
    os.makedirs(config.out_dir, exist_ok=True)
    train_path = os.path.join(config.out_dir, "train.csv")
    test_path = os.path.join(config.out_dir, "test.csv")
    save_csv(train, train_path)
    save_csv(test, test_path)
    print(f"wrote {train.n_samples} train samples to {train_path}")
    print(f"wrote {test.n_samples} test samples to {test_path}")
    return 0


def _cmd_build_tree(config: ExperimentConfig) -> int:
    train, _ = load_dataset(config.dataset)
    states = encode_dataset(train, config.encoding)
    n_classes = max(train.n_classes, int(train.labels.max()) + 1)
    tree = build_tree(states, train.labels, n_classes, config.splitter)
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "tree.txt")
    serialize_tree(tree, path)
    for node in tree.nodes:
        print(f"node {node.node_id}: {node.minus} vs {node.plus}  "
              f"distance {node.distance:.4f}  samples {node.n_samples}")
    print(f"wrote {path}")
    return 0


def _cmd_train(config: ExperimentConfig, *, curves: bool = False) -> int:
    run_experiment(config, curves=curves)
    return 0


def _cmd_eval(config: ExperimentConfig) -> int:
    if config.model_dir is None:
        raise ConfigError("eval needs model_dir in the config "
                          "(a run directory written by `train`)")
    model = load_model(config.model_dir)
    train, test = load_dataset(config.dataset)
    train_states = encode_dataset(train, config.encoding)
    test_states = encode_dataset(test, config.encoding)
    train_acc = accuracy(model, train_states, train.labels)
    test_acc = accuracy(model, test_states, test.labels)
    os.makedirs(config.out_dir, exist_ok=True)
    out_path = os.path.join(config.out_dir, "eval_metrics.json")
    with open(out_path, "w") as fh:
        json.dump({"model_dir": config.model_dir,
                   "train_accuracy": train_acc, "test_accuracy": test_acc,
                   "train_accuracy_4dp": f"{train_acc:.4f}",
                   "test_accuracy_4dp": f"{test_acc:.4f}"},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"train {train_acc:.4f}  test {test_acc:.4f}  → {out_path}")
    return 0


def _cmd_curves(config: ExperimentConfig) -> int:
    if config.model_dir is not None:
        model = load_model(config.model_dir)
        train, test = load_dataset(config.dataset)
        summary = emit_curves(model,
                              encode_dataset(train, config.encoding),
                              train.labels,
                              encode_dataset(test, config.encoding),
                              test.labels,
                              os.path.join(config.out_dir, "curves"))
        print(f"emitted curves for {len(summary['units'])} unit(s) "
              f"({summary['total_members']} members, "
              f"{summary['total_params']} parameters)")
        return 0
    return _cmd_train(config, curves=True)


def _cmd_early_stop(config: ExperimentConfig) -> int:
    compare_early_stopping(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtboost",
        description="Boosted quantum classifiers on a trace-distance "
                    "class-partition tree")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "gen-data": "generate the configured dataset as CSV",
        "build-tree": "build and save the class-partition tree (no training)",
        "train": "train the configured method over all repeats",
        "eval": "evaluate a stored model on the configured dataset",
        "curves": "emit accuracy-vs-member-count curves and round logs",
        "early-stop-study": "compare boosting with and without early stopping",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="<path>",
                       help="JSON experiment config (defaults apply if omitted)")
        p.add_argument("--out", metavar="<dir>",
                       help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, metavar="<u64>",
                       help="override the base seed (gen-data: dataset seed)")
        p.add_argument("--threads", type=int, metavar="<n>",
                       help="worker thread budget for the kernels")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        handler = {"gen-data": _cmd_gen_data,
                   "build-tree": _cmd_build_tree,
                   "train": _cmd_train,
                   "eval": _cmd_eval,
                   "curves": _cmd_curves,
                   "early-stop-study": _cmd_early_stop}[args.command]
        return handler(config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
