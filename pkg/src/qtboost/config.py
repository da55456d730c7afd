"""Experiment configuration: a single JSON file of nested key-value blocks.

Every field has a default mirroring the reference experimental settings
(angle encoding, 20-layer ansatz, batch 200, learning rate 0.005, boosting
tolerance 0.005), so a minimal config only names a dataset and a method.
Parse errors carry the offending field path (`train.learning_rate: ...`)
or, for malformed JSON, the line and column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dc_fields

from .channels import NoiseSpec
from .circuit import Ansatz
from .boost import BoostConfig
from .encode import EncodingSpec
from .learn import TrainConfig
from .tree import Brute, BruteUpTo, Greedy, Splitter

METHODS = ("TTA", "Single", "MultiBoost", "Bitwise", "OVO", "OVR")


class ConfigError(ValueError):
    """Config parse/validation failure with a field-path diagnostic."""


_REQUIRED = object()


def _get(block: dict, key: str, kind, path: str, default=_REQUIRED):
    # an explicit JSON null means "use the default", so provenance dumps
    # (which write None for unset optionals) re-parse to the same config
    if key not in block or block[key] is None:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}: required field missing")
        return default
    value = block[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {getattr(kind, '__name__', kind)},"
                          f" got {type(value).__name__}")
    return value


def _reject_unknown(block: dict, allowed, path: str) -> None:
    extra = set(block) - set(allowed)
    if extra:
        raise ConfigError(f"{path}: unknown field(s) {sorted(extra)}")


@dataclass(frozen=True)
class DatasetSpec:
    """Either a generator (with its parameters) or explicit CSV paths."""

    generator: str | None = "synthetic"
    train_path: str | None = None
    test_path: str | None = None
    dim: int = 4                 # synthetic feature dimension
    classes: int = 3
    n_intervals: int | None = None
    n_sites: int = 6             # chain length for the spin-chain generator
    per_class_train: int = 200
    per_class_test: int = 100
    seed: int = 1

    def __post_init__(self):
        if self.train_path is not None or self.test_path is not None:
            if self.train_path is None or self.test_path is None:
                raise ConfigError("dataset: train_path and test_path go together")
        elif self.generator not in ("synthetic", "annni"):
            raise ConfigError(f"dataset.generator: unknown generator {self.generator!r}")
        if self.per_class_train < 1 or self.per_class_test < 1:
            raise ConfigError("dataset: per-class counts must be positive")


def _parse_dataset(block: dict) -> DatasetSpec:
    _reject_unknown(block, {f.name for f in dc_fields(DatasetSpec)}, "dataset")
    kwargs = {}
    for f in dc_fields(DatasetSpec):
        if f.name in block and block[f.name] is not None:
            kinds = {"generator": str, "train_path": str, "test_path": str,
                     "dim": int, "classes": int, "n_intervals": int,
                     "n_sites": int, "per_class_train": int,
                     "per_class_test": int, "seed": int}
            kwargs[f.name] = _get(block, f.name, kinds[f.name], "dataset")
    return DatasetSpec(**kwargs)


def _parse_noise(block: dict | None) -> NoiseSpec | None:
    if block is None:
        return None
    _reject_unknown(block, {"kind", "p", "gamma"}, "noise")
    kind = _get(block, "kind", str, "noise")
    if kind == "none":
        return None
    try:
        return NoiseSpec(kind=kind, p=_get(block, "p", float, "noise"),
                         gamma=_get(block, "gamma", float, "noise", default=None))
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc


def _parse_splitter(block: dict | None) -> Splitter:
    if block is None:
        return BruteUpTo(12)
    _reject_unknown(block, {"kind", "limit"}, "splitter")
    kind = _get(block, "kind", str, "splitter")
    if kind == "brute":
        return Brute()
    if kind == "greedy":
        return Greedy()
    if kind == "brute_up_to":
        return BruteUpTo(_get(block, "limit", int, "splitter", default=12))
    raise ConfigError(f"splitter.kind: unknown splitter {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    encoding: EncodingSpec = field(default_factory=lambda: EncodingSpec("angle", 4))
    ansatz: Ansatz = field(default_factory=lambda: Ansatz(n_qubits=4, layers=20))
    train: TrainConfig = field(default_factory=TrainConfig)
    boost: BoostConfig = field(default_factory=BoostConfig)
    method: str = "TTA"
    noise: NoiseSpec | None = None
    splitter: Splitter = field(default_factory=lambda: BruteUpTo(12))
    repeats: int = 1
    seed: int = 0
    out_dir: str = "runs/experiment"
    threads: int = 1
    model_dir: str | None = None   # for evaluation of an already-trained run

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method: {self.method!r} not in {METHODS}")
        if self.repeats < 1:
            raise ConfigError("repeats: must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads: must be at least 1")
        if self.encoding.n_qubits != self.ansatz.n_qubits:
            raise ConfigError(
                f"encoding.n_qubits={self.encoding.n_qubits} does not match "
                f"ansatz.n_qubits={self.ansatz.n_qubits}")


_TOP_LEVEL = ("dataset", "encoding", "ansatz", "train", "boost", "method",
              "noise", "splitter", "repeats", "seed", "out_dir", "threads",
              "model_dir")


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"top level: expected an object, got {type(raw).__name__}")
    _reject_unknown(raw, _TOP_LEVEL, "top level")

    dataset = _parse_dataset(_get(raw, "dataset", dict, "top level", default={}))

    enc_block = _get(raw, "encoding", dict, "top level", default={})
    _reject_unknown(enc_block, {"kind", "n_qubits"}, "encoding")
    ans_block = _get(raw, "ansatz", dict, "top level", default={})
    _reject_unknown(ans_block, {"n_qubits", "layers"}, "ansatz")
    n_qubits = _get(ans_block, "n_qubits", int, "ansatz",
                    default=_get(enc_block, "n_qubits", int, "encoding", default=4))
    try:
        encoding = EncodingSpec(
            kind=_get(enc_block, "kind", str, "encoding", default="angle"),
            n_qubits=_get(enc_block, "n_qubits", int, "encoding", default=n_qubits))
        ansatz = Ansatz(n_qubits=n_qubits,
                        layers=_get(ans_block, "layers", int, "ansatz", default=20))
    except ValueError as exc:
        raise ConfigError(f"encoding/ansatz: {exc}") from exc

    train_block = _get(raw, "train", dict, "top level", default={})
    train_fields = {f.name for f in dc_fields(TrainConfig)}
    _reject_unknown(train_block, train_fields, "train")
    try:
        train = TrainConfig(**{k: v for k, v in train_block.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from exc

    boost_block = _get(raw, "boost", dict, "top level", default={})
    _reject_unknown(boost_block, {"max_rounds", "tolerance"}, "boost")
    try:
        boost = BoostConfig(**boost_block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"boost: {exc}") from exc

    return ExperimentConfig(
        dataset=dataset, encoding=encoding, ansatz=ansatz, train=train,
        boost=boost,
        method=_get(raw, "method", str, "top level", default="TTA"),
        noise=_parse_noise(_get(raw, "noise", dict, "top level", default=None)),
        splitter=_parse_splitter(_get(raw, "splitter", dict, "top level",
                                      default=None)),
        repeats=_get(raw, "repeats", int, "top level", default=1),
        seed=_get(raw, "seed", int, "top level", default=0),
        out_dir=_get(raw, "out_dir", str, "top level", default="runs/experiment"),
        threads=_get(raw, "threads", int, "top level", default=1),
        model_dir=_get(raw, "model_dir", str, "top level", default=None))


def config_from_json(path) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-JSON provenance dump of a parsed config."""
    noise = ({"kind": "none"} if config.noise is None else
             {"kind": config.noise.kind, "p": config.noise.p,
              "gamma": config.noise.gamma})
    splitter: dict = {"kind": {"Brute": "brute", "Greedy": "greedy",
                               "BruteUpTo": "brute_up_to"}[type(config.splitter).__name__]}
    if isinstance(config.splitter, BruteUpTo):
        splitter["limit"] = config.splitter.limit
    return {
        "dataset": {f.name: getattr(config.dataset, f.name)
                    for f in dc_fields(DatasetSpec)},
        "encoding": {"kind": config.encoding.kind,
                     "n_qubits": config.encoding.n_qubits},
        "ansatz": {"n_qubits": config.ansatz.n_qubits,
                   "layers": config.ansatz.layers},
        "train": {f.name: getattr(config.train, f.name)
                  for f in dc_fields(TrainConfig)},
        "boost": {"max_rounds": config.boost.max_rounds,
                  "tolerance": config.boost.tolerance},
        "method": config.method, "noise": noise, "splitter": splitter,
        "repeats": config.repeats, "seed": config.seed,
        "out_dir": config.out_dir, "threads": config.threads,
        "model_dir": config.model_dir,
    }
