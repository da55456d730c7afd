"""Boosted variational quantum classifiers on a trace-distance class tree.

The package trains multi-class quantum classifiers by recursively
bipartitioning the class set where the trace distance between group mean
states is largest, then boosting a shallow parameterized circuit at every
internal node.  Flat one-vs-rest / one-vs-one / bitwise reductions and
single-circuit baselines are included for comparison, along with noisy
(density-matrix) execution under standard single-qubit channels.
"""

from .qcore import (DensityMatrix, StateVector, eigsh_ground, eigvalsh, kron,
                    mean_state, num_qubits, rng, trace_distance)
from .channels import NoiseSpec, apply_channel, completeness_defect, kraus_ops
from .circuit import (Ansatz, Observable, apply_circuit, apply_circuit_dm,
                      expectation, forward_margins, param_shift_grad)
from .encode import EncodingSpec, encode, encode_batch
from .datasets import (LabeledSet, annni_hamiltonian, annni_phase_label,
                       gen_annni, gen_synthetic, load_csv, load_idx, save_csv)
from .learn import (AdamState, BaseClassifier, TrainConfig, cross_entropy_loss,
                    hinge_loss, sign_pm1, train_base)
from .boost import (BoostConfig, BoostEnsemble, RoundRecord, accuracy_curve,
                    boost_binary, boost_multiclass, member_seed,
                    predict_binary, predict_multiclass)
from .tree import (Brute, BruteUpTo, Greedy, Partition, TraceTree, TreeNode,
                   build_tree, max_binary_split_brute, max_binary_split_greedy,
                   parse_tree, predict_tta, serialize_tree, train_tta)
from .reduce import BinaryTask, reduce_bitwise, reduce_ovo, reduce_ovr
from .config import (ConfigError, DatasetSpec, ExperimentConfig,
                     config_from_dict, config_from_json)
from .experiment import (TrainedModel, compare_early_stopping, emit_curves,
                         load_model, run_experiment, save_model, train_model)
from .backend import backend_name

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Ansatz", "BaseClassifier", "BinaryTask", "BoostConfig",
    "BoostEnsemble", "Brute", "BruteUpTo", "ConfigError", "DatasetSpec",
    "DensityMatrix", "EncodingSpec", "ExperimentConfig", "Greedy",
    "LabeledSet", "NoiseSpec", "Observable", "Partition", "RoundRecord",
    "StateVector", "TraceTree", "TrainConfig", "TrainedModel", "TreeNode",
    "accuracy_curve", "annni_hamiltonian", "annni_phase_label",
    "apply_channel", "apply_circuit", "apply_circuit_dm", "backend_name",
    "boost_binary", "boost_multiclass", "build_tree",
    "compare_early_stopping", "completeness_defect", "config_from_dict",
    "config_from_json", "cross_entropy_loss", "eigsh_ground", "eigvalsh",
    "emit_curves", "encode", "encode_batch", "expectation", "forward_margins",
    "gen_annni", "gen_synthetic", "hinge_loss", "kraus_ops", "kron",
    "load_csv", "load_idx", "load_model", "max_binary_split_brute",
    "max_binary_split_greedy", "mean_state", "member_seed", "num_qubits",
    "param_shift_grad", "parse_tree", "predict_binary", "predict_multiclass",
    "predict_tta", "reduce_bitwise", "reduce_ovo", "reduce_ovr", "rng",
    "run_experiment", "save_csv", "save_model", "serialize_tree", "sign_pm1",
    "trace_distance", "train_base", "train_model", "train_tta",
]
