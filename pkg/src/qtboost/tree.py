"""Trace-distance binary tree: construction, training, inference.

The multi-class problem is reduced to a binary tree of two-group
discriminations.  At each node the classes present are bipartitioned so
that the trace distance between the two groups' mean density matrices is
as large as possible; a boosted binary classifier is trained per internal
node, and inference walks the tree from the root (prediction −1 goes to
the left child, +1 to the right) until it reaches a single-class leaf.

A K-class problem always produces exactly K−1 internal nodes, numbered in
breadth-first order starting at 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .boost import BoostConfig, BoostEnsemble, boost_binary, predict_binary
from .channels import NoiseSpec
from .circuit import Ansatz
from .learn import TrainConfig
from .qcore import mean_state, trace_distance


# ------------------------------------------------------------- splitting


@dataclass(frozen=True)
class Partition:
    """A bipartition of a node's class set.

    `minus` is the group relabeled −1 (left branch), `plus` the +1 group
    (right branch); `distance` is the trace distance between the two
    groups' sample-count-weighted mean states.
    """

    minus: tuple[int, ...]
    plus: tuple[int, ...]
    distance: float

    def __post_init__(self):
        if not self.minus or not self.plus:
            raise ValueError("both groups must be non-empty")
        if set(self.minus) & set(self.plus):
            raise ValueError(f"groups overlap: {self.minus} vs {self.plus}")

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted(self.minus + self.plus))


@dataclass(frozen=True)
class Brute:
    """Exhaustive search over all balanced bipartitions."""


@dataclass(frozen=True)
class Greedy:
    """Seed-pair heuristic: O(K² log K) instead of O(2^K)."""


@dataclass(frozen=True)
class BruteUpTo:
    """Exhaustive search up to `limit` classes, greedy beyond."""

    limit: int = 12

    def __post_init__(self):
        if self.limit < 3:
            raise ValueError("brute-force limit must be at least 3")


Splitter = Brute | Greedy | BruteUpTo


def _group_mean(means: dict, counts: dict | None, group) -> np.ndarray:
    """Sample-count-weighted mean of the group's class means.

    Equals the plain mean over all of the group's samples.
    """
    stack = [means[c] for c in group]
    weights = None if counts is None else [counts[c] for c in group]
    return mean_state(stack, weights=weights)


def max_binary_split_brute(means: dict, classes, counts: dict | None = None) -> Partition:
    """Best split over all left sets of size ⌊K/2⌋ (K ≥ 3).

    Candidates are enumerated in lexicographic order of the left set and
    only strict improvements are kept, so score ties resolve to the
    lexicographically smallest left set.
    """
    ordered = tuple(sorted(classes))
    if len(ordered) < 3:
        raise ValueError(f"brute split needs at least 3 classes, got {len(ordered)}")
    best: Partition | None = None
    for left in itertools.combinations(ordered, len(ordered) // 2):
        right = tuple(c for c in ordered if c not in left)
        dist = trace_distance(_group_mean(means, counts, left),
                              _group_mean(means, counts, right))
        if best is None or dist > best.distance:
            best = Partition(left, right, dist)
    return best


def max_binary_split_greedy(means: dict, classes, counts: dict | None = None) -> Partition:
    """Seed the two groups with the most distant pair of class means, then
    attach each remaining class (ascending label order) to the seed whose
    mean is nearer; distance ties join the second seed's group.

    The groups may come out unbalanced; the smaller one becomes `minus`
    (equal sizes: the group holding the smaller label).
    """
    ordered = tuple(sorted(classes))
    if len(ordered) < 2:
        raise ValueError("greedy split needs at least 2 classes")
    if len(ordered) == 2:
        a, b = ordered
        return Partition((a,), (b,), trace_distance(means[a], means[b]))

    pair_dist = {}
    seed_a, seed_b, best = ordered[0], ordered[1], -1.0
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            d = trace_distance(means[a], means[b])
            pair_dist[(a, b)] = d
            if d > best:
                seed_a, seed_b, best = a, b, d
    group_a, group_b = [seed_a], [seed_b]
    for c in ordered:
        if c == seed_a or c == seed_b:
            continue
        d_a = pair_dist[(min(c, seed_a), max(c, seed_a))]
        d_b = pair_dist[(min(c, seed_b), max(c, seed_b))]
        (group_a if d_a < d_b else group_b).append(c)

    side_a, side_b = tuple(sorted(group_a)), tuple(sorted(group_b))
    if (len(side_b), min(side_b)) < (len(side_a), min(side_a)):
        side_a, side_b = side_b, side_a
    dist = trace_distance(_group_mean(means, counts, side_a),
                          _group_mean(means, counts, side_b))
    return Partition(side_a, side_b, dist)


def apply_splitter(splitter: Splitter, means: dict, classes,
                   counts: dict | None = None) -> Partition:
    if isinstance(splitter, Brute):
        return max_binary_split_brute(means, classes, counts)
    if isinstance(splitter, Greedy):
        return max_binary_split_greedy(means, classes, counts)
    if isinstance(splitter, BruteUpTo):
        if len(tuple(classes)) <= splitter.limit:
            return max_binary_split_brute(means, classes, counts)
        return max_binary_split_greedy(means, classes, counts)
    raise TypeError(f"unknown splitter {splitter!r}")


# ------------------------------------------------------------------ tree


@dataclass
class TreeNode:
    node_id: int                  # breadth-first, 1-based
    minus: tuple[int, ...]        # classes routed left (label −1)
    plus: tuple[int, ...]         # classes routed right (label +1)
    distance: float               # trace distance of the split
    n_samples: int
    parent: int                   # 0 for the root
    branch: int                   # −1/+1 = which side of the parent; 0 for root
    left_child: int | None = None   # node id, None when the left side is a leaf
    right_child: int | None = None
    ensemble: BoostEnsemble | None = None

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted(self.minus + self.plus))


@dataclass
class TraceTree:
    nodes: list[TreeNode] = field(default_factory=list)
    n_classes: int = 0
    splitter_name: str = ""

    def node(self, node_id: int) -> TreeNode:
        found = self.nodes[node_id - 1]
        if found.node_id != node_id:
            raise ValueError(f"node ids out of order at {node_id}")
        return found

    @property
    def root(self) -> TreeNode:
        return self.node(1)

    def leaves(self) -> tuple[int, ...]:
        return self.root.classes

    def failed_nodes(self) -> list[int]:
        """Ids of nodes whose ensemble is missing or stopped on WeakFail."""
        return [n.node_id for n in self.nodes
                if n.ensemble is None or n.ensemble.termination == "WeakFail"]


def class_mean_states(states: np.ndarray, labels: np.ndarray,
                      classes) -> tuple[dict, dict]:
    """Per-class mean density matrix and sample count.

    Raises if any requested class has no samples.
    """
    states = np.asarray(states)
    labels = np.asarray(labels)
    means, counts = {}, {}
    for c in classes:
        mask = labels == c
        count = int(mask.sum())
        if count == 0:
            raise ValueError(f"class {c} has zero samples")
        means[c] = mean_state(states[mask])
        counts[c] = count
    return means, counts


def build_tree(states: np.ndarray, labels: np.ndarray,
               n_classes: int | None = None,
               splitter: Splitter | None = None) -> TraceTree:
    """Recursively bipartition the class set, always maximizing the trace
    distance between the two groups' mean states.

    `states` are the encoded quantum states of the samples (one pure state
    per row).  Two-class (sub)sets split directly without consulting the
    splitter.  Classes are 0..K−1; a class without samples is an error.
    """
    labels = np.asarray(labels)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if splitter is None:
        splitter = BruteUpTo(12)
    classes = tuple(range(n_classes))
    means, counts = class_mean_states(states, labels, classes)

    tree = TraceTree(n_classes=n_classes, splitter_name=type(splitter).__name__)
    queue: list[tuple[tuple[int, ...], int, int]] = [(classes, 0, 0)]
    while queue:
        node_classes, parent, branch = queue.pop(0)
        if len(node_classes) == 2:
            a, b = sorted(node_classes)
            part = Partition((a,), (b,), trace_distance(means[a], means[b]))
        else:
            part = apply_splitter(splitter, means, node_classes, counts)
        node = TreeNode(node_id=len(tree.nodes) + 1, minus=part.minus,
                        plus=part.plus, distance=part.distance,
                        n_samples=sum(counts[c] for c in node_classes),
                        parent=parent, branch=branch)
        tree.nodes.append(node)
        if parent:
            parent_node = tree.node(parent)
            if branch == -1:
                parent_node.left_child = node.node_id
            else:
                parent_node.right_child = node.node_id
        if len(part.minus) >= 2:
            queue.append((part.minus, node.node_id, -1))
        if len(part.plus) >= 2:
            queue.append((part.plus, node.node_id, +1))
    assert len(tree.nodes) == n_classes - 1
    return tree


def train_tta(tree: TraceTree, states: np.ndarray, labels: np.ndarray,
              ansatz: Ansatz, boost_config: BoostConfig,
              train_config: TrainConfig, seed: int,
              noise: NoiseSpec | None = None) -> TraceTree:
    """Train one boosted binary classifier per internal node.

    Each node sees only the samples of its own classes, relabeled −1 for
    the `minus` group and +1 for `plus`.  Member seeds are derived from
    (seed, node_id, round), so node training order is irrelevant.  A node
    stopping on WeakFail is recorded, not fatal; inspect
    `tree.failed_nodes()` afterwards.
    """
    states = np.asarray(states)
    labels = np.asarray(labels)
    for node in tree.nodes:
        mask = np.isin(labels, node.classes)
        sub_states = states[mask]
        y = np.where(np.isin(labels[mask], node.minus), -1, 1).astype(np.int64)
        node.ensemble = boost_binary(sub_states, y, ansatz, boost_config,
                                     train_config, seed, node_id=node.node_id,
                                     noise=noise)
    return tree


def predict_tta(tree: TraceTree, states: np.ndarray,
                fallback_plus: bool = False) -> np.ndarray:
    """Route every sample from the root to a leaf and return the leaf class.

    A reachable node without a usable ensemble raises, unless
    `fallback_plus` is set, in which case such nodes send every sample to
    the right branch (the sign(0) = +1 convention).
    """
    states = np.asarray(states)
    m = states.shape[0]
    out = np.full(m, -1, dtype=np.int64)
    stack: list[tuple[TreeNode, np.ndarray]] = [(tree.root, np.arange(m))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.ensemble is None or node.ensemble.n_members == 0:
            if not fallback_plus:
                raise ValueError(f"node {node.node_id} has no trained ensemble")
            pred = np.ones(idx.size, dtype=np.int64)
        else:
            pred, _ = predict_binary(node.ensemble, states[idx])
        for side, child, sub in ((node.minus, node.left_child, idx[pred < 0]),
                                 (node.plus, node.right_child, idx[pred > 0])):
            if sub.size == 0:
                continue
            if len(side) == 1:
                out[sub] = side[0]
            else:
                stack.append((tree.node(child), sub))
    return out


def truncated_tree(tree: TraceTree, max_members: int) -> TraceTree:
    """The same tree with every node's ensemble cut to its first
    `max_members` members (nodes with fewer keep all of theirs)."""
    clipped = TraceTree(n_classes=tree.n_classes, splitter_name=tree.splitter_name)
    for node in tree.nodes:
        copy = TreeNode(node.node_id, node.minus, node.plus, node.distance,
                        node.n_samples, node.parent, node.branch,
                        node.left_child, node.right_child)
        ens = node.ensemble
        if ens is not None:
            kept = min(max_members, ens.n_members)
            copy.ensemble = BoostEnsemble(
                kind=ens.kind, n_classes=ens.n_classes,
                members=ens.members[:kept],
                gamma_trace=ens.gamma_trace[:kept],
                termination=ens.termination, rounds=ens.rounds[:kept],
                noise=ens.noise, seed=ens.seed, node_id=ens.node_id,
                final_weights=ens.final_weights, weakfail=ens.weakfail,
                checkpoint_step=ens.checkpoint_step)
        clipped.nodes.append(copy)
    return clipped


# --------------------------------------------------------- serialization


def serialize_tree(tree: TraceTree, path) -> None:
    """One line per internal node:
    `node_id, K_minus, K_plus, trace_distance, n_samples, parent, branch`
    with class sets as `;`-joined labels."""
    with open(path, "w") as fh:
        fh.write("# node_id, K_minus, K_plus, trace_distance, n_samples, parent, branch\n")
        for n in tree.nodes:
            fh.write(f"{n.node_id}, {';'.join(map(str, n.minus))}, "
                     f"{';'.join(map(str, n.plus))}, {n.distance:.17g}, "
                     f"{n.n_samples}, {n.parent}, {n.branch}\n")


def parse_tree(path) -> TraceTree:
    """Rebuild the tree structure (without ensembles) from `serialize_tree`
    output."""
    tree = TraceTree()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = [c.strip() for c in line.split(",")]
            if len(cols) != 7:
                raise ValueError(f"expected 7 columns, got {len(cols)}: {line!r}")
            node = TreeNode(node_id=int(cols[0]),
                            minus=tuple(int(v) for v in cols[1].split(";")),
                            plus=tuple(int(v) for v in cols[2].split(";")),
                            distance=float(cols[3]), n_samples=int(cols[4]),
                            parent=int(cols[5]), branch=int(cols[6]))
            tree.nodes.append(node)
    if not tree.nodes:
        raise ValueError(f"no nodes in {path}")
    for node in tree.nodes:
        if node.parent:
            parent = tree.node(node.parent)
            if node.branch == -1:
                parent.left_child = node.node_id
            else:
                parent.right_child = node.node_id
    tree.n_classes = len(tree.root.classes)
    return tree
