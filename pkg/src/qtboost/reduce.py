"""Flat multi-class → binary reductions: one-vs-rest, one-vs-one, bitwise.

Each reduction yields a list of `BinaryTask`s (what to train) and a decoder
mapping the per-task ensemble margins back to a class label:

* one-vs-rest — K tasks, class k against everything else; the class with
  the largest margin wins;
* one-vs-one — K(K−1)/2 tasks, one per class pair (i < j, trained only on
  those two classes); the pair with the largest |margin| decides, its
  margin's sign picking i (negative) or j (positive, including 0);
* bitwise — ⌈log₂(max label + 1)⌉ tasks, one per bit of the raw label
  value, most significant bit first; the predicted bits are reassembled
  into a code, and codes matching no class map to the nearest valid code
  by Hamming distance (ties to the smaller label).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BinaryTask:
    """One binary training problem: which classes map to −1/+1, and whether
    training is restricted to those classes (one-vs-one) or sees all data."""

    name: str
    negative: tuple[int, ...]
    positive: tuple[int, ...]
    restricted: bool = False

    def __post_init__(self):
        if not self.negative or not self.positive:
            raise ValueError(f"task {self.name}: both sides must be non-empty")
        if set(self.negative) & set(self.positive):
            raise ValueError(f"task {self.name}: sides overlap")

    def training_mask(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        if not self.restricted:
            return np.ones(labels.shape[0], dtype=bool)
        return np.isin(labels, self.negative + self.positive)

    def relabel(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        return np.where(np.isin(labels, self.positive), 1, -1).astype(np.int64)


Decoder = Callable[[np.ndarray], np.ndarray]


def _check_classes(classes) -> tuple[int, ...]:
    ordered = tuple(sorted(int(c) for c in classes))
    if len(ordered) < 2:
        raise ValueError("need at least 2 classes")
    if len(set(ordered)) != len(ordered):
        raise ValueError("duplicate class labels")
    if ordered[0] < 0:
        raise ValueError("class labels must be non-negative")
    return ordered


def reduce_ovr(classes) -> tuple[list[BinaryTask], Decoder]:
    """K one-vs-rest tasks; decode by the largest margin."""
    ordered = _check_classes(classes)
    tasks = [BinaryTask(name=f"class_{c}_vs_rest",
                        negative=tuple(o for o in ordered if o != c),
                        positive=(c,))
             for c in ordered]
    lookup = np.asarray(ordered)

    def decode(margins: np.ndarray) -> np.ndarray:
        margins = np.atleast_2d(np.asarray(margins, dtype=np.float64))
        if margins.shape[1] != len(tasks):
            raise ValueError(f"expected {len(tasks)} margin columns")
        return lookup[np.argmax(margins, axis=1)]

    return tasks, decode


def reduce_ovo(classes) -> tuple[list[BinaryTask], Decoder]:
    """K(K−1)/2 pairwise tasks; the most confident pair decides."""
    ordered = _check_classes(classes)
    pairs = [(a, b) for i, a in enumerate(ordered) for b in ordered[i + 1:]]
    tasks = [BinaryTask(name=f"pair_{a}_vs_{b}", negative=(a,), positive=(b,),
                        restricted=True)
             for a, b in pairs]
    neg = np.asarray([a for a, _ in pairs])
    pos = np.asarray([b for _, b in pairs])

    def decode(margins: np.ndarray) -> np.ndarray:
        margins = np.atleast_2d(np.asarray(margins, dtype=np.float64))
        if margins.shape[1] != len(tasks):
            raise ValueError(f"expected {len(tasks)} margin columns")
        strongest = np.argmax(np.abs(margins), axis=1)
        picked = margins[np.arange(margins.shape[0]), strongest]
        return np.where(picked < 0, neg[strongest], pos[strongest])

    return tasks, decode


def reduce_bitwise(classes) -> tuple[list[BinaryTask], Decoder]:
    """One task per bit of the raw class label, most significant bit first.

    With non-contiguous labels a bit can be constant across all classes;
    such a task has an empty side and is rejected here (the code-per-class
    scheme assumes labels that exercise every bit).
    """
    ordered = _check_classes(classes)
    n_bits = max(1, math.ceil(math.log2(ordered[-1] + 1)))
    tasks = []
    for b in range(n_bits):
        shift = n_bits - 1 - b
        positive = tuple(c for c in ordered if (c >> shift) & 1)
        negative = tuple(c for c in ordered if not (c >> shift) & 1)
        tasks.append(BinaryTask(name=f"bit_{shift}", negative=negative,
                                positive=positive))

    code_to_label = np.empty(1 << n_bits, dtype=np.int64)
    for code in range(1 << n_bits):
        hamming = [bin(code ^ v).count("1") for v in ordered]
        code_to_label[code] = ordered[int(np.argmin(hamming))]

    def decode(margins: np.ndarray) -> np.ndarray:
        margins = np.atleast_2d(np.asarray(margins, dtype=np.float64))
        if margins.shape[1] != len(tasks):
            raise ValueError(f"expected {len(tasks)} margin columns")
        bits = (margins >= 0).astype(np.int64)
        weights = 1 << np.arange(n_bits - 1, -1, -1)
        return code_to_label[bits @ weights]

    return tasks, decode


def make_reduction(kind: str, classes) -> tuple[list[BinaryTask], Decoder]:
    table = {"ovr": reduce_ovr, "ovo": reduce_ovo, "bitwise": reduce_bitwise}
    if kind not in table:
        raise ValueError(f"unknown reduction {kind!r}; choose from {sorted(table)}")
    return table[kind](classes)
