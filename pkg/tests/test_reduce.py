"""Multi-class → binary reductions and their decoders."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtboost.reduce import (BinaryTask, make_reduction, reduce_bitwise,
                            reduce_ovo, reduce_ovr)


def test_binary_task_validation_and_masks():
    task = BinaryTask("t", negative=(0, 2), positive=(1,), restricted=True)
    labels = np.array([0, 1, 2, 3, 1])
    np.testing.assert_array_equal(task.training_mask(labels),
                                  [True, True, True, False, True])
    np.testing.assert_array_equal(task.relabel(labels), [-1, 1, -1, -1, 1])
    unrestricted = BinaryTask("u", negative=(0,), positive=(1,))
    assert task.training_mask(labels).dtype == bool
    np.testing.assert_array_equal(unrestricted.training_mask(labels),
                                  np.ones(5, dtype=bool))
    with pytest.raises(ValueError, match="non-empty"):
        BinaryTask("t", negative=(), positive=(1,))
    with pytest.raises(ValueError, match="overlap"):
        BinaryTask("t", negative=(0, 1), positive=(1,))


def test_class_list_validation():
    for fn in (reduce_ovr, reduce_ovo, reduce_bitwise):
        with pytest.raises(ValueError):
            fn([0])
        with pytest.raises(ValueError):
            fn([0, 0, 1])
        with pytest.raises(ValueError):
            fn([-1, 0])
    with pytest.raises(ValueError, match="unknown reduction"):
        make_reduction("ecoc", [0, 1])


@pytest.mark.parametrize("k", list(range(3, 11)))
def test_task_counts(k):
    classes = list(range(k))
    assert len(reduce_ovr(classes)[0]) == k
    assert len(reduce_ovo(classes)[0]) == k * (k - 1) // 2
    assert len(reduce_bitwise(classes)[0]) == int(np.ceil(np.log2(k)))


def test_ovr_task_shape_and_decode():
    tasks, decode = reduce_ovr([0, 1, 2])
    assert [t.name for t in tasks] == ["class_0_vs_rest", "class_1_vs_rest",
                                       "class_2_vs_rest"]
    for c, task in enumerate(tasks):
        assert task.positive == (c,)
        assert task.negative == tuple(o for o in (0, 1, 2) if o != c)
        assert not task.restricted
    margins = np.array([[0.9, -0.2, 0.1],
                        [-0.5, -0.1, -0.3],   # all negative: least negative wins
                        [0.2, 0.2, 0.7]])
    np.testing.assert_array_equal(decode(margins), [0, 1, 2])
    with pytest.raises(ValueError, match="columns"):
        decode(np.zeros((1, 4)))


def test_ovo_tasks_are_restricted_pairs():
    tasks, decode = reduce_ovo([0, 1, 2])
    assert [t.name for t in tasks] == ["pair_0_vs_1", "pair_0_vs_2",
                                       "pair_1_vs_2"]
    assert all(t.restricted for t in tasks)
    assert tasks[1].negative == (0,) and tasks[1].positive == (2,)
    # strongest |margin| decides; sign picks the pair member; 0 counts as +
    margins = np.array([[0.9, 0.1, 0.2],    # pair (0,1), positive → 1
                        [-0.8, 0.1, 0.3],   # pair (0,1), negative → 0
                        [0.1, 0.2, -0.9],   # pair (1,2), negative → 1
                        [0.0, 0.0, 0.0]])   # ties: first pair, sign(0) → 1
    np.testing.assert_array_equal(decode(margins), [1, 0, 1, 1])


def test_bitwise_tasks_msb_first():
    # labels up to 6 need 3 bits; label 6 = 110 sits positive on bits 2, 1
    tasks, _ = reduce_bitwise([0, 1, 2, 3, 4, 5, 6])
    assert [t.name for t in tasks] == ["bit_2", "bit_1", "bit_0"]
    assert 6 in tasks[0].positive and 6 in tasks[1].positive
    assert 6 in tasks[2].negative
    assert tasks[0].positive == (4, 5, 6)
    assert tasks[2].positive == (1, 3, 5)


def test_bitwise_decode_and_hamming_fallback():
    classes = [0, 1, 2, 3, 4, 5, 6]
    _, decode = reduce_bitwise(classes)
    # exact codes decode to themselves
    margins = np.array([[-1.0, 1.0, -1.0],   # 010 → 2
                        [1.0, 1.0, -1.0],    # 110 → 6
                        [0.0, -1.0, 1.0]])   # sign(0)=+ → 101 → 5
    np.testing.assert_array_equal(decode(margins), [2, 6, 5])
    # code 111 = 7 is no class; Hamming-1 neighbors 3, 5, 6 tie → smallest
    np.testing.assert_array_equal(decode(np.array([[1.0, 1.0, 1.0]])), [3])


def test_bitwise_single_bit_and_degenerate_bits():
    tasks, decode = reduce_bitwise([0, 1])
    assert len(tasks) == 1
    np.testing.assert_array_equal(decode(np.array([[-0.3], [0.4]])), [0, 1])
    # labels {1, 3} leave bit 0 constant: empty negative side must be rejected
    with pytest.raises(ValueError, match="non-empty"):
        reduce_bitwise([1, 3])


def margins_for_true_class(tasks, labels, gen):
    """Margins consistent with each sample's true class on every task."""
    m = np.empty((len(labels), len(tasks)))
    for j, task in enumerate(tasks):
        for i, label in enumerate(labels):
            scale = gen.uniform(0.2, 1.0)
            if label in task.positive:
                m[i, j] = scale
            elif label in task.negative:
                m[i, j] = -scale
            else:
                m[i, j] = gen.uniform(-0.1, 0.1)
    return m


@pytest.mark.parametrize("kind", ["ovr", "ovo", "bitwise"])
def test_consistent_margins_decode_to_true_class(kind):
    classes = [0, 1, 2, 3, 4]
    tasks, decode = make_reduction(kind, classes)
    gen = np.random.default_rng(3)
    labels = np.array([gen.choice(classes) for _ in range(40)])
    margins = margins_for_true_class(tasks, labels, gen)
    np.testing.assert_array_equal(decode(margins), labels)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=6), st.integers(0, 2 ** 31 - 1),
       st.sampled_from(["ovr", "ovo"]))
def test_decoder_permutation_equivariance(k, seed, kind):
    """Permuting class identities commutes with decoding.

    Tasks are matched across the two reductions by their (negative,
    positive) sets after applying the permutation, and the margin matrix is
    re-ordered (and sign-flipped where a pair swaps orientation)
    accordingly.
    """
    gen = np.random.default_rng(seed)
    perm = gen.permutation(k)
    classes = list(range(k))
    tasks, decode = make_reduction(kind, classes)
    ptasks, pdecode = make_reduction(kind, classes)  # same classes, new margins

    margins = gen.uniform(-1, 1, size=(25, len(tasks)))
    base = decode(margins)

    # build the margin matrix the permuted problem would see
    pmargins = np.empty_like(margins)
    key = {(t.negative, t.positive): j for j, t in enumerate(ptasks)}
    for j, task in enumerate(tasks):
        neg = tuple(sorted(int(perm[c]) for c in task.negative))
        pos = tuple(sorted(int(perm[c]) for c in task.positive))
        if (neg, pos) in key:
            pmargins[:, key[(neg, pos)]] = margins[:, j]
        else:  # pair swapped orientation under the permutation
            pmargins[:, key[(pos, neg)]] = -margins[:, j]

    got = pdecode(pmargins)
    want = perm[base]
    # argmax ties can break differently after permutation; exclude them
    if kind == "ovr":
        safe = np.abs(margins - np.sort(margins, axis=1)[:, -1:]).min(axis=1) > 0
        safe |= (margins == margins.max(axis=1, keepdims=True)).sum(axis=1) == 1
    else:
        a = np.sort(np.abs(margins), axis=1)
        safe = (a[:, -1] - a[:, -2]) > 1e-9
        safe &= np.abs(margins).max(axis=1) > 1e-9
    np.testing.assert_array_equal(got[safe], want[safe])


def test_ovr_with_noncontiguous_labels():
    tasks, decode = reduce_ovr([3, 7, 9])
    assert tasks[0].positive == (3,)
    np.testing.assert_array_equal(
        decode(np.array([[0.1, 0.9, 0.2], [0.8, -0.1, 0.0]])), [7, 3])
