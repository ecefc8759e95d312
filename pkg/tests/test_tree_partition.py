from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from fairbisect.decomposition import log2_ceil
from fairbisect.errors import ParameterError
from fairbisect.tree_partition import (
    TreePartition,
    balanced_bisector,
    find_balanced_tp,
    junction,
    tree_from_parent,
    validate_nice_partition,
)

from conftest import random_tree_parent


def path_tree(n: int) -> dict[int, list[int]]:
    return tree_from_parent({0: None, **{v: v - 1 for v in range(1, n)}})


def star_tree(n: int) -> dict[int, list[int]]:
    return tree_from_parent({0: None, **{v: 0 for v in range(1, n)}})


def test_bisector_examples():
    assert balanced_bisector(path_tree(5)) == 2
    assert balanced_bisector({7: []}) == 7
    assert balanced_bisector(star_tree(6)) == 0


@pytest.mark.parametrize("a, b, c, expected", [(0, 4, 2, 2), (0, 0, 3, 0), (1, 3, 3, 3)])
def test_junction_on_a_path(a, b, c, expected):
    assert junction(path_tree(5), a, b, c) == expected


def test_single_vertex_partition():
    tp = find_balanced_tp({0: []}, [0])
    assert tp.parent == {0: None} and tp.assign == {0: 0}


def test_path_of_seven_rooted_at_an_end():
    tree = path_tree(7)
    tp = find_balanced_tp(tree, [0])
    rep = validate_nice_partition(tree, tp)
    assert rep.valid and rep.depth <= 3 and rep.max_block <= 4
    assert tp.assign[0] == tp.root


@pytest.mark.parametrize("seed", range(20))
def test_random_trees_of_64_vertices(seed):
    tree = tree_from_parent(random_tree_parent(64, seed))
    rep = validate_nice_partition(tree, find_balanced_tp(tree, [0]))
    assert rep.valid and rep.depth <= 6 and rep.max_block <= 4


@given(st.integers(1, 64), st.integers(0, 10**6), st.data())
def test_two_marked_vertices_share_the_root_block(n, seed, data):
    tree = tree_from_parent(random_tree_parent(n, seed))
    marks = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2, unique=True))
    tp = find_balanced_tp(tree, marks)
    rep = validate_nice_partition(tree, tp)
    assert rep.valid, rep.violations
    assert rep.depth <= log2_ceil(n) and rep.max_block <= 4
    assert all(tp.assign[m] == tp.root for m in marks)


def test_trivial_partition_of_a_path_is_too_deep():
    tree = path_tree(5)
    tp = TreePartition(parent={0: None, **{v: v - 1 for v in range(1, 5)}},
                       assign={v: v for v in range(5)}, root=0)
    rep = validate_nice_partition(tree, tp)
    assert not rep.valid and any("depth" in v for v in rep.violations)


def test_disconnected_subtree_detected():
    tree = path_tree(3)
    # block 1 holds the two ends, the root block the middle: the ends are not connected
    tp = TreePartition(parent={0: None, 1: 0}, assign={0: 1, 1: 0, 2: 1}, root=0)
    rep = validate_nice_partition(tree, tp)
    assert any("connected" in v for v in rep.violations)


def test_singleton_blocks_reported_not_failed():
    tree = path_tree(2)
    tp = TreePartition(parent={0: None, 1: 0}, assign={0: 0, 1: 1}, root=0)
    rep = validate_nice_partition(tree, tp)
    assert rep.valid and rep.notes


@pytest.mark.parametrize("marks", [[], [0, 1, 2], [9]])
def test_bad_marked_sets_rejected(marks):
    with pytest.raises(ParameterError):
        find_balanced_tp(path_tree(4), marks)
