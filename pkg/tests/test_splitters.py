from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from fairbisect.errors import BudgetExceeded, ParameterError
from fairbisect.splitters import (
    CoveringFamily,
    SplitterFamily,
    build_covering_family,
    build_splitter,
    splits_evenly,
    verify_covering,
    verify_splitter,
)


def brute_covering(fam: CoveringFamily) -> bool:
    """Independent check over all disjoint (X1, X2) pairs, not only maximal ones."""
    ground = fam.ground
    members = [set(x) for x in fam.sets]
    for a in range(min(fam.s1, len(ground)) + 1):
        for x1 in itertools.combinations(ground, a):
            rest = [v for v in ground if v not in x1]
            for b in range(min(fam.s2, len(rest)) + 1):
                for x2 in itertools.combinations(rest, b):
                    if not any(set(x1) <= x and not x & set(x2) for x in members):
                        return False
    return True


def test_k1_constant_function_suffices():
    fam = build_splitter(7, 1)
    assert fam.ell == 1 and len(fam) == 1 and verify_splitter(fam)


def test_n_equals_k_is_an_injection():
    fam = build_splitter(3, 3)
    assert verify_splitter(fam)
    assert len(set(fam.functions[0])) == 3


def test_n8_k2_exhaustive():
    assert verify_splitter(build_splitter(8, 2))


@pytest.mark.parametrize("n, k", [(n, k) for n in range(1, 11) for k in range(1, 4)])
def test_all_small_splitters_verify(n, k):
    fam = build_splitter(n, k)
    assert fam.ell == k * k
    assert all(len(f) == n and all(0 <= x < fam.ell for x in f) for f in fam.functions)
    assert verify_splitter(fam)


def test_splitter_negative_control():
    # one constant map into 4 buckets cannot split a pair
    fam = SplitterFamily(4, 2, 4, ((0, 0, 0, 0),))
    assert not verify_splitter(fam)


@pytest.mark.parametrize("f, subset, ell, expected", [
    ((0, 1, 2), (0, 1, 2), 3, True),
    ((0, 0, 1), (0, 1, 2), 2, True),
    ((0, 0, 0), (0, 1, 2), 2, False),
    ((0, 0), (0, 1), 4, False),
])
def test_splits_evenly(f, subset, ell, expected):
    assert splits_evenly(f, subset, ell) == expected


def test_splitter_is_deterministic():
    assert build_splitter(9, 3, seed=5) == build_splitter(9, 3, seed=5)


def test_splitter_arguments_validated():
    with pytest.raises(ParameterError):
        build_splitter(0, 1)
    with pytest.raises(BudgetExceeded):
        build_splitter(40, 10, budget=1000)


def test_singleton_pairs_over_six_elements():
    fam = build_covering_family(range(1, 7), 1, 1)
    assert verify_covering(fam) and brute_covering(fam)


def test_all_but_one_with_empty_avoid_set():
    fam = build_covering_family(range(5), 4, 0)
    assert verify_covering(fam) and brute_covering(fam)


@given(st.integers(0, 8), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_covering_verifiers_agree(size, s1, s2, seed):
    fam = build_covering_family(range(size), s1, s2, seed=seed)
    assert verify_covering(fam)
    assert brute_covering(fam)


def test_covering_negative_control():
    fam = CoveringFamily((0, 1, 2), 1, 1, (frozenset(), frozenset({0, 1, 2})))
    assert not verify_covering(fam)
    assert not brute_covering(fam)


def test_powerset_mode_and_auto():
    assert len(build_covering_family(range(4), 1, 1, mode="powerset")) == 16
    assert len(build_covering_family(range(4), 1, 1, mode="auto")) == 16
    with pytest.raises(ParameterError):
        build_covering_family(range(4), 1, 1, mode="nope")


@pytest.mark.parametrize("s1, s2", [(1, 2), (2, 2)])
def test_covering_over_a_non_contiguous_ground_set(s1, s2):
    fam = build_covering_family([3, 8, 11, 20, 21, 30, 41], s1, s2)
    assert fam.ground == (3, 8, 11, 20, 21, 30, 41)
    assert all(x <= set(fam.ground) for x in fam.sets)
    assert verify_covering(fam) and brute_covering(fam)
