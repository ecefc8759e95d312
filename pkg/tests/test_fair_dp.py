from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fairbisect.decomposition import TreeDecomposition
from fairbisect.errors import ParameterError
from fairbisect.fair_dp import (
    Entry,
    SoundnessChecker,
    balanced_index_tree,
    build_domain,
    delta_for,
    domain_size_bound,
    dump_tables,
    enumerate_feasible_configurations,
    error_budget_holds,
    index_tree_height,
    merge_family,
    refinement_components,
    run_dp,
    solve,
)
from fairbisect.generators import corpus_parameters, random_instance
from fairbisect.graph_core import FairInstance, cut_order, is_eps_fair, is_exact_fair
from fairbisect.oracle import exact_fair_bisection, min_order_profiles

from conftest import clique, fair_instances, graph_from, path_graph

FULL = Fraction(1, 1000)
"""A step small enough that the rounding domain is every integer up to n ≤ 12."""


# ---------------------------------------------------------------------------
# rounding domain


@pytest.mark.parametrize("delta, n, expected", [
    (1, 10, (0, 1, 2, 4, 8)),
    (Fraction(1, 2), 20, (0, 1, 2, 3, 5, 7, 11, 17)),
    (Fraction(9, 10), 13, (0, 1, 3, 6, 13)),
    (Fraction(1, 3), 1, (0, 1)),
])
def test_domain_examples(delta, n, expected):
    assert build_domain(delta, n).values == expected


@given(st.fractions(Fraction(1, 50), Fraction(2)), st.integers(1, 300))
def test_domain_matches_direct_evaluation(delta, n):
    expected = {0}
    i = 0
    while True:
        v = math.floor(Fraction(1) * (1 + delta) ** i)
        if v > n:
            break
        expected.add(v)
        i += 1
    dom = build_domain(delta, n)
    assert dom.values == tuple(sorted(expected))
    # consecutive elements are within a factor (1 + delta) after adding one
    for lo, hi in zip(dom.values, dom.values[1:]):
        assert hi < (1 + delta) * (lo + 1)


def test_rounding_examples():
    dom = build_domain(1, 10)
    assert dom.round_down(5) == 4 and dom.round_up(5) == 8
    assert all(dom.round_down(v) == v == dom.round_up(v) for v in dom.values)
    assert dom.round_down(0) == 0
    with pytest.raises(ParameterError):
        dom.round_up(9)


@given(st.fractions(Fraction(1, 20), Fraction(1)), st.integers(1, 60), st.data())
def test_round_down_is_the_largest_lower_element(delta, n, data):
    dom = build_domain(delta, n)
    v = data.draw(st.integers(0, n))
    d = dom.round_down(v)
    assert d in dom.values and d <= v
    assert not any(d < x <= v for x in dom.values)


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 25), Fraction(1, 5), Fraction(1)])
@pytest.mark.parametrize("n", [1, 2, 5, 12, 64, 1000])
def test_error_budget_and_domain_size(eps, n):
    assert error_budget_holds(eps, n)
    dom = build_domain(delta_for(eps, n), n)
    assert len(dom) <= domain_size_bound(dom)


def test_delta_rejects_bad_eps():
    with pytest.raises(ParameterError):
        delta_for(0, 5)


# ---------------------------------------------------------------------------
# structure helpers


@pytest.mark.parametrize("i", range(0, 40))
def test_balanced_index_tree_shape(i):
    kids = balanced_index_tree(i)
    assert set(kids) == set(range(i + 1))
    assert kids[0] == [] or i == 0
    seen = {i}
    stack = [i]
    while stack:
        v = stack.pop()
        assert len(kids[v]) <= 2
        for c in kids[v]:
            assert c not in seen
            seen.add(c)
            stack.append(c)
    assert seen == set(range(i + 1))
    assert index_tree_height(kids, i) <= max(1, math.ceil(math.log2(i + 1)))


def _one_bag(graph):
    return TreeDecomposition.single_bag(range(graph.n))


def test_refinement_with_whole_bag():
    g = path_graph(3)
    ref = refinement_components(g, _one_bag(g), 0, 0b111)
    assert ref.p == 0 and ref.parts == (0b111,)


def test_refinement_of_a_path_around_its_middle():
    g = path_graph(3)
    ref = refinement_components(g, _one_bag(g), 0, 0b010)
    assert ref.parts == (0b010, 0b001, 0b100)


def test_refinement_rejects_x_outside_bag():
    g = path_graph(3)
    td = TreeDecomposition(parent={0: None, 1: 0}, bags={0: frozenset({0, 1}), 1: frozenset({1, 2})}, root=0)
    with pytest.raises(ParameterError):
        refinement_components(g, td, 0, 0b100)


@pytest.mark.parametrize("seed", range(15))
def test_refinement_pieces_are_disjoint_and_separated(seed):
    inst = random_instance(9, 12, 1, 2, seed)
    run = run_dp(inst, 1)
    td = run.decomposition
    rng = random.Random(seed)
    for t in td.nodes:
        bag = td.bag_masks[t]
        x = bag & rng.getrandbits(inst.graph.n)
        ref = refinement_components(inst.graph, td, t, x)
        union = 0
        for part in ref.parts:
            assert not union & part
            union |= part
        assert union == bag
        for i, p1 in enumerate(ref.parts[1:], 1):
            for p2 in ref.parts[i + 1:]:
                assert inst.graph.edges_between(p1, p2) == 0
        for ell, group in enumerate(ref.groups):
            allowed = x | (ref.parts[ell] if ell else 0)
            assert all(not td.adhesion_masks[c] & ~allowed for c in group)


# ---------------------------------------------------------------------------
# merging


def _random_table(rng: random.Random, c: int, size: int, k: int):
    out = {}
    for _ in range(size):
        key = (rng.getrandbits(2), tuple(rng.randint(0, 4) for _ in range(c)),
               tuple(rng.randint(0, 4) for _ in range(c)))
        out[key] = Entry(rng.randint(0, k), 0, key[1], key[2])
    return out


@pytest.mark.parametrize("seed", range(25))
def test_configurations_agree_with_forward_merge(seed):
    rng = random.Random(seed)
    c = rng.randint(1, 2)
    k = rng.randint(0, 3)
    dom = build_domain(Fraction(1, 2), 20)
    own = _random_table(rng, c, rng.randint(1, 3), k)
    children = [_random_table(rng, c, rng.randint(1, 3), k) for _ in range(rng.randint(0, 2))]
    corr = (0, tuple(rng.randint(0, 1) for _ in range(c)), (0,) * c)
    merged = merge_family(own, children, corr, dom, k)
    for (at, a, b), e in merged.items():
        configs = list(enumerate_feasible_configurations((e.order, at, a, b), own, children, corr, dom))
        assert configs, "merged key has no feasible configuration"
        assert min(sum(cf.nu_w) for cf in configs) == e.order
    # every feasible configuration at w = k produces a key of the merge
    for at in range(4):
        for a0 in range(5):
            for b0 in range(5):
                target = (k, at, (dom.round_down(a0),) * c, (dom.round_down(b0),) * c)
                if next(enumerate_feasible_configurations(target, own, children, corr, dom), None):
                    assert target[1:] in merged


def test_all_zero_target_admits_only_zero_configurations():
    dom = build_domain(1, 10)
    own = {(0, (0,), (0,)): Entry(0, 0, (0,), (0,)), (0, (2,), (0,)): Entry(0, 0, (2,), (0,))}
    child = {(0, (0,), (0,)): Entry(0, 0, (0,), (0,)), (0, (1,), (0,)): Entry(1, 0, (1,), (0,))}
    configs = list(enumerate_feasible_configurations((3, 0, (0,), (0,)), own, [child], (0, (0,), (0,)), dom))
    assert configs and all(all(p == (0,) for p in cf.nu_a) for cf in configs)


def test_order_overflow_rejected():
    dom = build_domain(1, 10)
    own = {(0, (1,), (0,)): Entry(1, 0, (1,), (0,))}
    child = {(0, (1,), (0,)): Entry(1, 0, (1,), (0,))}
    assert not list(enumerate_feasible_configurations((1, 0, (2,), (0,)), own, [child], (0, (0,), (0,)), dom))
    assert merge_family(own, [child], (0, (0,), (0,)), dom, 1) == {}


def test_leaf_merge_is_rounding_of_own_table():
    dom = build_domain(1, 10)
    own = {(0, (5,), (3,)): Entry(0, 0, (5,), (3,))}
    assert list(merge_family(own, [], (0, (0,), (0,)), dom, 0)) == [(0, (4,), (2,))]


# ---------------------------------------------------------------------------
# tables against brute force


@pytest.mark.parametrize("seed", range(30))
def test_tables_equal_brute_force_with_full_domain(seed):
    n, m, c, k = corpus_parameters(seed, max_n=9)
    inst = random_instance(n, m, c, k, seed)
    run = run_dp(inst, Fraction(1, 2), delta=FULL, covering="powerset")
    td = run.decomposition
    for t, tab in run.tables.items():
        ref = min_order_profiles(inst.graph, td.cone_masks[t], td.adhesion_masks[t], k)
        assert {key: e.order for key, e in tab.items()} == ref


def test_empty_graph_table_holds_the_empty_cut():
    inst = FairInstance(graph_from(0, []), 0, (0,))
    run = run_dp(inst, 1)
    assert run.tables[run.decomposition.root] == {(0, (0,), (0,)): Entry(0, 0, (0,), (0,))}
    assert run.cut is not None and run.cut.side_a == frozenset()


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("delta", [Fraction(9, 10), Fraction(1, 3)])
def test_every_entry_sound_with_coarse_rounding(seed, delta):
    n, m, c, k = corpus_parameters(seed, max_n=10)
    inst = random_instance(n, m, c, k, seed)
    checker = SoundnessChecker(inst.graph, k)
    run_dp(inst, Fraction(1, 2), delta=delta, observer=checker)
    checker.td = None
    assert checker.entries > 0
    assert checker.violations == []


@pytest.mark.parametrize("seed", range(8))
def test_soundness_with_splitter_covering(seed):
    inst = random_instance(8, 10, 2, 2, seed)
    checker = SoundnessChecker(inst.graph, 2)
    run = run_dp(inst, Fraction(1, 2), covering="splitter", observer=checker)
    assert checker.violations == []
    assert run.table_size_violations() == []


# ---------------------------------------------------------------------------
# end to end


def test_two_disjoint_edges_solved(two_disjoint_edges):
    for eps in (Fraction(1, 9), Fraction(1, 2), 2):
        cut = solve(two_disjoint_edges, eps)
        assert cut is not None and cut.side_a == frozenset({0, 1})


@pytest.mark.parametrize("r", range(1, 5))
def test_clique_without_cheap_cut_gives_none_when_exact(r):
    assert solve(FairInstance(clique(5), 0, (r,)), Fraction(1, 11)) is None


@pytest.mark.parametrize("r, expected", [(1, frozenset()), (2, None), (3, None), (4, frozenset(range(5)))])
def test_clique_with_slack_accepts_only_trivial_cuts(r, expected):
    # the trivial cuts have order 0 and are (1/2, r)-fair exactly when r is 1 or 4
    cut = solve(FairInstance(clique(5), 0, (r,)), Fraction(1, 2))
    assert (cut.side_a if cut is not None else None) == expected


@given(fair_instances(max_n=7, max_k=2))
def test_exact_setting_matches_oracle(inst):
    cut = solve(inst, Fraction(1, 2 * inst.graph.n + 1))
    ref = exact_fair_bisection(inst)
    assert (cut is None) == (ref is None)
    if cut is not None:
        assert is_exact_fair(inst, cut)


@given(fair_instances(max_n=7, max_k=2), st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(1)]))
def test_returned_cuts_are_approximately_fair(inst, eps):
    cut = solve(inst, eps)
    if exact_fair_bisection(inst) is not None:
        assert cut is not None
    if cut is not None:
        assert is_eps_fair(inst, cut, float(eps)) and cut_order(inst.graph, cut) <= inst.k


def test_solver_is_deterministic():
    inst = random_instance(10, 14, 2, 2, 7)
    assert solve(inst, Fraction(1, 2)) == solve(inst, Fraction(1, 2))


def test_dump_rows_match_tables():
    inst = random_instance(6, 6, 2, 1, 3)
    run = run_dp(inst, 1)
    dump = dump_tables(run)
    assert {t: len(rows) for t, rows in dump.items()} == {t: len(tab) for t, tab in run.tables.items()}
    assert all(row[0] == "M" for rows in dump.values() for row in rows)


def test_nonpositive_eps_rejected(two_disjoint_edges):
    with pytest.raises(ParameterError):
        run_dp(two_disjoint_edges, 0)
