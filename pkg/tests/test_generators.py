from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, strategies as st

from fairbisect.errors import DomainError, ParameterError
from fairbisect.generators import (
    BcspInstance,
    MdssInstance,
    bcsp_chain,
    bcsp_constants,
    bcsp_satisfiable,
    bcsp_to_mdss,
    corpus_parameters,
    mdp_to_fair_bisection,
    mdss_solvable,
    mdss_to_mdp,
    random_bcsp,
    random_instance,
)
from fairbisect.graph_core import FairInstance, cut_order
from fairbisect.oracle import exact_fair_bisection, exact_zero_cut_fair_bisection


def subset_sum_brute(mdss: MdssInstance) -> bool:
    """Direct enumeration of all subsets (independent of the reachable-set solver)."""
    for r in range(len(mdss.vectors) + 1):
        for pick in itertools.combinations(mdss.vectors, r):
            if tuple(map(sum, zip(*pick))) == mdss.target or (not pick and not any(mdss.target)):
                return True
    return False


@st.composite
def small_mdss(draw):
    d = draw(st.integers(1, 3))
    vec = st.tuples(*[st.integers(0, 4)] * d)
    vectors = draw(st.lists(vec, min_size=0, max_size=6))
    target = draw(vec)
    return MdssInstance(d, tuple(vectors), target)


def test_constants_for_domain_size_two():
    assert bcsp_constants(2) == (200, 120, 80)


def test_satisfiable_toy_bcsp_gives_solvable_mdss():
    bcsp = BcspInstance(2, 2, {(1, 2): frozenset({(1, 2)})})
    mdss = bcsp_to_mdss(bcsp)
    assert mdss.dims == 2 and mdss.target == (200, 200)
    assert bcsp_satisfiable(bcsp) and mdss_solvable(mdss) and subset_sum_brute(mdss)


def test_empty_constraint_gives_unsolvable_mdss():
    bcsp = BcspInstance(2, 2, {(1, 2): frozenset()})
    mdss = bcsp_to_mdss(bcsp)
    assert not bcsp_satisfiable(bcsp)
    assert not mdss_solvable(mdss) and not subset_sum_brute(mdss)


def test_dimension_order_follows_incidences():
    bcsp = BcspInstance(3, 1, {(1, 3): frozenset({(1, 1)}), (1, 2): frozenset({(1, 1)})})
    assert bcsp.incidences() == [(1, (1, 2)), (1, (1, 3)), (2, (1, 2)), (3, (1, 3))]
    mdss = bcsp_to_mdss(bcsp)
    # vector of (x1, value 1): A + 1 on both incidences of x1
    assert mdss.vectors[0] == (61, 61, 0, 0)


@pytest.mark.parametrize("bad", [{(2, 1): frozenset()}, {(1, 4): frozenset()}, {(1, 2): frozenset({(0, 1)})}])
def test_bcsp_validation(bad):
    with pytest.raises(DomainError):
        BcspInstance(3, 2, bad)


@pytest.mark.parametrize("seed", range(40))
def test_bcsp_to_mdss_preserves_answers(seed):
    bcsp = random_bcsp(1 + seed % 3, 1 + seed % 2, seed)
    assert bcsp_satisfiable(bcsp) == mdss_solvable(bcsp_to_mdss(bcsp))


@given(small_mdss())
def test_solvers_agree(mdss):
    assert mdss_solvable(mdss) == subset_sum_brute(mdss)


@given(small_mdss())
def test_partition_form_preserves_answers(mdss):
    mdp = mdss_to_mdp(mdss, pad=True)
    assert all(2 * t == s for t, s in zip(mdp.target, mdp.total()))
    assert mdss_solvable(mdp) == subset_sum_brute(mdss)


@given(small_mdss())
def test_parity_vector_is_the_smallest_valid_choice(mdss):
    mdp = mdss_to_mdp(mdss, pad=True)
    parity = mdp.vectors[-2]
    padded_total = tuple(map(sum, zip(*mdp.vectors[:-2]))) if len(mdp.vectors) > 2 else (0,) * mdss.dims
    for p, t, s in zip(parity, mdss.target, padded_total):
        assert p in (t + 1, t + 2) and (s + p) % 2 == 0
        assert p == t + 1 or (s + t + 1) % 2 == 1


def test_unpadded_reduction_rejects_unreachable_targets():
    with pytest.raises(DomainError):
        mdss_to_mdp(MdssInstance(1, ((1,),), (5,)))


def test_all_zero_instance_stays_solvable():
    mdss = MdssInstance(2, ((0, 0), (0, 0)), (0, 0))
    assert mdss_solvable(mdss) and mdss_solvable(mdss_to_mdp(mdss, pad=True))


def test_identical_vectors_give_two_stars():
    inst = mdp_to_fair_bisection(MdssInstance(2, ((2, 0), (2, 0)), (2, 0)))
    g = inst.graph
    assert g.n == 4 and g.m == 2 and inst.k == 0 and inst.r_target == (2, 0)
    cut = exact_fair_bisection(inst)
    assert cut is not None and cut_order(g, cut) == 0


def test_zero_vectors_are_skipped():
    inst = mdp_to_fair_bisection(MdssInstance(2, ((0, 0), (1, 1)), (1, 1)))
    assert inst.graph.n == 2 and inst.graph.m == 1


@pytest.mark.parametrize("vectors, target", [
    (((1, 1), (1, 1)), (1, 0)),
    (((2,), (2,), (2,)), (3,)),
    (((3, 1), (1, 3)), (2, 2)),
])
def test_toy_no_instances(vectors, target):
    inst = mdp_to_fair_bisection(MdssInstance(len(target), vectors, target))
    assert exact_fair_bisection(inst) is None
    assert exact_zero_cut_fair_bisection(inst) is None


@pytest.mark.parametrize("seed", range(12))
def test_chain_on_two_variables(seed):
    bcsp = random_bcsp(2, 2, seed)
    inst = bcsp_chain(bcsp)
    assert inst.k == 0
    assert all(x >= 0 for x in inst.r_target)
    assert bcsp_satisfiable(bcsp) == (exact_zero_cut_fair_bisection(inst) is not None)


def test_random_instance_is_seeded():
    assert random_instance(9, 12, 3, 2, 5) == random_instance(9, 12, 3, 2, 5)
    assert random_instance(9, 12, 3, 2, 5) != random_instance(9, 12, 3, 2, 6)


@given(st.integers(1, 10), st.integers(1, 3), st.integers(0, 100))
def test_edgeless_instances_always_solvable(n, c, seed):
    inst = random_instance(n, 0, c, 0, seed)
    assert exact_fair_bisection(inst) is not None


@pytest.mark.parametrize("seed", range(10))
def test_random_instance_parameters(seed):
    n, m, c, k = corpus_parameters(seed)
    inst = random_instance(n, m, c, k, seed)
    assert (inst.graph.n, inst.graph.m, inst.graph.c, inst.k) == (n, m, c, k)
    assert 2 <= n <= 12 and m <= 20 and 1 <= c <= 3 and 0 <= k <= 3


def test_random_instance_arguments_checked():
    with pytest.raises(ParameterError):
        random_instance(3, 4, 1, 0, 0)
    with pytest.raises(ParameterError):
        random_instance(3, 1, 0, 0, 0)


def test_corpus_instance_has_a_feasible_target():
    rng = random.Random(0)
    for _ in range(20):
        inst = random_instance(8, 0, 2, 0, rng.randrange(10**6))
        assert isinstance(inst, FairInstance)
        assert all(0 <= r <= t for r, t in zip(inst.r_target, inst.c_total))
