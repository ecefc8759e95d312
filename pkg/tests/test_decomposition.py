from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from fairbisect.decomposition import (
    CutCatalogue,
    TreeDecomposition,
    adhesion,
    alpha,
    compactify,
    cone,
    contract_nested_bags,
    dumps,
    from_document,
    is_unbreakable,
    loads,
    log2_ceil,
    subgraph_Gt,
    to_document,
    validate,
)
from fairbisect.errors import ParseError
from fairbisect.graph_core import EdgeCut, cut_order

from conftest import clique, colored_graphs, graph_from, path_graph


def td_of(parent, bags, root=0) -> TreeDecomposition:
    return TreeDecomposition(parent=parent, bags={t: frozenset(b) for t, b in bags.items()}, root=root)


def brute_unbreakable(graph, bag: int, q: int, s: int) -> bool:
    for a in range(1 << graph.n):
        cut = EdgeCut.from_masks(graph.all_mask, a)
        if cut_order(graph, cut) <= s and (a & bag).bit_count() > q and (bag & ~a).bit_count() > q:
            return False
    return True


def test_adhesion_examples():
    td = td_of({0: None, 1: 0, 2: 0}, {0: {0, 1}, 1: {1, 2}, 2: {3}})
    assert adhesion(td, 0) == frozenset()
    assert adhesion(td, 1) == frozenset({1})
    assert adhesion(td, 2) == frozenset()


def test_cone_alpha_and_subgraph():
    g = path_graph(3)
    td = td_of({0: None, 1: 0}, {0: {0, 1}, 1: {1, 2}})
    assert cone(td, 1) == frozenset({1, 2})
    assert cone(td, 0) == frozenset(range(3))
    assert alpha(td, 1) == frozenset({2})
    sub = subgraph_Gt(g, td, 1)
    assert (1, 2) in sub.edges


def test_single_bag_is_valid():
    g = clique(4)
    rep = validate(g, TreeDecomposition.single_bag(range(4)))
    assert rep.valid and rep.depth == 0 and rep.max_adhesion == 0


def test_chained_path_bags_valid():
    rep = validate(path_graph(3), td_of({0: None, 1: 0}, {0: {0, 1}, 1: {1, 2}}))
    assert rep.valid and rep.compact


def test_missing_edge_reported():
    g = graph_from(3, [(0, 2)])
    rep = validate(g, td_of({0: None, 1: 0}, {0: {0, 1}, 1: {2}}))
    assert not rep.valid and any(v.startswith("T2") for v in rep.violations)


def test_disconnected_occurrence_reported():
    g = path_graph(3)
    td = td_of({0: None, 1: 0, 2: 1}, {0: {0, 1}, 1: {1, 2}, 2: {0}})
    rep = validate(g, td)
    assert any(v.startswith("T3") for v in rep.violations)


def test_star_is_unbreakable():
    star = graph_from(6, [(0, v) for v in range(1, 6)])
    assert is_unbreakable(star, range(6), 1, 1)
    assert brute_unbreakable(star, star.all_mask, 1, 1)


def test_disjoint_edges_broken_along_components():
    g = graph_from(4, [(0, 1), (2, 3)])
    verdict = is_unbreakable(g, range(4), 1, 0)
    assert not verdict
    assert verdict.witness is not None
    assert cut_order(g, verdict.witness) == 0
    assert len(verdict.witness.side_a) == 2


@given(colored_graphs(max_n=7), st.integers(0, 3))
def test_small_bags_always_unbreakable(g, q):
    bag = (1 << min(g.n, q)) - 1
    assert is_unbreakable(g, bag, q, 2)


@given(colored_graphs(max_n=8), st.integers(0, 2), st.integers(0, 2), st.data())
def test_unbreakability_methods_agree_with_brute_force(g, q, s, data):
    bag = data.draw(st.integers(0, g.all_mask)) if g.n else 0
    expected = brute_unbreakable(g, bag, q, s)
    for method in ("bipartitions", "edge-subsets"):
        verdict = is_unbreakable(g, bag, q, s, method=method)
        assert bool(verdict) == expected
        if not verdict:
            w = verdict.witness
            assert cut_order(g, w) <= s
            assert len(w.side_a & set(range(g.n)) & {v for v in range(g.n) if bag >> v & 1}) > q


@given(colored_graphs(max_n=8), st.integers(0, 2))
def test_cut_catalogue_lists_every_low_order_cut(g, s):
    cat = CutCatalogue(g, s, g.all_mask, 10**6)
    listed = {int(m) & g.all_mask for m in cat.masks}
    listed |= {g.all_mask & ~m for m in listed}
    for a in range(1 << g.n):
        if cut_order(g, EdgeCut.from_masks(g.all_mask, a)) <= s:
            assert a in listed


def test_compactify_idempotent_on_compact_input():
    g = path_graph(4)
    td = td_of({0: None, 1: 0, 2: 1}, {0: {0, 1}, 1: {1, 2}, 2: {2, 3}})
    assert validate(g, td).compact
    out = compactify(g, td)
    assert validate(g, out).valid and validate(g, out).compact
    assert sorted(map(sorted, out.bags.values())) == sorted(map(sorted, td.bags.values()))


def test_compactify_splits_disconnected_alpha():
    # node 1 holds two separate leaves of the star centred at 0
    g = graph_from(3, [(0, 1), (0, 2)])
    td = td_of({0: None, 1: 0}, {0: {0}, 1: {0, 1, 2}})
    assert not validate(g, td).compact
    out = compactify(g, td)
    rep = validate(g, out)
    assert rep.valid and rep.compact
    for t in out.nodes:
        if t != out.root:
            assert out.adhesion_masks[t] == 0b001


def test_compactify_prunes_empty_alpha_leaf():
    g = path_graph(3)
    td = td_of({0: None, 1: 0, 2: 1}, {0: {0, 1}, 1: {1, 2}, 2: {2}})
    out = compactify(g, td)
    assert len(out) == 2 and validate(g, out).compact


def test_contract_nested_bags_removes_subset_child():
    td = td_of({0: None, 1: 0}, {0: {0, 1, 2}, 1: {1, 2}})
    assert len(contract_nested_bags(td)) == 1


@given(colored_graphs(max_n=6))
def test_document_round_trip(g):
    bags = {i: {i, (i + 1) % max(g.n, 1)} & set(range(g.n)) for i in range(max(g.n, 1))}
    td = td_of({i: (None if i == 0 else i - 1) for i in bags}, bags)
    assert loads(dumps(td)) == td
    assert from_document(to_document(td)) == td


@pytest.mark.parametrize("doc", [
    {"nodes": [{"id": 0, "parent": None}]},
    {"nodes": [{"id": 0, "parent": None, "bag": [0]}, {"id": 1, "parent": None, "bag": [1]}]},
    {"nodes": [{"id": "x", "parent": None, "bag": []}]},
])
def test_malformed_documents(doc):
    with pytest.raises(ParseError):
        from_document(doc)


def test_invalid_json_rejected():
    with pytest.raises(ParseError):
        loads("{not json")


@pytest.mark.parametrize("n, expected", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (64, 6), (65, 7)])
def test_log2_ceil(n, expected):
    assert log2_ceil(n) == expected


def test_clique_bag_unbreakable_exhaustively():
    for n, q, s in itertools.product(range(2, 7), range(0, 3), range(0, 3)):
        g = clique(n)
        assert bool(is_unbreakable(g, g.all_mask, q, s)) == brute_unbreakable(g, g.all_mask, q, s)
