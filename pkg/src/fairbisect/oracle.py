"""Exact brute-force solvers used as ground truth for the tests.

``exact_fair_bisection`` scans all ``2^n`` bipartitions in ascending bitmask
order (vectorised in chunks with numpy).  ``exact_fair_bisection_by_colors`` is
an intentionally different second oracle that only enumerates A-sides with the
right colour profile; the two are cross-checked in the test-suite.
``exact_zero_cut_fair_bisection`` handles the ``k = 0`` special case for large
instances by a subset-sum over connected components.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from ._bits import bits_list, components
from .errors import BudgetExceeded, DomainError
from .graph_core import ColoredGraph, EdgeCut, FairInstance

_CHUNK = 1 << 16


@dataclass(frozen=True)
class OracleBudget:
    """Cap on the number of vertices for ``2^n`` enumeration."""

    max_vertices: int = 20

    def __post_init__(self) -> None:
        if self.max_vertices < 1:
            raise DomainError("max_vertices must be at least 1")


def _popcount(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr).astype(np.int64)


def exact_fair_bisection(inst: FairInstance, budget: OracleBudget = OracleBudget()) -> EdgeCut | None:
    """First (ascending bitmask) A-side with profile ``r`` and order ≤ k, or None."""
    g = inst.graph
    n = g.n
    if n > budget.max_vertices:
        raise BudgetExceeded(f"n={n} exceeds oracle budget of {budget.max_vertices} vertices")
    cmasks = [np.uint64(cm) for cm in g.color_masks]
    us = np.array([u for u, _ in g.sorted_edges], dtype=np.uint64)
    vs = np.array([v for _, v in g.sorted_edges], dtype=np.uint64)
    one = np.uint64(1)
    total = 1 << n
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.uint64)
        ok = np.ones(masks.shape, dtype=bool)
        for cm, r in zip(cmasks, inst.r_target):
            ok &= _popcount(masks & cm) == r
        if not ok.any():
            continue
        cand = masks[ok]
        order = np.zeros(cand.shape, dtype=np.int64)
        for u, v in zip(us, vs):
            order += (((cand >> u) ^ (cand >> v)) & one).astype(np.int64)
        hit = np.nonzero(order <= inst.k)[0]
        if hit.size:
            return EdgeCut.from_masks(g.all_mask, int(cand[hit[0]]))
    return None


def exact_fair_bisection_by_colors(inst: FairInstance,
                                   budget: OracleBudget = OracleBudget()) -> EdgeCut | None:
    """Second oracle: choose ``r_i`` vertices of each colour, test the order.

    Returns a cut with minimum order among exact-profile cuts (any one), or None.
    """
    g = inst.graph
    if g.n > budget.max_vertices:
        raise BudgetExceeded(f"n={g.n} exceeds oracle budget of {budget.max_vertices} vertices")
    by_color = [[v for v in g.vertices if g.colors[v] == i] for i in range(1, g.c + 1)]
    choices = [list(itertools.combinations(vs, r)) for vs, r in zip(by_color, inst.r_target)]
    best: tuple[int, frozenset[int]] | None = None
    for combo in itertools.product(*choices):
        side = frozenset(v for part in combo for v in part)
        order = sum(1 for u, v in g.edges if (u in side) != (v in side))
        if order <= inst.k and (best is None or order < best[0]):
            best = (order, side)
    if best is None:
        return None
    return EdgeCut(frozenset(g.vertices), best[1])


def exact_zero_cut_fair_bisection(inst: FairInstance, max_states: int = 2_000_000) -> EdgeCut | None:
    """Exact answer for order-0 cuts: a subset of connected components whose
    colour profile equals ``r`` (multi-dimensional subset sum).

    Depth-first over components (largest first) with suffix-sum bounds in
    every colour and memoised dead states; ``max_states`` caps the memo.
    """
    g = inst.graph
    comps = components(g.all_mask, list(g.adj))
    target = tuple(inst.r_target)
    profs = [g.profile_of_mask(cm) for cm in comps]
    order = sorted(range(len(comps)), key=lambda i: (-sum(profs[i]), i))
    suffix = [(0,) * g.c] * (len(order) + 1)
    for pos in range(len(order) - 1, -1, -1):
        suffix[pos] = tuple(a + b for a, b in zip(suffix[pos + 1], profs[order[pos]]))
    dead: set[tuple[int, tuple[int, ...]]] = set()
    chosen: list[int] = []

    def search(pos: int, need: tuple[int, ...]) -> bool:
        if not any(need):
            return True
        if pos == len(order) or any(x > s for x, s in zip(need, suffix[pos])):
            return False
        if (pos, need) in dead:
            return False
        p = profs[order[pos]]
        if all(x >= y for x, y in zip(need, p)):
            chosen.append(order[pos])
            if search(pos + 1, tuple(x - y for x, y in zip(need, p))):
                return True
            chosen.pop()
        if search(pos + 1, need):
            return True
        dead.add((pos, need))
        if len(dead) > max_states:
            raise BudgetExceeded(f"more than {max_states} explored states")
        return False

    if any(x < 0 for x in target) or not search(0, target):
        return None
    side = 0
    for idx in chosen:
        side |= comps[idx]
    return EdgeCut.from_masks(g.all_mask, side)


def exact_region_cuts(graph: ColoredGraph, region: int, sigma: int,
                      predicate: Callable[[int, int], bool] | None = None,
                      max_vertices: int = 20) -> Iterator[tuple[int, int]]:
    """All cuts of ``G[region] - E(G[sigma])`` as ``(a_mask, order)`` pairs.

    ``predicate(a_mask, order)`` filters the stream.  Cuts are produced in
    ascending order of the A-side restricted to ``region``'s vertex order.
    """
    verts = bits_list(region)
    if len(verts) > max_vertices:
        raise BudgetExceeded(f"region of {len(verts)} vertices exceeds budget {max_vertices}")
    sig = sigma & region
    edges = [(u, v) for u, v in graph.sorted_edges
             if (region >> u) & 1 and (region >> v) & 1 and not ((sig >> u) & 1 and (sig >> v) & 1)]
    for i in range(1 << len(verts)):
        a = 0
        for j, v in enumerate(verts):
            if (i >> j) & 1:
                a |= 1 << v
        order = sum(1 for u, v in edges if ((a >> u) & 1) != ((a >> v) & 1))
        if predicate is None or predicate(a, order):
            yield a, order


def min_order_profiles(graph: ColoredGraph, region: int, sigma: int, k: int,
                       max_vertices: int = 20) -> dict[tuple[int, tuple[int, ...], tuple[int, ...]], int]:
    """Reference semantics of the exact function behind an M-table.

    Maps ``(A ∩ sigma, profile(A \\ sigma), profile(B \\ sigma))`` to the minimum
    order over all cuts of ``G[region] - E(G[sigma])`` with order ≤ k.
    """
    out: dict[tuple[int, tuple[int, ...], tuple[int, ...]], int] = {}
    rest = region & ~sigma
    for a, order in exact_region_cuts(graph, region, sigma, lambda a, o: o <= k, max_vertices):
        key = (a & sigma, graph.profile_of_mask(a & rest), graph.profile_of_mask(rest & ~a))
        if key not in out or order < out[key]:
            out[key] = order
    return out


def cut_stats(graph: ColoredGraph, cut: EdgeCut) -> dict[str, object]:
    a = cut.a_mask
    return {
        "side_a": sorted(cut.side_a),
        "order": graph.edges_between(a, graph.all_mask & ~a),
        "profile_a": list(graph.profile_of_mask(a)),
        "profile_b": list(graph.profile_of_mask(graph.all_mask & ~a)),
    }


__all__ = [
    "OracleBudget",
    "exact_fair_bisection",
    "exact_fair_bisection_by_colors",
    "exact_zero_cut_fair_bisection",
    "exact_region_cuts",
    "min_order_profiles",
    "cut_stats",
]
