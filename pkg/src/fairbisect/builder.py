"""Desk-scale construction of compact decompositions with unbreakable bags.

Output contract: a compact tree decomposition in which every adhesion has at
most ``k`` vertices and every bag is ``(q, k)``-unbreakable in ``G``.

The construction works on pairs ``(C, S)`` where ``C`` is a connected vertex
set and ``S = N(C)`` has at most ``k`` vertices.  It picks a root bag ``R``
with ``S ⊆ R ⊆ C ∪ S`` and recurses on the components of ``G[C - R]``:

* start from ``R = C ∪ S``;
* while some cut of order ≤ k leaves more than ``q`` vertices of ``R`` on both
  sides, *peel* one side ``Y`` of such a cut: drop from ``R`` every vertex of
  ``Y`` that is neither in ``S`` nor incident to a cut edge.  A peel is
  accepted only if every component of ``G[C - R]`` afterwards still has at
  most ``k`` neighbours;
* if no (cut, side) pair admits a peel the builder backtracks, and fails
  explicitly once all options are exhausted.

All cuts of order ≤ k of ``G[C]`` are enumerated once per component
(:class:`~fairbisect.decomposition.CutCatalogue`); a cut of ``G`` restricted
to a component never has larger order, so this certifies unbreakability in
``G`` as well.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ._bits import components, iter_bits, neighborhood
from .decomposition import DEFAULT_BUDGET, CutCatalogue, TreeDecomposition, _renumber
from .errors import BudgetExceeded, BuilderFailure, ParameterError
from .graph_core import ColoredGraph, EdgeCut

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuilderConfig:
    k: int
    q: int | None = None
    enumeration_budget: int = DEFAULT_BUDGET
    max_backtrack: int = 10_000

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ParameterError("k must be non-negative")
        if self.q is None:
            object.__setattr__(self, "q", self.k + 1)
        if self.q < 1:  # type: ignore[operator]
            raise ParameterError("q must be at least 1")


def find_breaking_cut(graph: ColoredGraph, bag: int | frozenset[int] | set[int], q: int, k: int,
                      budget: int = DEFAULT_BUDGET) -> EdgeCut | None:
    """A cut of order ≤ k with more than q bag vertices on each side, or None."""
    from .decomposition import is_unbreakable

    verdict = is_unbreakable(graph, bag, q, k, budget=budget)
    return verdict.witness


class _ComponentBuilder:
    def __init__(self, graph: ColoredGraph, comp: int, k: int, q: int, budget: int, max_backtrack: int):
        self.graph = graph
        self.adj = list(graph.adj)
        self.k = k
        self.q = q
        self.cat = CutCatalogue(graph, k, comp, budget)
        self.cuts = [int(m) for m in self.cat.masks]
        self.comp = comp
        self.steps = 0
        self.max_backtrack = max_backtrack

    def boundary(self, side: int) -> int:
        """Vertices of ``side`` (within the component) with a neighbour outside it."""
        other = self.comp & ~side
        out = 0
        for v in iter_bits(side):
            if self.adj[v] & other:
                out |= 1 << v
        return out

    def choose_root(self, c_mask: int, s_mask: int) -> int:
        """Root bag R for the pair (C, S)."""
        result = self._search(c_mask, s_mask, c_mask | s_mask)
        if result is None:
            raise BuilderFailure(
                f"no admissible unbreakable root bag for a part of {c_mask.bit_count()} vertices "
                f"with interface of size {s_mask.bit_count()} (k={self.k}, q={self.q})")
        return result

    def _search(self, c_mask: int, s_mask: int, r_mask: int) -> int | None:
        self.steps += 1
        if self.steps > self.max_backtrack:
            raise BudgetExceeded("builder backtracking budget exhausted")
        options = []
        for cut in self.cuts:
            a = cut & r_mask
            na = a.bit_count()
            nb = r_mask.bit_count() - na
            if na <= self.q or nb <= self.q:
                continue
            for side in (cut, self.comp & ~cut):
                peel = side & r_mask & c_mask & ~s_mask & ~self.boundary(side)
                if not peel:
                    continue
                new_r = r_mask & ~peel
                if not new_r & c_mask:
                    continue
                if all(neighborhood(q_, self.adj).bit_count() <= self.k
                       for q_ in components(c_mask & ~new_r, self.adj)):
                    options.append(new_r)
        if not options and self.cat.is_unbreakable(r_mask, self.q):
            return r_mask
        seen = set()
        # prefer the largest remaining bag
        for new_r in sorted(options, key=lambda m: (-m.bit_count(), m)):
            if new_r in seen:
                continue
            seen.add(new_r)
            res = self._search(c_mask, s_mask, new_r)
            if res is not None:
                return res
        return None


def build_unbreakable_decomposition(graph: ColoredGraph, config: BuilderConfig) -> TreeDecomposition:
    """Compact decomposition with adhesions ≤ k and (q, k)-unbreakable bags."""
    k, q = config.k, config.q
    assert q is not None
    adj = list(graph.adj)
    comps = components(graph.all_mask, adj)
    if not comps:
        return TreeDecomposition.single_bag(())
    parent: dict[int, int | None] = {}
    bags: dict[int, int] = {}
    counter = 0
    root_id: int | None = None
    for comp in comps:
        cb = _ComponentBuilder(graph, comp, k, q, config.enumeration_budget, config.max_backtrack)
        jobs: list[tuple[int, int, int | None]] = [(comp, 0, root_id)]
        while jobs:
            c_mask, s_mask, par = jobs.pop()
            r_mask = cb.choose_root(c_mask, s_mask)
            me = counter
            counter += 1
            parent[me] = par
            bags[me] = r_mask
            if root_id is None:
                root_id = me
            for sub in reversed(components(c_mask & ~r_mask, adj)):
                jobs.append((sub, neighborhood(sub, adj), me))
        log.debug("component with %d vertices decomposed", comp.bit_count())
    assert root_id is not None
    return _renumber(parent, bags, root_id)
