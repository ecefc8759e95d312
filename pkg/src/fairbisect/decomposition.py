"""Rooted tree decompositions.

A :class:`TreeDecomposition` is a rooted tree (given by a parent map) whose
nodes carry bags.  For a node ``t``:

* the adhesion ``sigma(t)`` is ``bag(t) ∩ bag(parent(t))`` (empty at the root),
* the cone ``gamma(t)`` is the union of the bags in the subtree of ``t``,
* ``alpha(t) = gamma(t) - sigma(t)``,
* ``G_t`` is ``G[gamma(t)]`` with the edges inside ``sigma(t)`` removed.

The decomposition is *compact* when every non-root node with non-empty
``alpha(t)`` has ``G[alpha(t)]`` connected and ``N(alpha(t)) = sigma(t)``.

Depth is counted in edges; a single node has depth 0.

This module also certifies ``(q, s)``-unbreakability of vertex sets by
exhaustive enumeration (all bipartitions for small graphs, otherwise all edge
subsets of size ≤ s together with the component merges they allow).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Iterable, Mapping

import numpy as np

from ._bits import components, iter_bits, mask_of, neighborhood
from .errors import BudgetExceeded, DomainError, ParseError
from .graph_core import ColoredGraph, EdgeCut

BIPARTITION_LIMIT = 20
"""Largest vertex count for which unbreakability is checked over all bipartitions."""

DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted tree of bags.  ``parent[root]`` is ``None``."""

    parent: Mapping[int, int | None]
    bags: Mapping[int, frozenset[int]]
    root: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent", MappingProxyType(dict(self.parent)))
        object.__setattr__(self, "bags", MappingProxyType({t: frozenset(b) for t, b in self.bags.items()}))
        if set(self.parent) != set(self.bags):
            raise DomainError("parent map and bag map must have the same node set")
        if self.root not in self.bags or self.parent[self.root] is not None:
            raise DomainError("root must be a node without parent")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TreeDecomposition):
            return NotImplemented
        return (self.root == other.root and dict(self.parent) == dict(other.parent)
                and dict(self.bags) == dict(other.bags))

    def __hash__(self) -> int:
        return hash((self.root, frozenset(self.parent.items()), frozenset(self.bags.items())))

    @classmethod
    def single_bag(cls, vertices: Iterable[int]) -> "TreeDecomposition":
        return cls(parent={0: None}, bags={0: frozenset(vertices)}, root=0)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.bags)

    def __len__(self) -> int:
        return len(self.bags)

    @cached_property
    def children(self) -> Mapping[int, tuple[int, ...]]:
        ch: dict[int, list[int]] = {t: [] for t in self.bags}
        for t, p in self.parent.items():
            if p is not None:
                if p not in ch:
                    raise DomainError(f"node {t} has unknown parent {p}")
                ch[p].append(t)
        return MappingProxyType({t: tuple(sorted(c)) for t, c in ch.items()})

    @cached_property
    def preorder(self) -> tuple[int, ...]:
        """Nodes reachable from the root, parents before children."""
        out = []
        stack = [self.root]
        seen = set()
        while stack:
            t = stack.pop()
            if t in seen:
                raise DomainError("parent map contains a cycle")
            seen.add(t)
            out.append(t)
            stack.extend(reversed(self.children[t]))
        return tuple(out)

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        order: list[int] = []
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            t, done = stack.pop()
            if done:
                order.append(t)
                continue
            stack.append((t, True))
            for c in reversed(self.children[t]):
                stack.append((c, False))
        return tuple(order)

    @cached_property
    def node_depth(self) -> Mapping[int, int]:
        d = {self.root: 0}
        for t in self.preorder:
            for c in self.children[t]:
                d[c] = d[t] + 1
        return MappingProxyType(d)

    @property
    def depth(self) -> int:
        return max(self.node_depth.values(), default=0)

    @cached_property
    def bag_masks(self) -> Mapping[int, int]:
        return MappingProxyType({t: mask_of(b) for t, b in self.bags.items()})

    @cached_property
    def adhesion_masks(self) -> Mapping[int, int]:
        bm = self.bag_masks
        return MappingProxyType({t: 0 if p is None else bm[t] & bm[p] for t, p in self.parent.items()})

    @cached_property
    def cone_masks(self) -> Mapping[int, int]:
        bm = self.bag_masks
        out: dict[int, int] = {}
        for t in self.postorder:
            m = bm[t]
            for c in self.children[t]:
                m |= out[c]
            out[t] = m
        return MappingProxyType(out)

    @property
    def max_adhesion(self) -> int:
        return max((m.bit_count() for m in self.adhesion_masks.values()), default=0)

    @property
    def max_bag(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0)


def _check_node(td: TreeDecomposition, node: int) -> None:
    if node not in td.bags:
        raise DomainError(f"unknown decomposition node {node}")


def adhesion(td: TreeDecomposition, node: int) -> frozenset[int]:
    """sigma(t) = bag(t) ∩ bag(parent(t)); empty for the root."""
    _check_node(td, node)
    return frozenset(iter_bits(td.adhesion_masks[node]))


def cone(td: TreeDecomposition, node: int) -> frozenset[int]:
    """gamma(t): union of the bags of t and its descendants."""
    _check_node(td, node)
    return frozenset(iter_bits(td.cone_masks[node]))


def alpha(td: TreeDecomposition, node: int) -> frozenset[int]:
    """alpha(t) = gamma(t) - sigma(t)."""
    _check_node(td, node)
    return frozenset(iter_bits(td.cone_masks[node] & ~td.adhesion_masks[node]))


@dataclass(frozen=True)
class Subgraph:
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]


def subgraph_Gt(graph: ColoredGraph, td: TreeDecomposition, node: int) -> Subgraph:
    """G_t: the graph induced by gamma(t) minus the edges inside sigma(t)."""
    _check_node(td, node)
    g_mask = td.cone_masks[node]
    s_mask = td.adhesion_masks[node]
    edges = frozenset(
        (u, v) for u, v in graph.edges
        if (g_mask >> u) & 1 and (g_mask >> v) & 1 and not ((s_mask >> u) & 1 and (s_mask >> v) & 1)
    )
    return Subgraph(frozenset(iter_bits(g_mask)), edges)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class DecompositionReport:
    valid: bool
    max_adhesion: int
    depth: int
    compact: bool
    violations: tuple[str, ...] = ()
    compactness_findings: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, Any]:
        return {
            "valid": self.valid,
            "max_adhesion": self.max_adhesion,
            "depth": self.depth,
            "compact": self.compact,
            "violations": list(self.violations),
            "compactness_findings": list(self.compactness_findings),
        }


def validate(graph: ColoredGraph, td: TreeDecomposition) -> DecompositionReport:
    """Check the axioms T1-T3 and report adhesion, depth and compactness."""
    violations: list[str] = []
    try:
        reachable = set(td.preorder)
    except DomainError as exc:
        return DecompositionReport(False, 0, 0, False, (f"tree structure: {exc}",))
    unreachable = set(td.bags) - reachable
    if unreachable:
        violations.append(f"tree structure: nodes not below the root: {sorted(unreachable)[:10]}")
        return DecompositionReport(False, 0, 0, False, tuple(violations))

    bm = td.bag_masks
    full = graph.all_mask
    for t in td.nodes:
        stray = bm[t] & ~full
        if stray:
            violations.append(f"node {t}: bag contains non-vertices {list(iter_bits(stray))[:5]}")
    covered = 0
    for m in bm.values():
        covered |= m
    missing = full & ~covered
    if missing:
        violations.append(f"T1: vertices in no bag: {list(iter_bits(missing))[:10]}")
    for u, v in graph.sorted_edges:
        pair = (1 << u) | (1 << v)
        if not any(m & pair == pair for m in bm.values()):
            violations.append(f"T2: edge ({u}, {v}) is in no bag")
    # T3: the nodes containing v form a subtree iff exactly one of them has a
    # parent not containing v.
    for v in graph.vertices:
        bit = 1 << v
        tops = [t for t in td.nodes if bm[t] & bit and (td.parent[t] is None or not bm[td.parent[t]] & bit)]
        if len(tops) > 1:
            violations.append(f"T3: nodes containing vertex {v} are disconnected (tops {tops[:5]})")

    compact_findings: list[str] = []
    adj = list(graph.adj)
    for t in td.nodes:
        if t == td.root:
            continue
        a_mask = td.cone_masks[t] & ~td.adhesion_masks[t]
        if not a_mask:
            continue
        if len(components(a_mask, adj)) != 1:
            compact_findings.append(f"node {t}: G[alpha] is disconnected")
        if neighborhood(a_mask, adj) != td.adhesion_masks[t]:
            compact_findings.append(f"node {t}: N(alpha) differs from the adhesion")
    return DecompositionReport(
        valid=not violations,
        max_adhesion=td.max_adhesion,
        depth=td.depth,
        compact=not compact_findings,
        violations=tuple(violations),
        compactness_findings=tuple(compact_findings),
    )


# ---------------------------------------------------------------------------
# unbreakability


@dataclass(frozen=True)
class UnbreakabilityVerdict:
    """Outcome of an unbreakability check; truthy iff the set is unbreakable."""

    unbreakable: bool
    witness: EdgeCut | None = None

    def __bool__(self) -> bool:
        return self.unbreakable


def _edge_arrays(graph: ColoredGraph) -> tuple[np.ndarray, np.ndarray]:
    us = np.array([u for u, _ in graph.sorted_edges], dtype=np.uint64)
    vs = np.array([v for _, v in graph.sorted_edges], dtype=np.uint64)
    return us, vs


def low_order_cut_masks(graph: ColoredGraph, s: int, vertex_mask: int | None = None,
                        budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """A-side masks of every cut of ``G[vertex_mask]`` of order ≤ s.

    Each unordered cut appears once, with the highest vertex of ``vertex_mask``
    on the B side.  Uses all bipartitions when the vertex set is small,
    otherwise edge subsets of size ≤ s.
    """
    if vertex_mask is None:
        vertex_mask = graph.all_mask
    verts = list(iter_bits(vertex_mask))
    if not verts:
        return np.zeros(1, dtype=np.uint64)  # the empty cut
    if graph.n > 63:
        raise BudgetExceeded("vectorised cut catalogue supports at most 63 vertices")
    edges = [(u, v) for u, v in graph.sorted_edges if (vertex_mask >> u) & 1 and (vertex_mask >> v) & 1]
    if len(verts) <= BIPARTITION_LIMIT:
        total = 1 << (len(verts) - 1)
        if total > budget:
            raise BudgetExceeded(f"{total} bipartitions exceed budget {budget}")
        local = np.arange(total, dtype=np.uint64)
        pos = {v: i for i, v in enumerate(verts)}
        one = np.uint64(1)
        order = np.zeros(total, dtype=np.int64)
        for u, v in edges:
            order += (((local >> np.uint64(pos[u])) ^ (local >> np.uint64(pos[v]))) & one).astype(np.int64)
        local = local[order <= s]
        glob = np.zeros(local.shape, dtype=np.uint64)
        for i, v in enumerate(verts):
            glob |= ((local >> np.uint64(i)) & one) << np.uint64(v)
        return glob
    # edge-subset route
    top = 1 << verts[-1]
    adj = [0] * graph.n
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    found: set[int] = set()
    examined = 0
    for size in range(0, s + 1):
        for removed in itertools.combinations(range(len(edges)), size):
            examined += 1
            if examined > budget:
                raise BudgetExceeded(f"more than {budget} edge subsets")
            adj2 = list(adj)
            for i in removed:
                u, v = edges[i]
                adj2[u] &= ~(1 << v)
                adj2[v] &= ~(1 << u)
            comps = components(vertex_mask, adj2)
            if len(comps) > 24:
                raise BudgetExceeded("too many components to enumerate component merges")
            for pick in range(1 << len(comps)):
                a = 0
                for j, cm in enumerate(comps):
                    if (pick >> j) & 1:
                        a |= cm
                if a & top:
                    continue
                found.add(a)
    arr = np.array(sorted(found), dtype=np.uint64)
    # keep only genuine order ≤ s (merges never exceed |removed|, but be exact)
    us = np.array([u for u, _ in edges], dtype=np.uint64)
    vs = np.array([v for _, v in edges], dtype=np.uint64)
    order = np.zeros(arr.shape, dtype=np.int64)
    one = np.uint64(1)
    for u, v in zip(us, vs):
        order += (((arr >> u) ^ (arr >> v)) & one).astype(np.int64)
    return arr[order <= s]


class CutCatalogue:
    """All low-order cuts of a graph, for repeated unbreakability queries."""

    def __init__(self, graph: ColoredGraph, s: int, vertex_mask: int | None = None,
                 budget: int = DEFAULT_BUDGET) -> None:
        self.graph = graph
        self.s = s
        self.vertex_mask = graph.all_mask if vertex_mask is None else vertex_mask
        self.masks = low_order_cut_masks(graph, s, self.vertex_mask, budget)

    def breaking_cut(self, x_mask: int, q: int) -> int | None:
        """A-side mask of a cut with more than q vertices of X on each side."""
        x_mask &= self.vertex_mask
        size = x_mask.bit_count()
        if size <= 2 * q + 1 or self.masks.size == 0:
            return None
        xa = np.bitwise_count(self.masks & np.uint64(x_mask)).astype(np.int64)
        hit = np.nonzero((xa > q) & (size - xa > q))[0]
        if hit.size == 0:
            return None
        return int(self.masks[hit[0]])

    def is_unbreakable(self, x_mask: int, q: int) -> bool:
        return self.breaking_cut(x_mask, q) is None


def _unbreakable_bipartitions(graph: ColoredGraph, x_mask: int, q: int, s: int,
                              budget: int) -> int | None:
    n = graph.n
    total = 1 << (n - 1)
    if total > budget:
        raise BudgetExceeded(f"{total} bipartitions exceed budget {budget}")
    us, vs = _edge_arrays(graph)
    one = np.uint64(1)
    xm = np.uint64(x_mask)
    size = x_mask.bit_count()
    chunk = 1 << 16
    for start in range(0, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.uint64)
        xa = np.bitwise_count(masks & xm).astype(np.int64)
        ok = (xa > q) & (size - xa > q)
        if not ok.any():
            continue
        cand = masks[ok]
        order = np.zeros(cand.shape, dtype=np.int64)
        for u, v in zip(us, vs):
            order += (((cand >> u) ^ (cand >> v)) & one).astype(np.int64)
        hit = np.nonzero(order <= s)[0]
        if hit.size:
            return int(cand[hit[0]])
    return None


def _unbreakable_edge_subsets(graph: ColoredGraph, x_mask: int, q: int, s: int,
                              budget: int) -> int | None:
    edges = list(graph.sorted_edges)
    adj = list(graph.adj)
    size = x_mask.bit_count()
    examined = 0
    for k in range(0, s + 1):
        for removed in itertools.combinations(range(len(edges)), k):
            examined += 1
            if examined > budget:
                raise BudgetExceeded(f"more than {budget} edge subsets")
            adj2 = list(adj)
            for i in removed:
                u, v = edges[i]
                adj2[u] &= ~(1 << v)
                adj2[v] &= ~(1 << u)
            comps = components(graph.all_mask, adj2)
            # subset sum over the X-counts of the components
            reach: dict[int, int] = {0: 0}
            for cm in comps:
                cnt = (cm & x_mask).bit_count()
                if cnt == 0:
                    continue
                for tot, side in list(reach.items()):
                    if tot + cnt not in reach:
                        reach[tot + cnt] = side | cm
            for tot, side in reach.items():
                if q < tot < size - q:
                    return side
    return None


def is_unbreakable(graph: ColoredGraph, bag: Iterable[int] | int, q: int, s: int,
                   budget: int = DEFAULT_BUDGET, method: str = "auto") -> UnbreakabilityVerdict:
    """Is every cut of G of order ≤ s leaving ≤ q vertices of ``bag`` on some side?

    ``method`` is ``"auto"``, ``"bipartitions"`` or ``"edge-subsets"``.
    """
    if q < 0 or s < 0:
        raise DomainError("q and s must be non-negative")
    x_mask = bag if isinstance(bag, int) else mask_of(bag)
    if x_mask & ~graph.all_mask:
        raise DomainError("bag contains vertices outside the graph")
    if x_mask.bit_count() <= 2 * q + 1:
        return UnbreakabilityVerdict(True)
    if method == "auto":
        method = "bipartitions" if graph.n <= BIPARTITION_LIMIT else "edge-subsets"
    if method == "bipartitions":
        side = _unbreakable_bipartitions(graph, x_mask, q, s, budget)
    elif method == "edge-subsets":
        side = _unbreakable_edge_subsets(graph, x_mask, q, s, budget)
    else:
        raise DomainError(f"unknown method {method!r}")
    if side is None:
        return UnbreakabilityVerdict(True)
    return UnbreakabilityVerdict(False, EdgeCut.from_masks(graph.all_mask, side))


# ---------------------------------------------------------------------------
# compactification and light restructuring


def _renumber(parent: dict[int, int | None], bags: dict[int, int], root: int) -> TreeDecomposition:
    children: dict[int, list[int]] = {t: [] for t in parent}
    for t, p in parent.items():
        if p is not None:
            children[p].append(t)
    new_id: dict[int, int] = {}
    stack = [root]
    while stack:
        t = stack.pop()
        new_id[t] = len(new_id)
        stack.extend(sorted(children[t], reverse=True))
    return TreeDecomposition(
        parent={new_id[t]: (None if p is None else new_id[p]) for t, p in parent.items() if t in new_id},
        bags={new_id[t]: frozenset(iter_bits(m)) for t, m in bags.items() if t in new_id},
        root=0,
    )


def compactify(graph: ColoredGraph, td: TreeDecomposition) -> TreeDecomposition:
    """Compact decomposition whose bags are subsets of input bags.

    Works top-down on pairs ``(t, U)`` with ``U`` connected and ``N(U) ⊆ bag(t)``:
    the new node gets bag ``(bag(t) ∩ U) ∪ N(U)``, and each component of
    ``U ∩ alpha(c)`` for a child ``c`` is handled below ``c``.  When
    ``bag(t) ∩ U`` is empty the pair is pushed into the unique child whose
    alpha contains ``U``, which never increases depth.  Components of a
    disconnected graph hang below the first component's root with an empty
    adhesion.
    """
    adj = list(graph.adj)
    bm = td.bag_masks
    sigma = td.adhesion_masks
    cones = td.cone_masks
    children = td.children
    parent: dict[int, int | None] = {}
    bags: dict[int, int] = {}
    counter = itertools.count()

    def make(t: int, u: int, par: int | None) -> int:
        nb = neighborhood(u, adj)
        while not bm[t] & u:
            nxt = [c for c in children[t] if cones[c] & ~sigma[c] & u]
            if len(nxt) != 1:
                raise DomainError("input is not a valid tree decomposition")
            t = nxt[0]
        me = next(counter)
        parent[me] = par
        bags[me] = (bm[t] & u) | nb
        stack.append((t, u, me))
        return me

    stack: list[tuple[int, int, int]] = []
    comps = components(graph.all_mask, adj)
    if not comps:
        return TreeDecomposition.single_bag(())
    root = make(td.root, comps[0], None)
    for comp in comps[1:]:
        make(td.root, comp, root)
    while stack:
        t, u, me = stack.pop()
        for c in children[t]:
            part = u & cones[c] & ~sigma[c]
            for comp in components(part, adj):
                make(c, comp, me)
    return _renumber(parent, bags, root)


def contract_nested_bags(td: TreeDecomposition) -> TreeDecomposition:
    """Contract tree edges whose child bag is contained in the parent bag.

    Bags never grow and adhesions of re-attached children are unchanged
    (by T3), so validity, adhesion sizes and bag unbreakability are preserved
    while depth can only drop.
    """
    parent = dict(td.parent)
    bags = dict(td.bag_masks)
    changed = True
    while changed:
        changed = False
        for t in sorted(parent):
            p = parent.get(t)
            if p is None or t not in bags:
                continue
            if bags[t] & ~bags[p] == 0:
                for c, pc in list(parent.items()):
                    if pc == t:
                        parent[c] = p
                del parent[t]
                del bags[t]
                changed = True
    return _renumber(parent, bags, td.root)


# ---------------------------------------------------------------------------
# interchange document


def to_document(td: TreeDecomposition) -> dict[str, Any]:
    return {
        "root": td.root,
        "nodes": [{"id": t, "parent": td.parent[t], "bag": sorted(td.bags[t])} for t in td.nodes],
    }


def from_document(doc: Mapping[str, Any]) -> TreeDecomposition:
    try:
        nodes = doc["nodes"]
        parent = {int(nd["id"]): (None if nd["parent"] is None else int(nd["parent"])) for nd in nodes}
        bags = {int(nd["id"]): frozenset(int(v) for v in nd["bag"]) for nd in nodes}
        roots = [t for t, p in parent.items() if p is None]
        root = int(doc["root"]) if "root" in doc else (roots[0] if len(roots) == 1 else None)
        if root is None:
            raise ParseError("decomposition document must have exactly one root")
        if len(nodes) != len(parent):
            raise ParseError("duplicate node ids in decomposition document")
        return TreeDecomposition(parent=parent, bags=bags, root=root)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed decomposition document: {exc}") from None


def dumps(td: TreeDecomposition) -> str:
    return json.dumps(to_document(td), indent=1)


def loads(text: str) -> TreeDecomposition:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return from_document(doc)


def log2_ceil(n: int) -> int:
    """Exact integer ceil(log2 n) for n ≥ 1 (0 for n ≤ 1)."""
    return 0 if n <= 1 else (n - 1).bit_length()
