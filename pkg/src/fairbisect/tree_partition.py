"""Nice tree partitions of trees.

A tree partition of a tree ``T`` maps every vertex of ``T`` to a node
(*block*) of a rooted tree ``P`` such that the endpoints of every ``T``-edge
land in the same block or in adjacent blocks.  It is *nice* when

1. ``depth(P) ≤ ceil(log2 |V(T)|)``,
2. every block holds between 1 and 4 vertices of ``T``,
3. for every block ``t`` the vertices mapped into the subtree of ``P`` rooted
   at ``t`` induce a connected subtree of ``T``.

:func:`find_balanced_tp` builds one recursively: the block of the current
subtree is its marked vertices, a balanced bisector and (when the three do not
lie on one path) the vertex where their connecting paths meet; every remaining
component is recursed on with the block's neighbours inside it as new marks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .decomposition import log2_ceil
from .errors import DomainError, ParameterError

Tree = Mapping[int, Iterable[int]]
"""Undirected tree given as an adjacency mapping ``vertex -> neighbours``."""


def tree_from_parent(parent: Mapping[int, int | None]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in parent}
    for v, p in parent.items():
        if p is not None:
            adj[v].append(p)
            adj[p].append(v)
    return {v: sorted(nb) for v, nb in adj.items()}


def _normalise(tree: Tree) -> dict[int, tuple[int, ...]]:
    adj = {v: tuple(sorted(nb)) for v, nb in tree.items()}
    for v, nb in adj.items():
        for u in nb:
            if u not in adj or v not in adj[u]:
                raise DomainError(f"adjacency is not symmetric at edge ({v}, {u})")
    return adj


@dataclass(frozen=True)
class TreePartition:
    """Block tree ``P`` (parent map) plus the assignment ``tau: V(T) -> V(P)``."""

    parent: Mapping[int, int | None]
    assign: Mapping[int, int]
    root: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent", MappingProxyType(dict(self.parent)))
        object.__setattr__(self, "assign", MappingProxyType(dict(self.assign)))

    @property
    def block_ids(self) -> list[int]:
        return sorted(self.parent)

    def members(self, block: int) -> tuple[int, ...]:
        return self._members.get(block, ())

    @property
    def _members(self) -> dict[int, tuple[int, ...]]:
        cache = self.__dict__.get("_members_cache")
        if cache is None:
            acc: dict[int, list[int]] = {}
            for v, b in self.assign.items():
                acc.setdefault(b, []).append(v)
            cache = {b: tuple(sorted(vs)) for b, vs in acc.items()}
            self.__dict__["_members_cache"] = cache
        return cache

    def children(self, block: int) -> list[int]:
        return sorted(b for b, p in self.parent.items() if p == block)

    def block_depth(self) -> dict[int, int]:
        depth = {self.root: 0}
        stack = [self.root]
        kids: dict[int, list[int]] = {}
        for b, p in self.parent.items():
            if p is not None:
                kids.setdefault(p, []).append(b)
        while stack:
            b = stack.pop()
            for c in kids.get(b, []):
                depth[c] = depth[b] + 1
                stack.append(c)
        return depth

    @property
    def depth(self) -> int:
        return max(self.block_depth().values(), default=0)


def _largest_remaining_component(adj: Mapping[int, tuple[int, ...]], verts: set[int]) -> dict[int, int]:
    """For each vertex of the subtree ``verts``: size of the largest component left by removing it."""
    root = min(verts)
    order = []
    par = {root: None}
    stack = [root]
    while stack:
        x = stack.pop()
        order.append(x)
        for y in adj[x]:
            if y in verts and y not in par:
                par[y] = x
                stack.append(y)
    size = {x: 1 for x in order}
    for x in reversed(order):
        p = par[x]
        if p is not None:
            size[p] += size[x]
    total = len(order)
    out = {}
    for x in order:
        largest = total - size[x]
        for y in adj[x]:
            if y in verts and par.get(y) == x:
                largest = max(largest, size[y])
        out[x] = largest
    return out


def balanced_bisector(tree: Tree, vertices: Iterable[int] | None = None) -> int:
    """A centroid: the vertex minimising the largest component left by its
    removal (smallest id on ties).  Every such component has at most
    ``floor(|V|/2) ≤ ceil(|V|/2)`` vertices."""
    adj = _normalise(tree) if not isinstance(tree, _Frozen) else tree.adj
    verts = set(adj) if vertices is None else set(vertices)
    if not verts:
        raise DomainError("tree must be non-empty")
    largest = _largest_remaining_component(adj, verts)
    if len(largest) != len(verts):
        raise DomainError("vertex set does not induce a tree")
    best = min(sorted(verts), key=lambda v: largest[v])
    assert largest[best] <= len(verts) // 2
    return best


class _Frozen:
    """Pre-normalised adjacency, to avoid re-sorting during recursion."""

    def __init__(self, adj: dict[int, tuple[int, ...]]) -> None:
        self.adj = adj


def _path(adj: Mapping[int, tuple[int, ...]], verts: set[int], a: int, b: int) -> list[int]:
    prev = {a: a}
    stack = [a]
    while stack:
        x = stack.pop()
        if x == b:
            break
        for y in adj[x]:
            if y in verts and y not in prev:
                prev[y] = x
                stack.append(y)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def junction(tree: Tree, a: int, b: int, c: int, vertices: Iterable[int] | None = None) -> int:
    """The median of three tree vertices: the vertex on all three pairwise paths."""
    adj = _normalise(tree)
    verts = set(adj) if vertices is None else set(vertices)
    return _median(adj, verts, a, b, c)


def _median(adj: Mapping[int, tuple[int, ...]], verts: set[int], a: int, b: int, c: int) -> int:
    pab = _path(adj, verts, a, b)
    pac = _path(adj, verts, a, c)
    last = a
    for x, y in zip(pab, pac):
        if x != y:
            break
        last = x
    return last


def find_balanced_tp(tree: Tree, marked: Iterable[int]) -> TreePartition:
    """Nice tree partition of ``tree`` whose root block contains ``marked``."""
    adj = _normalise(tree)
    marks = sorted(set(marked))
    if not 1 <= len(marks) <= 2 or any(m not in adj for m in marks):
        raise ParameterError("marked set must hold one or two tree vertices")
    parent: dict[int, int | None] = {}
    assign: dict[int, int] = {}
    # iterative version of the recursion; each job is (vertex set, marks, parent block)
    jobs: list[tuple[set[int], list[int], int | None]] = [(set(adj), marks, None)]
    while jobs:
        verts, ms, par = jobs.pop(0)
        b = balanced_bisector(_Frozen(adj), verts)
        block = set(ms) | {b}
        if len(ms) == 2 and b not in ms:
            x = _median(adj, verts, ms[0], ms[1], b)
            block.add(x)
        bid = len(parent)
        parent[bid] = par
        for v in block:
            assign[v] = bid
        rest = verts - block
        seen: set[int] = set()
        comps: list[set[int]] = []
        for s in sorted(rest):
            if s in seen:
                continue
            comp = {s}
            stack = [s]
            seen.add(s)
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y in rest and y not in seen:
                        seen.add(y)
                        comp.add(y)
                        stack.append(y)
            comps.append(comp)
        for comp in comps:
            new_marks = sorted(y for x in block for y in adj[x] if y in comp)
            if len(new_marks) > 2:
                raise DomainError("internal error: more than two marks for a component")
            jobs.append((comp, new_marks, bid))
    return TreePartition(parent=parent, assign=assign, root=0)


@dataclass(frozen=True)
class PartitionReport:
    valid: bool
    depth: int
    max_block: int
    violations: tuple[str, ...] = ()
    notes: tuple[str, ...] = field(default=())


def validate_nice_partition(tree: Tree, tp: TreePartition) -> PartitionReport:
    """Check the three niceness properties plus the tree-partition edge condition."""
    adj = _normalise(tree)
    violations: list[str] = []
    notes: list[str] = []
    if set(tp.assign) != set(adj):
        violations.append("assignment does not cover exactly the tree vertices")
        return PartitionReport(False, 0, 0, tuple(violations))
    if set(tp.assign.values()) - set(tp.parent):
        violations.append("assignment uses unknown blocks")
        return PartitionReport(False, 0, 0, tuple(violations))
    depth_map = tp.block_depth()
    if set(depth_map) != set(tp.parent):
        violations.append("block tree is not connected to its root")
        return PartitionReport(False, 0, 0, tuple(violations))
    depth = max(depth_map.values(), default=0)
    bound = log2_ceil(len(adj))
    if depth > bound:
        violations.append(f"depth {depth} exceeds ceil(log2 {len(adj)}) = {bound}")
    sizes = {b: len(tp.members(b)) for b in tp.parent}
    max_block = max(sizes.values(), default=0)
    for b, s in sorted(sizes.items()):
        if s == 0:
            violations.append(f"block {b} is empty")
        elif s > 4:
            violations.append(f"block {b} holds {s} > 4 vertices")
        elif s == 1:
            notes.append(f"block {b} holds a single vertex")
    for x, nb in adj.items():
        for y in nb:
            if x < y:
                bx, by = tp.assign[x], tp.assign[y]
                if bx != by and tp.parent.get(bx) != by and tp.parent.get(by) != bx:
                    violations.append(f"edge ({x}, {y}) joins non-adjacent blocks {bx}, {by}")
    # subtree connectivity, bottom-up
    below: dict[int, set[int]] = {b: set(tp.members(b)) for b in tp.parent}
    for b in sorted(tp.parent, key=lambda t: -depth_map[t]):
        p = tp.parent[b]
        if p is not None:
            below[p] |= below[b]
    for b, vs in sorted(below.items()):
        if vs and not _connected(adj, vs):
            violations.append(f"vertices below block {b} do not induce a connected subtree")
    return PartitionReport(not violations, depth, max_block, tuple(violations), tuple(notes))


def _connected(adj: Mapping[int, tuple[int, ...]], vs: set[int]) -> bool:
    start = next(iter(vs))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y in vs and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(vs)
