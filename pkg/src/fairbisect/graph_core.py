"""Graphs, Fair Bisection instances, edge cuts and fairness predicates.

Vertices are dense integer ids ``0..n-1`` and colours are ``1..c``.  All
objects are immutable; sets are exposed as ``frozenset`` while the hot paths
of the solver use the integer bitmasks cached on :class:`ColoredGraph`.

Instance text format (``#`` starts a comment)::

    p fairbis <n> <m> <c> <k>
    v <id> <color>            one line per vertex
    e <u> <v>                 one line per edge
    r <r_1> ... <r_c>         target number of A-side vertices per colour
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from ._bits import iter_bits, mask_of
from .errors import DomainError, ParameterError, ParseError

ColorProfile = tuple[int, ...]
"""``counts[i-1]`` is the number of vertices of colour ``i`` in a vertex set."""


@dataclass(frozen=True)
class ColoredGraph:
    """Undirected simple graph whose vertices each carry one colour in ``1..c``."""

    n: int
    edges: frozenset[tuple[int, int]]
    colors: tuple[int, ...]
    c: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise DomainError("vertex count must be non-negative")
        if self.c < 1:
            raise DomainError("there must be at least one colour")
        if len(self.colors) != self.n:
            raise DomainError(f"expected {self.n} colours, got {len(self.colors)}")
        for v, col in enumerate(self.colors):
            if not 1 <= col <= self.c:
                raise DomainError(f"vertex {v} has colour {col} outside 1..{self.c}")
        for u, v in self.edges:
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise DomainError(f"edge ({u}, {v}) is not a normalised pair of vertices")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   colors: Iterable[int] | None = None, c: int | None = None) -> "ColoredGraph":
        """Build a graph, normalising edge orientation and rejecting duplicates."""
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise DomainError(f"duplicate edge {e}")
            seen.add(e)
        cols = tuple(colors) if colors is not None else (1,) * n
        if c is None:
            c = max(cols, default=1)
        return cls(n=n, edges=frozenset(seen), colors=cols, c=c)

    @property
    def vertices(self) -> range:
        return range(self.n)

    @property
    def m(self) -> int:
        return len(self.edges)

    def color(self, v: int) -> int:
        return self.colors[v]

    @cached_property
    def sorted_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def adj(self) -> tuple[int, ...]:
        """Neighbourhood bitmask per vertex."""
        adj = [0] * self.n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return tuple(adj)

    @cached_property
    def color_masks(self) -> tuple[int, ...]:
        """Bitmask of the vertices of colour ``i`` at index ``i-1``."""
        masks = [0] * self.c
        for v, col in enumerate(self.colors):
            masks[col - 1] |= 1 << v
        return tuple(masks)

    @cached_property
    def all_mask(self) -> int:
        return (1 << self.n) - 1

    def profile_of_mask(self, mask: int) -> ColorProfile:
        return tuple((mask & cm).bit_count() for cm in self.color_masks)

    def edges_between(self, a: int, b: int) -> int:
        """Number of edges with one endpoint in mask ``a`` and one in mask ``b``
        (the masks are assumed disjoint)."""
        small, other = (a, b) if a.bit_count() <= b.bit_count() else (b, a)
        return sum((self.adj[v] & other).bit_count() for v in iter_bits(small))

    def edges_inside(self, mask: int) -> int:
        return sum((self.adj[v] & mask).bit_count() for v in iter_bits(mask)) // 2


@dataclass(frozen=True)
class FairInstance:
    """One Fair Bisection problem: graph, cut budget ``k`` and target ``r``."""

    graph: ColoredGraph
    k: int
    r_target: ColorProfile
    c_total: ColorProfile = field(init=False)

    def __post_init__(self) -> None:
        g = self.graph
        if self.k < 0:
            raise DomainError("k must be non-negative")
        if len(self.r_target) != g.c:
            raise DomainError(f"target has {len(self.r_target)} entries, expected {g.c}")
        totals = g.profile_of_mask(g.all_mask)
        object.__setattr__(self, "c_total", totals)
        for i, (r, tot) in enumerate(zip(self.r_target, totals), start=1):
            if not 0 <= r <= tot:
                raise DomainError(f"target r_{i}={r} outside 0..{tot}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def c(self) -> int:
        return self.graph.c


@dataclass(frozen=True)
class EdgeCut:
    """A bipartition ``(A, B)`` of ``ground_set``; ``B`` is the complement of ``A``."""

    ground_set: frozenset[int]
    side_a: frozenset[int]

    def __post_init__(self) -> None:
        if not self.side_a <= self.ground_set:
            raise DomainError("side A must be a subset of the ground set")

    @property
    def side_b(self) -> frozenset[int]:
        return self.ground_set - self.side_a

    @classmethod
    def of(cls, ground: Iterable[int], side_a: Iterable[int]) -> "EdgeCut":
        return cls(frozenset(ground), frozenset(side_a))

    @classmethod
    def from_masks(cls, ground_mask: int, a_mask: int) -> "EdgeCut":
        return cls(frozenset(iter_bits(ground_mask)), frozenset(iter_bits(a_mask & ground_mask)))

    @property
    def a_mask(self) -> int:
        return mask_of(self.side_a)

    @property
    def ground_mask(self) -> int:
        return mask_of(self.ground_set)

    def swapped(self) -> "EdgeCut":
        return EdgeCut(self.ground_set, self.side_b)


def _check_members(graph: ColoredGraph, vertices: Iterable[int]) -> None:
    for v in vertices:
        if not 0 <= v < graph.n:
            raise DomainError(f"vertex {v} is not in the graph")


def cut_order(graph: ColoredGraph, cut: EdgeCut) -> int:
    """Number of edges with one endpoint in each side of ``cut``."""
    _check_members(graph, cut.ground_set)
    return graph.edges_between(cut.a_mask, mask_of(cut.side_b))


def color_profile(graph: ColoredGraph, subset: Iterable[int]) -> ColorProfile:
    subset = list(subset)
    _check_members(graph, subset)
    return graph.profile_of_mask(mask_of(subset))


def _spans(inst: FairInstance, cut: EdgeCut) -> bool:
    return cut.ground_set == frozenset(inst.graph.vertices)


def is_exact_fair(inst: FairInstance, cut: EdgeCut) -> bool:
    """``A`` holds exactly ``r_i`` vertices of every colour and order ≤ k."""
    if not _spans(inst, cut):
        return False
    g = inst.graph
    return (g.profile_of_mask(cut.a_mask) == tuple(inst.r_target)
            and cut_order(g, cut) <= inst.k)


def is_eps_fair(inst: FairInstance, cut: EdgeCut, eps: float) -> bool:
    """The (ε, r)-fairness test: both sides within a (1+ε) factor of their targets."""
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if not _spans(inst, cut):
        return False
    g = inst.graph
    a = g.profile_of_mask(cut.a_mask)
    b = tuple(t - x for t, x in zip(inst.c_total, a))
    for ai, bi, ri, ci in zip(a, b, inst.r_target, inst.c_total):
        if ai > ri * (1 + eps) or bi > (ci - ri) * (1 + eps):
            return False
    return cut_order(g, cut) <= inst.k


# ---------------------------------------------------------------------------
# text format


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {lineno}: expected integers, got {' '.join(tokens)!r}") from None


def parse_instance(text: str) -> FairInstance:
    """Parse the line-oriented instance format (see module docstring)."""
    header: list[int] | None = None
    colors: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    seen_edges: set[tuple[int, int]] = set()
    target: list[int] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "p":
            if header is not None:
                raise ParseError(f"line {lineno}: second header line")
            if not rest or rest[0] != "fairbis" or len(rest) != 5:
                raise ParseError(f"line {lineno}: header must be 'p fairbis n m c k'")
            header = _ints(rest[1:], lineno)
            if min(header) < 0 or header[2] < 1:
                raise ParseError(f"line {lineno}: header values out of range")
            continue
        if header is None:
            raise ParseError(f"line {lineno}: data before the 'p' header")
        n, _m, c, _k = header
        vals = _ints(rest, lineno)
        if tag == "v":
            if len(vals) != 2:
                raise ParseError(f"line {lineno}: vertex line must be 'v id color'")
            v, col = vals
            if not 0 <= v < n:
                raise ParseError(f"line {lineno}: vertex id {v} outside 0..{n - 1}")
            if not 1 <= col <= c:
                raise ParseError(f"line {lineno}: colour {col} outside 1..{c}")
            if v in colors:
                raise ParseError(f"line {lineno}: vertex {v} declared twice")
            colors[v] = col
        elif tag == "e":
            if len(vals) != 2:
                raise ParseError(f"line {lineno}: edge line must be 'e u v'")
            u, v = vals
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"line {lineno}: edge endpoint outside 0..{n - 1}")
            if u == v:
                raise ParseError(f"line {lineno}: self-loop at {u}")
            e = (min(u, v), max(u, v))
            if e in seen_edges:
                raise ParseError(f"line {lineno}: duplicate edge {e}")
            seen_edges.add(e)
            edges.append(e)
        elif tag == "r":
            if target is not None:
                raise ParseError(f"line {lineno}: second target line")
            if len(vals) != c:
                raise ParseError(f"line {lineno}: target needs {c} entries")
            target = vals
        else:
            raise ParseError(f"line {lineno}: unknown line type {tag!r}")
    if header is None:
        raise ParseError("missing 'p fairbis' header")
    n, m, c, k = header
    if target is None:
        raise ParseError("missing 'r' target line")
    if len(colors) != n:
        missing = sorted(set(range(n)) - set(colors))
        raise ParseError(f"vertices without a 'v' line: {missing[:10]}")
    if len(edges) != m:
        raise ParseError(f"header announces {m} edges, found {len(edges)}")
    try:
        graph = ColoredGraph(n=n, edges=frozenset(edges),
                             colors=tuple(colors[v] for v in range(n)), c=c)
        return FairInstance(graph=graph, k=k, r_target=tuple(target))
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def format_instance(inst: FairInstance) -> str:
    g = inst.graph
    lines = [f"p fairbis {g.n} {g.m} {g.c} {inst.k}"]
    lines += [f"v {v} {col}" for v, col in enumerate(g.colors)]
    lines += [f"e {u} {v}" for u, v in g.sorted_edges]
    lines.append("r " + " ".join(str(r) for r in inst.r_target))
    return "\n".join(lines) + "\n"
