"""Rounded dynamic program for (ε, r°)-fair cuts over an unbreakable decomposition.

Tables
------
Every table maps a key ``(A_t, a°, b°)`` to an :class:`Entry` holding a cut of
the table's *designated subgraph* (its A-side mask), the cut's order and its
true colour profiles.  ``A_t`` is the A-side restricted to ``σ(t)``; ``a°``
and ``b°`` are profiles rounded *down* into the domain ``D``, so a key never
overstates the cut it stores.  A key keeps the cut of minimum order, so the
boolean ``M(w, A_t, a°, b°)`` of a budget ``w`` is "the entry exists and its
order is ≤ w".  Absence is ⊥.

For a decomposition node ``t`` (``σ`` its adhesion, ``β`` its bag):

* ``M_t`` — cuts of ``G[cone(t)] − E(G[σ(t)])``, profiles over ``cone(t) − σ(t)``;
* ``M^X_t`` — the same, restricted to cuts refined by ``H_t − X`` (``X`` and
  each component ``P_ℓ`` of the torso minus ``X`` are monochromatic);
* ``N(ℓ)``/``N≤(ℓ)`` — per component / per subtree of the balanced tree over
  components, with flag ``x_A`` (side of ``X``);
* ``H(m)`` — per subtree of the balanced tree over the child adhesions of a
  component, with flags ``x_A`` and ``x_ℓ`` (side of ``P_ℓ``).

Merging
-------
Each node of a balanced tree owns one term (for ``H``: the fixed assignment of
``X ∪ P_ℓ`` plus, for ``m ≥ 1``, one entry of the child table ``M_{t'_m}``;
for ``N≤``: one entry of ``N(ℓ)``) and combines it with one entry per child.
Child subtrees repeat the shared part (``X``, and for ``H`` also ``P_ℓ`` and
the ``X``–``P_ℓ`` edges), which is subtracted once per child.  Sums are kept
exact while merging one node and rounded down once when the node's table is
stored, so the rounding error grows with the depth of the balanced trees,
not with the number of children.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Protocol, Sequence

from ._bits import components, iter_bits
from .builder import BuilderConfig, build_unbreakable_decomposition
from .decomposition import TreeDecomposition
from .depth_reduction import reduce_depth
from .errors import BuilderFailure, ContractError, ParameterError
from .graph_core import ColoredGraph, EdgeCut, FairInstance, color_profile, cut_order
from .splitters import build_covering_family

log = logging.getLogger(__name__)

Z_CONSTANT = 10
Profile = tuple[int, ...]

# ---------------------------------------------------------------------------
# rounding domain


def _log2n(n: int) -> Fraction:
    return Fraction(max(math.log2(n), 1.0)) if n >= 1 else Fraction(1)


def delta_for(eps: float | Fraction, n: int, z: int = Z_CONSTANT) -> Fraction:
    """δ = ε / (2 z log³ n), with log n clamped below at 1."""
    if eps <= 0:
        raise ParameterError("eps must be positive")
    lg = _log2n(n)
    return Fraction(eps) / (2 * z * lg ** 3)


def _pow_dec(base: Decimal, i: int) -> Decimal:
    return base ** i


@dataclass(frozen=True)
class RoundingDomain:
    """``D = {0} ∪ {⌊(1+δ)^i⌋ : i ≥ 0}`` truncated at ``max_value``."""

    delta: Fraction
    max_value: int
    values: tuple[int, ...]
    _down: tuple[int, ...] = field(repr=False, compare=False, default=())
    _up: tuple[int, ...] = field(repr=False, compare=False, default=())

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, v: object) -> bool:
        return v in set(self.values)

    def round_down(self, v: int) -> int:
        if v < 0:
            raise ParameterError("cannot round a negative value")
        if v > self.max_value:
            return self.values[-1]
        return self._down[v]

    def round_up(self, v: int) -> int:
        if v < 0:
            raise ParameterError("cannot round a negative value")
        if v > self.values[-1]:
            raise ParameterError(f"{v} exceeds the domain maximum {self.values[-1]}")
        return self._up[v]

    def round_down_profile(self, p: Iterable[int]) -> Profile:
        down = self._down
        top = self.max_value
        return tuple(down[x] if 0 <= x <= top else (0 if x < 0 else down[top]) for x in p)


def build_domain(delta: float | Fraction, n: int) -> RoundingDomain:
    """Exact construction of ``D`` (no floating point in the powers)."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if n < 1:
        raise ParameterError("n must be at least 1")
    values = [0, 1]
    with localcontext() as ctx:
        ctx.prec = 80
        base = Decimal(delta.numerator) / Decimal(delta.denominator) + 1
        ln_base = base.ln()
        d = 1
        while True:
            # smallest i with (1+δ)^i ≥ d + 1
            i = int(((Decimal(d + 1).ln()) / ln_base).to_integral_value(rounding="ROUND_CEILING"))
            i = max(i, 1)
            while i > 1 and _ge_int(delta, i - 1, d + 1, base):
                i -= 1
            while not _ge_int(delta, i, d + 1, base):
                i += 1
            nxt = _floor_pow(delta, i, base)
            if nxt > n:
                break
            values.append(nxt)
            d = nxt
    vals = tuple(values) if n >= 1 else (0,)
    down = []
    j = 0
    for v in range(n + 1):
        while j + 1 < len(vals) and vals[j + 1] <= v:
            j += 1
        down.append(vals[j])
    up = []
    j = len(vals) - 1
    tmp = [0] * (vals[-1] + 1)
    for v in range(vals[-1], -1, -1):
        while j - 1 >= 0 and vals[j - 1] >= v:
            j -= 1
        tmp[v] = vals[j]
    up = tmp
    return RoundingDomain(delta, n, vals, tuple(down), tuple(up))


def _floor_pow(delta: Fraction, i: int, base: Decimal) -> int:
    val = _pow_dec(base, i)
    fl = int(val)  # truncation == floor for positive values
    if abs(val - fl) < Decimal(10) ** -40 or abs(val - (fl + 1)) < Decimal(10) ** -40:
        # too close to an integer for the working precision: decide exactly
        exact = (1 + delta) ** i
        return exact.numerator // exact.denominator
    return fl


def _ge_int(delta: Fraction, i: int, target: int, base: Decimal) -> bool:
    return _floor_pow(delta, i, base) >= target


def error_budget_holds(eps: float | Fraction, n: int, z: int = Z_CONSTANT) -> bool:
    """Numeric check of ``(1+δ)^{z log³ n} ≤ 1 + ε`` for ``δ = delta_for(eps, n, z)``."""
    delta = delta_for(eps, n, z)
    lg = _log2n(n)
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(delta.numerator) / Decimal(delta.denominator)
        e = Decimal(Fraction(eps).numerator) / Decimal(Fraction(eps).denominator)
        ex = Decimal(lg.numerator) / Decimal(lg.denominator)
        lhs = (z * ex ** 3 * (1 + d).ln()).exp()
        return lhs <= 1 + e


def domain_size_bound(dom: RoundingDomain) -> Decimal:
    """``log_{1+δ} n + 2``."""
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(dom.delta.numerator) / Decimal(dom.delta.denominator)
        return Decimal(dom.max_value).ln() / (1 + d).ln() + 2


# ---------------------------------------------------------------------------
# table types


@dataclass(frozen=True)
class TableKey:
    side_a_on_adhesion: int
    a_profile: Profile
    b_profile: Profile


@dataclass(frozen=True)
class Entry:
    order: int
    amask: int
    true_a: Profile
    true_b: Profile


Table = dict[tuple[int, Profile, Profile], Entry]
"""Sparse table: ``(A_t mask, a°, b°) -> Entry``; absence is ⊥."""


@dataclass(frozen=True)
class DPTable:
    """A table together with what it is about (used for dumps and certification)."""

    kind: str
    node: int
    region: int
    sigma: int
    entries: Mapping[tuple[int, Profile, Profile], Entry]
    x_mask: int | None = None
    index: int | None = None
    x_a: bool | None = None
    x_l: bool | None = None
    part: int = 0  # the component P_ℓ for H tables

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class WConfiguration:
    nu_w: tuple[int, ...]
    nu_a: tuple[Profile, ...]
    nu_b: tuple[Profile, ...]


class TableObserver(Protocol):
    def __call__(self, table: DPTable) -> None: ...


# ---------------------------------------------------------------------------
# balanced index trees and refinements


def balanced_index_tree(i: int) -> dict[int, list[int]]:
    """Children map of a binary tree on ``{0..i}`` rooted at ``i`` with 0 a leaf.

    The non-root ids are split into two halves, each rooted at its maximum
    and built the same way.
    """
    kids: dict[int, list[int]] = {v: [] for v in range(i + 1)}

    def build(lo: int, hi: int) -> list[int]:  # ids lo..hi inclusive
        if lo > hi:
            return []
        size = hi - lo + 1
        half = size // 2
        roots = []
        for a, b in ((lo, lo + half - 1), (lo + half, hi)):
            if a <= b:
                kids[b].extend(build(a, b - 1))
                roots.append(b)
        return roots

    kids[i] = build(0, i - 1)
    return kids


def index_tree_height(kids: Mapping[int, list[int]], root: int) -> int:
    def h(v: int) -> int:
        return 1 + max((h(c) for c in kids[v]), default=-1)
    return h(root)


@dataclass(frozen=True)
class Refinement:
    """``P_0 = X``, the components ``P_1..P_p`` of ``H_t − X`` and the adhesion groups.

    ``groups[ℓ]`` lists the children of ``t`` whose adhesion lies in
    ``P_ℓ ∪ X`` (and meets ``P_ℓ`` when ``ℓ ≥ 1``); group 0 also holds children
    with empty adhesion.
    """

    x_mask: int
    parts: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]

    @property
    def p(self) -> int:
        return len(self.parts) - 1


def torso_adjacency(graph: ColoredGraph, td: TreeDecomposition, node: int) -> list[int]:
    bag = td.bag_masks[node]
    adj = [a & bag for a in graph.adj]
    cliques = [td.adhesion_masks[c] for c in td.children[node]] + [td.adhesion_masks[node]]
    for s in cliques:
        for v in iter_bits(s):
            adj[v] |= s & ~(1 << v)
    return adj


def refinement_components(graph: ColoredGraph, td: TreeDecomposition, node: int, x_mask: int,
                          torso: list[int] | None = None) -> Refinement:
    bag = td.bag_masks[node]
    if x_mask & ~bag:
        raise ParameterError("X must be a subset of the bag")
    adj = torso if torso is not None else torso_adjacency(graph, td, node)
    parts = [x_mask] + components(bag & ~x_mask, adj)
    groups: list[list[int]] = [[] for _ in parts]
    sig = td.adhesion_masks
    for c in td.children[node]:
        s = sig[c]
        rest = s & ~x_mask
        if not rest:
            groups[0].append(c)
            continue
        hits = [ell for ell in range(1, len(parts)) if parts[ell] & rest]
        assert len(hits) == 1 and not rest & ~parts[hits[0]], "adhesion split across torso components"
        groups[hits[0]].append(c)
    return Refinement(x_mask, tuple(parts), tuple(tuple(g) for g in groups))


# ---------------------------------------------------------------------------
# merging


def _add(p: Profile, q: Profile) -> Profile:
    return tuple(x + y for x, y in zip(p, q))


def _sub(p: Profile, q: Profile) -> Profile:
    return tuple(x - y for x, y in zip(p, q))


_Raw = dict[tuple[int, Profile, Profile], Entry]


def _combine(acc: _Raw, part: Iterable[tuple[tuple[int, Profile, Profile], Entry]], k: int) -> _Raw:
    """Pairwise product with exact key sums; keeps the minimum order per key."""
    part = list(part)
    out: _Raw = {}
    for (at1, a1, b1), e1 in acc.items():
        for (at2, a2, b2), e2 in part:
            order = e1.order + e2.order
            if order > k:
                continue
            key = (at1 | at2, _add(a1, a2), _add(b1, b2))
            old = out.get(key)
            if old is None or order < old.order:
                out[key] = Entry(order, e1.amask | e2.amask, _add(e1.true_a, e2.true_a),
                                 _add(e1.true_b, e2.true_b))
    return out


def _shift(table: Mapping[tuple[int, Profile, Profile], Entry], order: int, a: Profile, b: Profile
           ) -> list[tuple[tuple[int, Profile, Profile], Entry]]:
    """Subtract a duplicated part (order and profiles) from every entry of a child table."""
    out = []
    for (at, ka, kb), e in table.items():
        out.append(((at, _sub(ka, a), _sub(kb, b)),
                    Entry(e.order - order, e.amask, _sub(e.true_a, a), _sub(e.true_b, b))))
    return out


def _finalise(raw: _Raw, dom: RoundingDomain) -> Table:
    out: Table = {}
    for (at, a, b), e in raw.items():
        key = (at, dom.round_down_profile(a), dom.round_down_profile(b))
        old = out.get(key)
        if old is None or e.order < old.order:
            out[key] = e
    return out


def _union_prefer_first(*tables: Mapping[tuple[int, Profile, Profile], Entry]) -> Table:
    out: Table = {}
    for t in tables:
        for key, e in t.items():
            old = out.get(key)
            if old is None or e.order < old.order:
                out[key] = e
    return out


def enumerate_feasible_configurations(
    target: tuple[int, int, Profile, Profile],
    own: Mapping[tuple[int, Profile, Profile], Entry],
    children: Sequence[Mapping[tuple[int, Profile, Profile], Entry]],
    correction: tuple[int, Profile, Profile],
    dom: RoundingDomain,
) -> Iterator[WConfiguration]:
    """Configurations (one key per family member) that merge into ``target``.

    ``target`` is ``(w, A_t, a°, b°)``.  A configuration is feasible when its
    orders minus ``|children| · correction_order`` sum to at most ``w``, the
    adhesion sides combine to ``A_t`` and the profile sums minus
    ``|children| · correction`` round down (after clamping at 0) to
    ``(a°, b°)``.  Yields in lexicographic order of the members' table order.
    """
    w, at_t, a_t, b_t = target
    corr_w, corr_a, corr_b = correction
    fam = [list(own.items())] + [list(t.items()) for t in children]
    m = len(children)

    def rec(i: int, at: int, w_sum: int, a: Profile, b: Profile,
            picks: list[tuple[tuple[int, Profile, Profile], Entry]]) -> Iterator[WConfiguration]:
        if i == len(fam):
            if w_sum - m * corr_w > w or at != at_t:
                return
            fa = tuple(max(0, x - m * y) for x, y in zip(a, corr_a))
            fb = tuple(max(0, x - m * y) for x, y in zip(b, corr_b))
            if dom.round_down_profile(fa) == a_t and dom.round_down_profile(fb) == b_t:
                yield WConfiguration(tuple(e.order for _, e in picks),
                                     tuple(key[1] for key, _ in picks),
                                     tuple(key[2] for key, _ in picks))
            return
        for key, e in fam[i]:
            picks.append((key, e))
            yield from rec(i + 1, at | key[0], w_sum + e.order, _add(a, key[1]), _add(b, key[2]), picks)
            picks.pop()

    c = len(a_t)
    yield from rec(0, 0, 0, (0,) * c, (0,) * c, [])


def merge_family(own: Mapping[tuple[int, Profile, Profile], Entry],
                 children: Sequence[Mapping[tuple[int, Profile, Profile], Entry]],
                 correction: tuple[int, Profile, Profile], dom: RoundingDomain, k: int) -> Table:
    """Forward form of the feasible-configuration rule: all merged keys at once."""
    corr_w, corr_a, corr_b = correction
    acc: _Raw = dict(own)
    acc = {key: e for key, e in acc.items() if e.order <= k}
    for child in children:
        acc = _combine(acc, _shift(child, corr_w, corr_a, corr_b), k)
        if not acc:
            break
    clamped: _Raw = {}
    for (at, a, b), e in acc.items():
        key = (at, tuple(max(0, x) for x in a), tuple(max(0, x) for x in b))
        old = clamped.get(key)
        if old is None or e.order < old.order:
            clamped[key] = e
    return _finalise(clamped, dom)


# ---------------------------------------------------------------------------
# per-node computation


@dataclass
class _NodeContext:
    graph: ColoredGraph
    td: TreeDecomposition
    node: int
    k: int
    dom: RoundingDomain
    child_tables: Mapping[int, Table]
    observer: TableObserver | None
    torso: list[int]
    # child table entries indexed by A_{t'}
    by_side: dict[int, dict[int, list[tuple[tuple[int, Profile, Profile], Entry]]]]

    def profile(self, mask: int) -> Profile:
        return self.graph.profile_of_mask(mask)

    def cross(self, a: int, b: int, sig: int) -> int:
        cnt = 0
        adj = self.graph.adj
        for v in iter_bits(a):
            nb = adj[v] & b
            if nb:
                if (sig >> v) & 1:
                    nb &= ~sig
                cnt += nb.bit_count()
        return cnt


def _cones(td: TreeDecomposition, nodes: Iterable[int]) -> int:
    m = 0
    for c in nodes:
        m |= td.cone_masks[c]
    return m


def compute_table_H(ctx: _NodeContext, ref: Refinement, ell: int, x_a: bool, x_l: bool) -> dict[int, Table]:
    """``H(m)`` for every node ``m`` of the balanced tree over the adhesions of ``P_ℓ``."""
    td = ctx.td
    sig = td.adhesion_masks[ctx.node]
    xm = ref.x_mask
    pm = ref.parts[ell] if ell else 0
    if ell == 0:
        x_l = x_a
    a_side = (xm if x_a else 0) | (pm if x_l else 0)
    base_region = xm | pm
    b_side = base_region & ~a_side
    order0 = 0 if x_a == x_l or not pm else ctx.cross(xm, pm, sig)
    base_a = ctx.profile(a_side & ~sig)
    base_b = ctx.profile(b_side & ~sig)
    base_key = (a_side & sig, base_a, base_b)
    base_entry = Entry(order0, a_side, base_a, base_b)
    group = ref.groups[ell]
    z = len(group)
    kids = balanced_index_tree(z)
    tables: dict[int, Table] = {}
    order = _postorder(kids, z)
    for m in order:
        if m == 0:
            own: _Raw = {base_key: base_entry} if order0 <= ctx.k else {}
        else:
            child = group[m - 1]
            want = td.adhesion_masks[child] & a_side
            own = {}
            for (cat, ca, cb), e in ctx.by_side[child].get(want, ()):
                o = order0 + e.order
                if o > ctx.k:
                    continue
                key = (base_key[0], _add(base_a, ca), _add(base_b, cb))
                old = own.get(key)
                if old is None or o < old.order:
                    own[key] = Entry(o, a_side | e.amask, _add(base_a, e.true_a), _add(base_b, e.true_b))
        tab = merge_family(own, [tables[q] for q in kids[m]], (order0, base_a, base_b), ctx.dom, ctx.k)
        tables[m] = tab
        if ctx.observer is not None:
            covered = [group[j - 1] for j in _subtree(kids, m) if j >= 1]
            ctx.observer(DPTable("H", ctx.node, base_region | _cones(td, covered), sig, tab,
                                 x_mask=xm, index=m, x_a=x_a, x_l=x_l, part=pm))
    return tables


def compute_table_N(ctx: _NodeContext, ref: Refinement, ell: int) -> dict[bool, Table]:
    out: dict[bool, Table] = {}
    z = len(ref.groups[ell])
    for x_a in (False, True):
        tabs = []
        for x_l in ((False, True) if ell else (x_a,)):
            tabs.append(compute_table_H(ctx, ref, ell, x_a, x_l)[z])
        out[x_a] = _union_prefer_first(*tabs)
        if ctx.observer is not None:
            region = ref.x_mask | (ref.parts[ell] if ell else 0) | _cones(ctx.td, ref.groups[ell])
            ctx.observer(DPTable("N", ctx.node, region, ctx.td.adhesion_masks[ctx.node], out[x_a],
                                 x_mask=ref.x_mask, index=ell, x_a=x_a))
    return out


def compute_table_Nleq(ctx: _NodeContext, ref: Refinement, ell: int, n_ell: Table,
                       child_nleq: Sequence[Table], x_a: bool) -> Table:
    sig = ctx.td.adhesion_masks[ctx.node]
    xp = ctx.profile(ref.x_mask & ~sig)
    zero = (0,) * ctx.graph.c
    corr = (0, xp, zero) if x_a else (0, zero, xp)
    return merge_family(n_ell, child_nleq, corr, ctx.dom, ctx.k)


def compute_table_MX(ctx: _NodeContext, ref: Refinement) -> Table:
    p = ref.p
    kids = balanced_index_tree(p)
    sig = ctx.td.adhesion_masks[ctx.node]
    n_tabs = {ell: compute_table_N(ctx, ref, ell) for ell in range(p + 1)}
    nleq: dict[int, dict[bool, Table]] = {}
    for ell in _postorder(kids, p):
        nleq[ell] = {}
        for x_a in (False, True):
            nleq[ell][x_a] = compute_table_Nleq(ctx, ref, ell, n_tabs[ell][x_a],
                                                [nleq[q][x_a] for q in kids[ell]], x_a)
            if ctx.observer is not None:
                sub = _subtree(kids, ell)
                region = ref.x_mask
                for j in sub:
                    region |= (ref.parts[j] if j else 0) | _cones(ctx.td, ref.groups[j])
                ctx.observer(DPTable("Nleq", ctx.node, region, sig, nleq[ell][x_a],
                                     x_mask=ref.x_mask, index=ell, x_a=x_a))
    mx = _union_prefer_first(nleq[p][False], nleq[p][True])
    if ctx.observer is not None:
        ctx.observer(DPTable("MX", ctx.node, ctx.td.cone_masks[ctx.node], sig, mx, x_mask=ref.x_mask))
    return mx


def covering_bounds(td: TreeDecomposition, k: int, q: int) -> tuple[int, int]:
    """``(s1, s2)``: bag-side bound from unbreakability, and cut-touching plus broken-adhesion bound."""
    return q, k + k * max(td.max_adhesion, 0)


def compute_table_M(ctx: _NodeContext, family: Sequence[int]) -> Table:
    out: Table = {}
    for x in family:
        ref = refinement_components(ctx.graph, ctx.td, ctx.node, x, ctx.torso)
        mx = compute_table_MX(ctx, ref)
        for key, e in mx.items():
            old = out.get(key)
            if old is None or e.order < old.order:
                out[key] = e
    return out


def _postorder(kids: Mapping[int, list[int]], root: int) -> list[int]:
    out: list[int] = []
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            out.append(v)
            continue
        stack.append((v, True))
        for c in reversed(kids[v]):
            stack.append((c, False))
    return out


def _subtree(kids: Mapping[int, list[int]], root: int) -> list[int]:
    out = [root]
    i = 0
    while i < len(out):
        out.extend(kids[out[i]])
        i += 1
    return out


# ---------------------------------------------------------------------------
# driver


@dataclass
class DPRun:
    """Everything the DP produced for one instance."""

    instance: FairInstance
    eps: Fraction
    domain: RoundingDomain
    decomposition: TreeDecomposition
    tables: dict[int, Table]
    family_sizes: dict[int, int]
    unbreakability_q: int
    timings: dict[str, float]
    cut: EdgeCut | None = None

    def table_size_bound(self, node: int) -> int:
        sig = self.decomposition.adhesion_masks[node].bit_count()
        return (self.instance.k + 1) * (1 << sig) * len(self.domain) ** (2 * self.instance.graph.c)

    def table_size_violations(self) -> list[str]:
        out = []
        for t, tab in self.tables.items():
            bound = self.table_size_bound(t)
            if len(tab) > bound:
                out.append(f"node {t}: {len(tab)} entries > bound {bound}")
        return out


def build_decomposition(graph: ColoredGraph, k: int, q: int | None = None,
                        depth_reduction: bool = True) -> tuple[TreeDecomposition, int]:
    """Builder output (escalating ``q`` on failure), optionally depth-reduced.

    Returns the decomposition and the unbreakability parameter its bags are
    certified for.
    """
    q0 = max(k, 1) if q is None else q
    last: Exception | None = None
    for qq in range(q0, max(q0, graph.n) + 1):
        try:
            td = build_unbreakable_decomposition(graph, BuilderConfig(k=k, q=qq))
        except BuilderFailure as exc:
            last = exc
            continue
        if not depth_reduction:
            return td, qq
        return reduce_depth(graph, td, k), qq + 8 * k
    raise BuilderFailure(f"no decomposition found for any q ≥ {q0}") from last


def run_dp(inst: FairInstance, eps: float | Fraction, *, delta: float | Fraction | None = None,
           covering: str = "auto", td: TreeDecomposition | None = None, q: int | None = None,
           observer: TableObserver | None = None, seed: int = 0) -> DPRun:
    g = inst.graph
    k = inst.k
    eps = Fraction(eps)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if td is None:
        td, qq = build_decomposition(g, k, q)
    else:
        qq = g.n if q is None else q
    timings["decomposition"] = time.perf_counter() - t0
    dom = build_domain(delta if delta is not None else delta_for(eps, max(g.n, 1)), max(g.n, 1))
    s1, s2 = covering_bounds(td, k, qq)
    tables: dict[int, Table] = {}
    fam_sizes: dict[int, int] = {}
    t1 = time.perf_counter()
    for node in td.postorder:
        bag = td.bag_masks[node]
        bag_list = list(iter_bits(bag))
        fam = build_covering_family(bag_list, min(s1, len(bag_list)), min(s2, len(bag_list)),
                                    mode=covering, seed=seed)
        family = fam.masks()
        fam_sizes[node] = len(family)
        by_side: dict[int, dict[int, list]] = {}
        for c in td.children[node]:
            idx: dict[int, list] = {}
            for key, e in tables[c].items():
                idx.setdefault(key[0], []).append((key, e))
            by_side[c] = idx
        ctx = _NodeContext(g, td, node, k, dom, tables, observer, torso_adjacency(g, td, node), by_side)
        tab = compute_table_M(ctx, family)
        bound = (k + 1) * (1 << td.adhesion_masks[node].bit_count()) * len(dom) ** (2 * g.c)
        if len(tab) > bound:
            raise ContractError(f"table of node {node} has {len(tab)} entries, above the bound {bound}")
        tables[node] = tab
        if observer is not None:
            observer(DPTable("M", node, td.cone_masks[node], td.adhesion_masks[node], tab))
    timings["tables"] = time.perf_counter() - t1
    run = DPRun(inst, eps, dom, td, tables, fam_sizes, qq, timings)
    run.cut = extract_root_cut(run)
    return run


def extract_root_cut(run: DPRun) -> EdgeCut | None:
    inst = run.instance
    g = inst.graph
    td = run.decomposition
    root_table = run.tables[td.root]
    dom = run.domain
    r = inst.r_target
    rest = tuple(ci - ri for ci, ri in zip(inst.c_total, r))
    preferred = (0, dom.round_down_profile(r), dom.round_down_profile(rest))
    order = []
    if preferred in root_table:
        order.append(root_table[preferred])
    order.extend(e for key, e in root_table.items() if key != preferred)
    for e in order:
        if e.order > inst.k:
            continue
        cut = EdgeCut.from_masks(g.all_mask, e.amask)
        if _eps_fair_exact(inst, cut, run.eps):
            if cut_order(g, cut) != e.order:
                raise ContractError("stored cut order disagrees with its recomputed order")
            return cut
    return None


def _eps_fair_exact(inst: FairInstance, cut: EdgeCut, eps: Fraction) -> bool:
    """(ε, r°)-fairness with exact rational arithmetic (order bound included)."""
    if cut_order(inst.graph, cut) > inst.k:
        return False
    pa = color_profile(inst.graph, cut.side_a)
    pb = color_profile(inst.graph, cut.side_b)
    for ai, bi, ri, ci in zip(pa, pb, inst.r_target, inst.c_total):
        if ai > ri * (1 + eps) or bi > (ci - ri) * (1 + eps):
            return False
    return True


def solve(inst: FairInstance, eps: float | Fraction, **kwargs) -> EdgeCut | None:
    """An (ε, r°)-fair cut of order ≤ k found by the rounded DP, or ``None``."""
    run = run_dp(inst, eps, **kwargs)
    cut = run.cut
    if cut is not None:
        assert _eps_fair_exact(inst, cut, Fraction(eps)), "returned cut failed re-verification"
    return cut


# ---------------------------------------------------------------------------
# certification


def region_cut_order(graph: ColoredGraph, region: int, sigma: int, amask: int) -> int:
    """Order of ``(amask, region − amask)`` in ``G[region] − E(G[σ])``."""
    cnt = 0
    adj = graph.adj
    bmask = region & ~amask
    for v in iter_bits(amask & region):
        nb = adj[v] & bmask
        if (sigma >> v) & 1:
            nb &= ~sigma
        cnt += nb.bit_count()
    return cnt


def verify_entry(graph: ColoredGraph, table: DPTable, key: tuple[int, Profile, Profile], e: Entry,
                 k: int, td: TreeDecomposition | None = None) -> list[str]:
    """Re-verify one stored cut against its key and its table's designated subgraph."""
    out = []
    at, a, b = key
    if e.amask & ~table.region:
        out.append("A-side leaves the designated subgraph")
    order = region_cut_order(graph, table.region, table.sigma, e.amask)
    if order != e.order:
        out.append(f"stored order {e.order} differs from recomputed {order}")
    if order > k:
        out.append(f"order {order} exceeds k={k}")
    if e.amask & table.sigma != at:
        out.append("adhesion restriction differs from the key")
    ta = graph.profile_of_mask(e.amask & table.region & ~table.sigma)
    tb = graph.profile_of_mask(table.region & ~e.amask & ~table.sigma)
    if ta != e.true_a or tb != e.true_b:
        out.append("stored true profiles are wrong")
    if any(x > y for x, y in zip(a, ta)) or any(x > y for x, y in zip(b, tb)):
        out.append("key profile exceeds the true profile")
    xm = table.x_mask
    if table.x_a is not None and xm is not None:
        if table.x_a and xm & ~e.amask or not table.x_a and xm & e.amask:
            out.append("X is not on its flagged side")
    if table.x_l is not None and table.part:
        if table.x_l and table.part & ~e.amask or not table.x_l and table.part & e.amask:
            out.append("P_l is not on its flagged side")
    if table.kind == "MX" and td is not None and xm is not None:
        ref = refinement_components(graph, td, table.node, xm)
        for pmask in ref.parts:
            if pmask and pmask & e.amask and pmask & ~e.amask:
                out.append("refinement piece split by the cut")
    return out


class SoundnessChecker:
    """Observer that re-verifies every entry of every table it is shown."""

    def __init__(self, graph: ColoredGraph, k: int, td: TreeDecomposition | None = None) -> None:
        self.graph = graph
        self.k = k
        self.td = td
        self.entries = 0
        self.tables = 0
        self.violations: list[str] = []

    def __call__(self, table: DPTable) -> None:
        self.tables += 1
        for key, e in table.entries.items():
            self.entries += 1
            for msg in verify_entry(self.graph, table, key, e, self.k, self.td):
                self.violations.append(f"{table.kind}@{table.node}: {msg}")


def dump_tables(run: DPRun) -> dict[int, list[tuple[str, tuple, int, int, Profile]]]:
    """Per node rows ``(kind, key, order, |A|, true A-profile)``."""
    out = {}
    for node, tab in run.tables.items():
        rows = []
        for (at, a, b), e in tab.items():
            rows.append(("M", (sorted(iter_bits(at)), list(a), list(b)), e.order, e.amask.bit_count(),
                          e.true_a))
        out[node] = rows
    return out
