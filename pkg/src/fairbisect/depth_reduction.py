"""Logarithmic-depth decompositions from arbitrary-depth ones.

Pipeline (each stage is exposed and independently checkable):

1. :func:`~fairbisect.tree_partition.find_balanced_tp` on the decomposition
   tree ``T`` with the root marked gives a nice tree partition ``(P, tau)``.
2. :func:`lift_partition_to_decomposition` unions the bags of every block:
   ``beta1(t) = U_{x in tau^-1(t)} beta(x)``.  This is a valid decomposition of
   logarithmic depth, but its bags are unions of up to four input bags and
   lose unbreakability.
3. :func:`compute_Y_and_gamma` collects, for every block ``t``, the small
   interface set ``Y_t`` (adhesions of the block's own nodes and of the ``T``
   edges coming up from the parent block) and for each child block the single
   node ``gamma(t_c)`` of ``t`` it really attaches to.
4. :func:`build_star_decomposition` replaces every block by a star: a centre
   with bag ``Y_t`` and one leaf per node ``x`` of the block with bag
   ``Y_t ∪ beta(x)``.  Child blocks hang under their ``gamma`` leaf.
5. :func:`reduce_depth` finishes with compactification and contraction of
   nested bags.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from ._bits import iter_bits
from .decomposition import (
    TreeDecomposition,
    compactify,
    contract_nested_bags,
    is_unbreakable,
    log2_ceil,
    validate,
)
from .errors import ContractError, DomainError
from .graph_core import ColoredGraph
from .tree_partition import TreePartition, find_balanced_tp, tree_from_parent, validate_nice_partition


@dataclass(frozen=True)
class LiftedDecomposition:
    """Tree partition of the decomposition tree together with the lifted bags."""

    partition: TreePartition
    bags1: Mapping[int, frozenset[int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bags1", MappingProxyType(dict(self.bags1)))

    def as_tree_decomposition(self) -> TreeDecomposition:
        return TreeDecomposition(parent=self.partition.parent, bags=self.bags1, root=self.partition.root)


@dataclass(frozen=True)
class StarAugmentation:
    gamma_map: Mapping[int, int]
    y_sets: Mapping[int, frozenset[int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma_map", MappingProxyType(dict(self.gamma_map)))
        object.__setattr__(self, "y_sets", MappingProxyType(dict(self.y_sets)))


@dataclass(frozen=True)
class DepthReductionStages:
    partition: TreePartition
    lifted: LiftedDecomposition
    augmentation: StarAugmentation
    star: TreeDecomposition
    result: TreeDecomposition


def _check_partition_matches(td: TreeDecomposition, tp: TreePartition) -> None:
    if set(tp.assign) != set(td.parent):
        raise DomainError("tree partition is not over the decomposition tree")


def lift_partition_to_decomposition(graph: ColoredGraph, td: TreeDecomposition,
                                    tp: TreePartition) -> LiftedDecomposition:
    _check_partition_matches(td, tp)
    bm = td.bag_masks
    acc = {b: 0 for b in tp.parent}
    for x, b in tp.assign.items():
        acc[b] |= bm[x]
    bags1 = {b: frozenset(iter_bits(m)) for b, m in acc.items()}
    return LiftedDecomposition(tp, bags1)


def compute_Y_and_gamma(td: TreeDecomposition, tp: TreePartition, k: int) -> StarAugmentation:
    _check_partition_matches(td, tp)
    if td.max_adhesion > k:
        raise ContractError(f"input adhesion {td.max_adhesion} exceeds k={k}")
    sigma = td.adhesion_masks
    bm = td.bag_masks
    tau = tp.assign
    y: dict[int, int] = {}
    for t in tp.parent:
        m = 0
        for x in tp.members(t):
            m |= sigma[x]
        pt = tp.parent[t]
        if pt is not None:
            for yv in tp.members(pt):
                py = td.parent[yv]
                if py is not None and tau[py] == t:
                    m |= sigma[yv]
        y[t] = m
    lifted = {b: 0 for b in tp.parent}
    for x, b in tau.items():
        lifted[b] |= bm[x]
    gamma: dict[int, int] = {}
    for tc, t in tp.parent.items():
        if t is None:
            continue
        cand = [x for x in tp.members(t) if lifted[tc] & bm[x] & ~y[t]]
        if len(cand) > 1:
            raise ContractError(f"block {tc} attaches to {len(cand)} nodes of its parent block outside Y")
        if cand:
            gamma[tc] = cand[0]
            continue
        inside = set(tp.members(tc))
        adjacent = [x for x in tp.members(t)
                    if td.parent[x] is not None and td.parent[x] in inside
                    or any(c in inside for c in td.children[x])]
        gamma[tc] = min(adjacent) if adjacent else min(tp.members(t))
    return StarAugmentation(gamma, {t: frozenset(iter_bits(m)) for t, m in y.items()})


def check_star_augmentation(td: TreeDecomposition, tp: TreePartition, aug: StarAugmentation,
                            k: int) -> list[str]:
    """Violations of the four interface properties (empty list when all hold)."""
    out: list[str] = []
    bm = td.bag_masks
    lifted = {b: 0 for b in tp.parent}
    for x, b in tp.assign.items():
        lifted[b] |= bm[x]
    ymask = {t: sum(1 << v for v in ys) for t, ys in aug.y_sets.items()}
    for t, p in tp.parent.items():
        if len(aug.y_sets[t]) > 8 * k:
            out.append(f"|Y_{t}| = {len(aug.y_sets[t])} exceeds 8k")
        if p is not None:
            if lifted[p] & lifted[t] & ~ymask[t]:
                out.append(f"lifted adhesion of block {t} not inside Y_{t}")
            g = aug.gamma_map[t]
            if tp.assign[g] != p:
                out.append(f"gamma({t}) does not lie in the parent block")
            elif lifted[t] & lifted[p] & ~(ymask[p] | bm[g]):
                out.append(f"block {t} meets its parent block outside Y and gamma's bag")
        mem = tp.members(t)
        for i, x in enumerate(mem):
            for z in mem[i + 1:]:
                if bm[x] & bm[z] & ~ymask[t]:
                    out.append(f"nodes {x}, {z} of block {t} share vertices outside Y_{t}")
    return out


def build_star_decomposition(graph: ColoredGraph, td: TreeDecomposition, tp: TreePartition,
                             aug: StarAugmentation) -> TreeDecomposition:
    _check_partition_matches(td, tp)
    offset = max(td.parent) + 1
    parent: dict[int, int | None] = {}
    bags: dict[int, frozenset[int]] = {}
    for t, p in tp.parent.items():
        parent[offset + t] = None if p is None else aug.gamma_map[t]
        bags[offset + t] = aug.y_sets[t]
    for x, t in tp.assign.items():
        parent[x] = offset + t
        bags[x] = aug.y_sets[t] | td.bags[x]
    return TreeDecomposition(parent=parent, bags=bags, root=offset + tp.root)


def reduce_depth_stages(graph: ColoredGraph, td: TreeDecomposition, k: int) -> DepthReductionStages:
    report = validate(graph, td)
    if not report.valid:
        raise ContractError("input is not a valid tree decomposition: " + "; ".join(report.violations))
    tree = tree_from_parent(td.parent)
    tp = find_balanced_tp(tree, [td.root])
    prep = validate_nice_partition(tree, tp)
    if not prep.valid:
        raise ContractError("balanced tree partition is not nice: " + "; ".join(prep.violations))
    lifted = lift_partition_to_decomposition(graph, td, tp)
    lrep = validate(graph, lifted.as_tree_decomposition())
    if not lrep.valid:
        raise ContractError("lifted decomposition is invalid: " + "; ".join(lrep.violations))
    aug = compute_Y_and_gamma(td, tp, k)
    problems = check_star_augmentation(td, tp, aug, k)
    if problems:
        raise ContractError("interface sets violate their guarantees: " + "; ".join(problems))
    star = build_star_decomposition(graph, td, tp, aug)
    srep = validate(graph, star)
    if not srep.valid:
        raise ContractError("star decomposition is invalid: " + "; ".join(srep.violations))
    result = contract_nested_bags(compactify(graph, star))
    return DepthReductionStages(tp, lifted, aug, star, result)


def reduce_depth(graph: ColoredGraph, td: TreeDecomposition, k: int, q: int | None = None,
                 check_unbreakable: bool = False) -> TreeDecomposition:
    """Compact decomposition of depth ≤ 2·ceil(log2 n) with adhesions ≤ 8k.

    Bags of the output are subsets of ``Y ∪ beta(x)`` sets, so ``(q, k)``-
    unbreakable input bags become ``(q + 8k, k)``-unbreakable.  With
    ``check_unbreakable`` (and ``q`` given) that is certified by enumeration.
    """
    out = reduce_depth_stages(graph, td, k).result
    rep = validate(graph, out)
    if not rep.valid or not rep.compact:
        raise ContractError("depth reduction produced a non-compact or invalid decomposition")
    if out.max_adhesion > 8 * k:
        raise ContractError(f"output adhesion {out.max_adhesion} exceeds 8k")
    if graph.n and out.depth > 2 * log2_ceil(graph.n):
        raise ContractError(f"output depth {out.depth} exceeds 2*ceil(log2 n)")
    if check_unbreakable and q is not None:
        for t, bag in out.bags.items():
            if not is_unbreakable(graph, bag, q + 8 * k, k):
                raise ContractError(f"bag of node {t} is not ({q + 8 * k}, {k})-unbreakable")
    return out
