"""Instance generators: seeded random instances and the hardness chain.

The chain maps a binary CSP to a multi-dimensional subset-sum instance, that
to a multi-dimensional partition instance (target = half of every coordinate
sum) and that to a fair-bisection instance with ``k = 0`` made of disjoint
stars, one per vector, with ``V[j]`` vertices of colour ``j``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import DomainError, ParameterError
from .graph_core import ColoredGraph, FairInstance

Vector = tuple[int, ...]


@dataclass(frozen=True)
class BcspInstance:
    """Variables ``1..k_vars`` over values ``1..domain_size``; constraints keyed by ``(i, j)``, ``i < j``."""

    k_vars: int
    domain_size: int
    constraints: Mapping[tuple[int, int], frozenset[tuple[int, int]]]

    def __post_init__(self) -> None:
        cons = {}
        for (i, j), allowed in self.constraints.items():
            if not 1 <= i < j <= self.k_vars:
                raise DomainError(f"constraint index ({i}, {j}) must satisfy 1 ≤ i < j ≤ {self.k_vars}")
            allowed = frozenset(allowed)
            for a, b in allowed:
                if not (1 <= a <= self.domain_size and 1 <= b <= self.domain_size):
                    raise DomainError(f"allowed pair ({a}, {b}) outside the domain")
            cons[(i, j)] = allowed
        object.__setattr__(self, "constraints", MappingProxyType(dict(sorted(cons.items()))))

    def incidences(self) -> list[tuple[int, tuple[int, int]]]:
        """(variable, constraint) pairs sorted by variable, then constraint."""
        out = []
        for key in self.constraints:
            out.append((key[0], key))
            out.append((key[1], key))
        return sorted(out)


@dataclass(frozen=True)
class MdssInstance:
    dims: int
    vectors: tuple[Vector, ...]
    target: Vector

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", tuple(tuple(v) for v in self.vectors))
        object.__setattr__(self, "target", tuple(self.target))
        for v in self.vectors + (self.target,):
            if len(v) != self.dims:
                raise DomainError("vector length differs from the dimension")
            if any(x < 0 for x in v):
                raise DomainError("entries must be non-negative")

    def total(self) -> Vector:
        return tuple(sum(col) for col in zip(*self.vectors)) if self.vectors else (0,) * self.dims


def bcsp_constants(n: int) -> tuple[int, int, int]:
    """``(N, A, B) = (100n, 60n, 40n)``."""
    return 100 * n, 60 * n, 40 * n


def bcsp_to_mdss(bcsp: BcspInstance) -> MdssInstance:
    n = bcsp.domain_size
    big_n, big_a, big_b = bcsp_constants(n)
    inc = bcsp.incidences()
    dim = {pair: idx for idx, pair in enumerate(inc)}
    d = len(inc)
    vectors: list[Vector] = []
    for x in range(1, bcsp.k_vars + 1):
        mine = [dim[p] for p in inc if p[0] == x]
        for a in range(1, n + 1):
            v = [0] * d
            for j in mine:
                v[j] = big_a + a
            vectors.append(tuple(v))
    for (i, j), allowed in bcsp.constraints.items():
        for a, b in sorted(allowed):
            v = [0] * d
            v[dim[(i, (i, j))]] = big_b - a
            v[dim[(j, (i, j))]] = big_b - b
            vectors.append(tuple(v))
    return MdssInstance(d, tuple(vectors), (big_n,) * d)


def mdss_to_mdp(mdss: MdssInstance, pad: bool = False) -> MdssInstance:
    """Partition form: append a parity vector and ``S − 2T``; target becomes half the new total.

    The parity vector has entry ``T_j + 1`` or ``T_j + 2`` in dimension ``j``,
    whichever makes the running coordinate sum even.  Its entries exceed the
    target, so it never belongs to a subset summing to ``T``.

    ``S − 2T`` must be non-negative.  With ``pad`` the instance is first
    extended by up to two *blocker* vectors ``T + 1`` (also never part of a
    subset summing to ``T``) when the coordinate sums are too small;
    otherwise a :class:`DomainError` is raised.
    """
    if pad:
        blockers: list[Vector] = []
        total = mdss.total()
        while mdss.dims and any(s + (t + 1) < 2 * t for s, t in zip(total, mdss.target)):
            blocker = tuple(t + 1 for t in mdss.target)
            blockers.append(blocker)
            total = tuple(s + b for s, b in zip(total, blocker))
        mdss = MdssInstance(mdss.dims, mdss.vectors + tuple(blockers), mdss.target)
    total = mdss.total()
    parity = tuple(t + 1 if (s + t + 1) % 2 == 0 else t + 2 for s, t in zip(total, mdss.target))
    s = tuple(a + b for a, b in zip(total, parity))
    slack = tuple(x - 2 * t for x, t in zip(s, mdss.target))
    if any(x < 0 for x in slack):
        raise DomainError("S − 2T has a negative entry: the target exceeds what the vectors can reach")
    vectors = mdss.vectors + (parity, slack)
    new_total = tuple(a + b for a, b in zip(s, slack))
    assert all(x % 2 == 0 for x in new_total)
    return MdssInstance(mdss.dims, vectors, tuple(x // 2 for x in new_total))


def mdp_to_fair_bisection(mdp: MdssInstance) -> FairInstance:
    """Disjoint stars, one per non-zero vector; ``k = 0``; ``r°`` is the MDP target."""
    edges: list[tuple[int, int]] = []
    colors: list[int] = []
    for vec in mdp.vectors:
        if not any(vec):
            continue
        centre = len(colors)
        for j, cnt in enumerate(vec):
            for _ in range(cnt):
                v = len(colors)
                colors.append(j + 1)
                if v != centre:
                    edges.append((centre, v))
    c = max(mdp.dims, 1)
    g = ColoredGraph.from_edges(len(colors), edges, colors, c)
    target = mdp.target if mdp.dims else (0,)
    return FairInstance(g, 0, tuple(target))


def bcsp_chain(bcsp: BcspInstance, pad: bool = True) -> FairInstance:
    return mdp_to_fair_bisection(mdss_to_mdp(bcsp_to_mdss(bcsp), pad=pad))


# ---------------------------------------------------------------------------
# brute force references


def bcsp_satisfiable(bcsp: BcspInstance) -> bool:
    vals = range(1, bcsp.domain_size + 1)
    for assign in itertools.product(vals, repeat=bcsp.k_vars):
        if all((assign[i - 1], assign[j - 1]) in allowed for (i, j), allowed in bcsp.constraints.items()):
            return True
    return False


def mdss_solvable(mdss: MdssInstance) -> bool:
    """Subset-sum over reachable partial sums bounded by the target."""
    reach = {(0,) * mdss.dims}
    for v in mdss.vectors:
        new = set()
        for p in reach:
            q = tuple(a + b for a, b in zip(p, v))
            if all(x <= t for x, t in zip(q, mdss.target)):
                new.add(q)
        reach |= new
    return mdss.target in reach


def random_bcsp(k_vars: int, n: int, seed: int, density: float = 0.6) -> BcspInstance:
    rng = random.Random(f"bcsp/{k_vars}/{n}/{seed}")
    cons = {}
    for i, j in itertools.combinations(range(1, k_vars + 1), 2):
        if rng.random() < density:
            allowed = frozenset((a, b) for a in range(1, n + 1) for b in range(1, n + 1) if rng.random() < 0.4)
            cons[(i, j)] = allowed
    return BcspInstance(k_vars, n, cons)


def random_instance(n: int, m: int, c: int, k: int, seed: int) -> FairInstance:
    """Uniform simple graph with uniform colours; ``r°`` read off a random vertex subset."""
    if n < 0 or c < 1 or k < 0:
        raise ParameterError("need n ≥ 0, c ≥ 1, k ≥ 0")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if not 0 <= m <= len(pairs):
        raise ParameterError(f"m must lie in [0, {len(pairs)}]")
    rng = random.Random(f"instance/{n}/{m}/{c}/{k}/{seed}")
    edges = rng.sample(pairs, m)
    colors = [rng.randint(1, c) for _ in range(n)]
    g = ColoredGraph.from_edges(n, edges, colors, c)
    side = sum(1 << v for v in range(n) if rng.random() < 0.5)
    return FairInstance(g, k, g.profile_of_mask(side))


def corpus_parameters(seed: int, max_n: int = 12, max_m: int = 20, max_k: int = 3,
                      colors: Sequence[int] = (1, 2, 3)) -> tuple[int, int, int, int]:
    """Seeded ``(n, m, c, k)`` for the random acceptance corpus."""
    rng = random.Random(f"corpus/{seed}")
    n = rng.randint(2, max_n)
    m = rng.randint(0, min(max_m, n * (n - 1) // 2))
    return n, m, rng.choice(list(colors)), rng.randint(0, max_k)
