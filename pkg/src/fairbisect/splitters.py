"""Splitter families and the covering set family built from them.

An ``(n, k, ell)`` splitter is a family of maps ``[n] -> [ell]`` such that for
every ``k``-subset ``S`` some map splits ``S`` evenly (the preimage sizes of
all ``ell`` values inside ``S`` differ pairwise by at most one).  With
``ell = k^2`` this means the map is injective on ``S``.

The covering family of a ground set ``S`` with bounds ``s1, s2`` contains, for
every pair of disjoint ``X1, X2 ⊆ S`` with ``|X1| ≤ s1`` and ``|X2| ≤ s2``, a
member ``X`` with ``X1 ⊆ X`` and ``X ∩ X2 = ∅``.  It is assembled from
splitters: for every ``(s1', s2')`` take an ``(|S|, s1'+s2', (s1'+s2')^2)``
splitter and emit the preimage of every ``s1'``-subset of each map's image.

Splitters are found by a seeded greedy cover over a random pool of maps and
then verified exhaustively, which is only meant for small ``n``.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ParameterError

log = logging.getLogger(__name__)

DEFAULT_SUBSET_BUDGET = 2_000_000
POWERSET_LIMIT = 16


@dataclass(frozen=True)
class SplitterFamily:
    n: int
    k: int
    ell: int
    functions: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.functions)


@dataclass(frozen=True)
class CoveringFamily:
    ground: tuple[int, ...]
    s1: int
    s2: int
    sets: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.sets)

    def masks(self) -> list[int]:
        return [sum(1 << v for v in x) for x in self.sets]


def splits_evenly(f: Sequence[int], subset: Sequence[int], ell: int) -> bool:
    counts = [0] * ell
    for x in subset:
        counts[f[x]] += 1
    return max(counts) - min(counts) <= 1


def _split_key(f: Sequence[int], subset: Sequence[int], ell: int) -> bool:
    if ell >= len(subset):
        # with at least as many buckets as elements, an even split is an injection
        return len({f[x] for x in subset}) == len(subset)
    return splits_evenly(f, subset, ell)


def build_splitter(n: int, k: int, ell: int | None = None, seed: int = 0,
                   budget: int = DEFAULT_SUBSET_BUDGET) -> SplitterFamily:
    """Greedy ``(n, k, ell)`` splitter (``ell`` defaults to ``k^2``)."""
    if n < 1 or k < 1:
        raise ParameterError("n and k must be at least 1")
    ell = k * k if ell is None else ell
    if ell < 1:
        raise ParameterError("ell must be at least 1")
    if k > n:
        return SplitterFamily(n, k, ell, (tuple([0] * n),))
    if comb(n, k) > budget:
        raise BudgetExceeded(f"C({n},{k}) subsets exceed the verification budget {budget}")
    return _build_splitter_cached(n, k, ell, seed)


@lru_cache(maxsize=256)
def _build_splitter_cached(n: int, k: int, ell: int, seed: int) -> SplitterFamily:
    rng = random.Random(f"splitter/{n}/{k}/{ell}/{seed}")
    pending = list(itertools.combinations(range(n), k))
    # deterministic first candidate: identity modulo ell
    functions: list[tuple[int, ...]] = []
    candidates: list[tuple[int, ...]] = [tuple(i % ell for i in range(n))]
    while pending:
        while len(candidates) < 32:
            candidates.append(tuple(rng.randrange(ell) for _ in range(n)))
        best, best_left = None, None
        for f in candidates:
            left = [s for s in pending if not _split_key(f, s, ell)]
            if best_left is None or len(left) < len(best_left):
                best, best_left = f, left
        assert best is not None and best_left is not None
        if len(best_left) < len(pending):
            functions.append(best)
            pending = best_left
        candidates = []
    if not functions:
        functions.append(tuple(i % ell for i in range(n)))
    return SplitterFamily(n, k, ell, tuple(functions))


def verify_splitter(fam: SplitterFamily) -> bool:
    """Exhaustively check the splitter property over all ``k``-subsets."""
    if fam.k > fam.n:
        return True
    return all(any(splits_evenly(f, s, fam.ell) for f in fam.functions)
               for s in itertools.combinations(range(fam.n), fam.k))


def build_covering_family(ground: Sequence[int], s1: int, s2: int, mode: str = "splitter",
                          seed: int = 0) -> CoveringFamily:
    """Covering family over ``ground`` (see module docstring).

    ``mode`` is ``"splitter"`` (the splitter construction), ``"powerset"``
    (all subsets) or ``"auto"`` (power set when ``|ground| ≤ 16``).
    """
    if s1 < 0 or s2 < 0:
        raise ParameterError("s1 and s2 must be non-negative")
    elems = tuple(sorted(set(ground)))
    size = len(elems)
    if mode == "auto":
        mode = "powerset" if size <= POWERSET_LIMIT else "splitter"
    if mode == "powerset":
        if size > 24:
            raise BudgetExceeded(f"power set of {size} elements is too large")
        sets = []
        for bits in range(1 << size):
            sets.append(frozenset(elems[j] for j in range(size) if (bits >> j) & 1))
        return CoveringFamily(elems, s1, s2, tuple(sets))
    if mode != "splitter":
        raise ParameterError(f"unknown covering mode {mode!r}")
    seen: set[frozenset[int]] = set()
    out: list[frozenset[int]] = []

    def emit(x: frozenset[int]) -> None:
        if x not in seen:
            seen.add(x)
            out.append(x)

    emit(frozenset())
    for a in range(0, min(s1, size) + 1):
        for b in range(0, min(s2, size - a) + 1):
            s = a + b
            if s == 0:
                continue
            fam = build_splitter(size, s, s * s, seed=seed)
            for f in fam.functions:
                image = sorted(set(f))
                for ys in itertools.combinations(image, a):
                    yset = set(ys)
                    emit(frozenset(elems[j] for j in range(size) if f[j] in yset))
    log.debug("covering family over %d elements (s1=%d, s2=%d): %d sets", size, s1, s2, len(out))
    return CoveringFamily(elems, s1, s2, tuple(out))


def verify_covering(fam: CoveringFamily) -> bool:
    """Exhaustive check of the covering property.

    Only maximal pairs need checking: enlarging X1 or X2 only makes a pair
    harder to cover.
    """
    size = len(fam.ground)
    masks = np.array(fam.masks(), dtype=np.uint64)
    for a in range(0, min(fam.s1, size) + 1):
        b = min(fam.s2, size - a)
        for x1 in itertools.combinations(range(size), a):
            m1 = sum(1 << fam.ground[j] for j in x1)
            cand = masks[(masks & np.uint64(m1)) == np.uint64(m1)]
            if cand.size == 0:
                return False
            rest = [j for j in range(size) if j not in x1]
            x2s = np.array([sum(1 << fam.ground[j] for j in x2) for x2 in itertools.combinations(rest, b)],
                           dtype=np.uint64)
            hit = (cand[:, None] & x2s[None, :]) == 0
            if not hit.any(axis=0).all():
                return False
    return True
