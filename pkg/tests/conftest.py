from __future__ import annotations

import random

import pytest
from hypothesis import settings, strategies as st

from fairbisect.graph_core import ColoredGraph, FairInstance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def graph_from(n: int, edges, colors=None, c: int | None = None) -> ColoredGraph:
    return ColoredGraph.from_edges(n, edges, colors, c)


def path_graph(n: int) -> ColoredGraph:
    return graph_from(n, [(i, i + 1) for i in range(n - 1)])


def clique(n: int) -> ColoredGraph:
    return graph_from(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def random_connected_graph(n: int, extra: int, seed: int) -> ColoredGraph:
    """Random spanning tree plus ``extra`` further random edges."""
    rng = random.Random(f"conn/{n}/{extra}/{seed}")
    edges = {(rng.randrange(v), v) for v in range(1, n)}
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    edges |= set(rng.sample(pairs, min(extra, len(pairs))))
    return graph_from(n, edges)


def random_tree_parent(n: int, seed: int) -> dict[int, int | None]:
    rng = random.Random(f"tree/{n}/{seed}")
    return {0: None, **{v: rng.randrange(v) for v in range(1, n)}}


@st.composite
def colored_graphs(draw, max_n: int = 8, max_c: int = 3, min_n: int = 0):
    n = draw(st.integers(min_n, max_n))
    c = draw(st.integers(1, max_c))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    colors = draw(st.lists(st.integers(1, c), min_size=n, max_size=n))
    return graph_from(n, edges, colors, c)


@st.composite
def fair_instances(draw, max_n: int = 8, max_c: int = 3, max_k: int = 3):
    g = draw(colored_graphs(max_n=max_n, max_c=max_c))
    side = draw(st.integers(0, (1 << g.n) - 1)) if g.n else 0
    k = draw(st.integers(0, max_k))
    return FairInstance(g, k, g.profile_of_mask(side))


@pytest.fixture
def two_disjoint_edges() -> FairInstance:
    """Vertices 0-1 (colour 1) and 2-3 (colour 2), target (2, 0), k = 0."""
    g = graph_from(4, [(0, 1), (2, 3)], [1, 1, 2, 2], 2)
    return FairInstance(g, 0, (2, 0))
