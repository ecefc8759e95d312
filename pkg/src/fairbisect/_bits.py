"""Small helpers for vertex sets encoded as Python integer bitmasks."""

from __future__ import annotations

from typing import Iterable, Iterator


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def bits_list(mask: int) -> list[int]:
    return list(iter_bits(mask))


def lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def popcount(mask: int) -> int:
    return mask.bit_count()


def iter_submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` in increasing numeric order."""
    verts = bits_list(mask)
    for i in range(1 << len(verts)):
        sub = 0
        j = 0
        while i:
            if i & 1:
                sub |= 1 << verts[j]
            i >>= 1
            j += 1
        yield sub


def components(mask: int, adj: list[int]) -> list[int]:
    """Connected components of the subgraph induced by ``mask``.

    Components are returned sorted by their smallest vertex.
    """
    out = []
    rest = mask
    while rest:
        seed = rest & -rest
        comp = seed
        frontier = seed
        while frontier:
            v = lowest_bit(frontier)
            frontier &= frontier - 1
            new = adj[v] & mask & ~comp
            comp |= new
            frontier |= new
        out.append(comp)
        rest &= ~comp
    return out


def neighborhood(mask: int, adj: list[int]) -> int:
    """Open neighbourhood N(mask)."""
    nb = 0
    for v in iter_bits(mask):
        nb |= adj[v]
    return nb & ~mask
