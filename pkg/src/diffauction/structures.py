"""Named benchmark structures: worked-example graphs, the n=3 and n=4 revenue
table shapes, chains, stars, and seeded random connected instances.

Table shapes ship in their minimal variant (no optional buyer-buyer edges);
`optional_edges` lists the edges whose presence provably does not change any
shipped mechanism's outcome distribution, which the test suite verifies.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .network import StructureProfile


def _structure(seller, edges, n) -> StructureProfile:
    neighbors = {i: set() for i in range(1, n + 1)}
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    return StructureProfile(frozenset(seller), {i: frozenset(a) for i, a in neighbors.items()})


def chain(n: int) -> StructureProfile:
    """s - 1 - 2 - ... - n."""
    return _structure({1}, [(i, i + 1) for i in range(1, n)], n)


def star(n: int) -> StructureProfile:
    """Every buyer adjacent to the seller, no buyer-buyer edges."""
    return _structure(set(range(1, n + 1)), [], n)


def fig1() -> StructureProfile:
    """The eight-buyer worked example: two branches under the seller with a
    shared hub (buyer 4) that alone unlocks buyers 6 and 7."""
    edges = [(1, 3), (1, 4), (2, 4), (2, 5), (4, 6), (4, 7), (5, 8)]
    return _structure({1, 2}, edges, 8)


# The example's bids are given directly in virtual space.
FIG1_VIRTUAL_BIDS = {1: 3.0, 2: 2.0, 3: 4.0, 4: 7.0, 5: 1.0, 6: 9.0, 7: 5.0, 8: 6.0}


def fig2(k: int) -> StructureProfile:
    """Two buyers beside the seller; buyer 1 alone reaches k more (n = k + 2)."""
    if k < 1:
        raise ParseError("fig2 needs k >= 1", context="structure")
    return _structure({1, 2}, [(1, j) for j in range(3, k + 3)], k + 2)


# -- revenue-table shapes (numbered in the table's row-major order) -------------

_TABLE1_N3 = {
    "n3-1": ({1, 2, 3}, [], [(1, 2), (1, 3), (2, 3)]),
    "n3-2": ({1, 2}, [(2, 3)], [(1, 2)]),
    "n3-3": ({1, 2}, [(1, 3), (2, 3)], [(1, 2)]),
    "n3-4": ({1}, [(1, 2), (1, 3)], [(2, 3)]),
    "n3-5": ({1}, [(1, 2), (2, 3)], []),
}

_TABLE1_N4 = {
    "n4-1": ({1, 2, 3, 4}, [], [(1, 3), (2, 4)]),
    "n4-2": ({1, 2, 3}, [(3, 4)], [(1, 2), (1, 3), (2, 3)]),
    "n4-3": ({1, 2, 3}, [(3, 4), (1, 4)], [(1, 2), (1, 3), (2, 3), (2, 4)]),
    "n4-4": ({1, 2}, [(1, 3), (3, 4)], [(1, 2)]),
    "n4-5": ({1, 2}, [(1, 3), (1, 4)], [(1, 2), (3, 4)]),
    "n4-6": ({1, 2}, [(1, 3), (2, 4)], [(1, 2)]),
    "n4-7": ({1, 2}, [(1, 3), (1, 4), (2, 4)], [(1, 2)]),
    "n4-8": ({1, 2}, [(1, 3), (2, 4), (3, 4)], [(1, 2), (1, 4)]),
    "n4-9": ({1, 2}, [(1, 3), (1, 4), (2, 3), (2, 4)], [(1, 2), (3, 4)]),
    "n4-10": ({1, 2}, [(1, 3), (2, 3), (3, 4)], [(1, 2)]),
    "n4-11": ({1}, [(1, 2), (1, 3), (1, 4)], [(2, 3), (2, 4), (3, 4)]),
    "n4-12": ({1}, [(1, 2), (1, 3), (3, 4)], [(2, 3)]),
    "n4-13": ({1}, [(1, 2), (1, 3), (3, 4), (2, 4)], [(2, 3)]),
    "n4-14": ({1}, [(1, 2), (2, 3), (2, 4)], [(3, 4)]),
    "n4-15": ({1}, [(1, 2), (2, 3), (3, 4)], []),
}

TABLE1_N3 = {name: _structure(s, e, 3) for name, (s, e, _) in _TABLE1_N3.items()}
TABLE1_N4 = {name: _structure(s, e, 4) for name, (s, e, _) in _TABLE1_N4.items()}

ALIASES = {
    "star-triangle": "n3-1",
    "cycle-4": "n3-3",
    "chain-3": "n3-5",
    "star-4": "n4-1",
    "chain-4": "n4-15",
}


def optional_edges(name: str) -> list[tuple[int, int]]:
    """Buyer-buyer edges whose presence does not affect the table's mechanisms."""
    name = ALIASES.get(name, name)
    table = _TABLE1_N3 if name in _TABLE1_N3 else _TABLE1_N4
    return list(table[name][2])


def with_extra_edges(structure: StructureProfile, edges) -> StructureProfile:
    neighbors = {i: set(structure.neighbors[i]) for i in structure.buyers}
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    return StructureProfile(structure.seller_neighbors,
                            {i: frozenset(a) for i, a in neighbors.items()})


def random_connected_structure(n: int, rng: np.random.Generator,
                               extra_edge_prob: float = 0.15) -> StructureProfile:
    """Random spanning tree over seller + n buyers, plus Bernoulli extra edges.

    Every buyer is reachable by construction; used for randomized equivalence
    and bound checks.
    """
    parents = {}
    order = list(rng.permutation(n) + 1)
    nodes = [0]  # 0 is the seller
    for i in order:
        parents[i] = int(nodes[int(rng.integers(len(nodes)))])
        nodes.append(i)
    seller = {i for i, p in parents.items() if p == 0}
    edges = [(p, i) for i, p in parents.items() if p != 0]
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            if (u, v) not in edges and (v, u) not in edges and rng.random() < extra_edge_prob:
                edges.append((u, v))
        if rng.random() < extra_edge_prob / 2 and u not in seller:
            seller.add(u)
    return _structure(seller, edges, n)


def named_structures() -> dict[str, StructureProfile]:
    out = {"fig1": fig1(), "fig2-1": fig2(1)}
    out.update(TABLE1_N3)
    out.update(TABLE1_N4)
    for alias, target in ALIASES.items():
        out[alias] = out[target]
    return out


def resolve_structure(token: str) -> tuple[str, StructureProfile]:
    """Look up a structure by name; supports chain-N, star-N, fig2-K families."""
    registry = named_structures()
    if token in registry:
        return ALIASES.get(token, token), registry[token]
    for prefix, builder in (("chain-", chain), ("star-", star), ("fig2-", fig2)):
        if token.startswith(prefix):
            try:
                value = int(token[len(prefix):])
            except ValueError:
                break
            return token, builder(value)
    raise ParseError(f"unknown structure {token!r}", context="structure")
