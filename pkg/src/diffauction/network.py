"""Seller-rooted social network model and the reachability semantics of diffusion.

Buyers carry dense integer ids 1..n; the seller is a distinguished root, not a
buyer. A buyer is *valid* when a chain of declared neighbor sets starting from
the seller's neighbors reaches her; only the declarations of buyers who are
themselves reached are ever followed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import json

from .errors import ParseError, PreconditionError


class BuyerReport(NamedTuple):
    bid: float
    declared: frozenset[int]


@dataclass(frozen=True)
class StructureProfile:
    """The true network: the seller's neighbor set plus each buyer's neighbor set.

    The underlying social graph is undirected, so buyer neighbor sets must be
    symmetric; declared reports may later shrink them asymmetrically.
    """

    seller_neighbors: frozenset[int]
    neighbors: Mapping[int, frozenset[int]]

    def __post_init__(self):
        object.__setattr__(self, "seller_neighbors", frozenset(self.seller_neighbors))
        object.__setattr__(self, "neighbors",
                           {i: frozenset(adj) for i, adj in self.neighbors.items()})
        ids = sorted(self.neighbors)
        n = len(ids)
        if ids != list(range(1, n + 1)):
            raise ParseError(f"buyer ids must be dense 1..n, got {ids[:10]}...", context="buyers")
        if not self.seller_neighbors <= set(ids):
            raise ParseError("seller_neighbors contains unknown buyer ids", context="seller_neighbors")
        for i, adj in self.neighbors.items():
            if i in adj:
                raise ParseError(f"buyer {i} lists itself as a neighbor", context=f"buyers[{i}]")
            for j in adj:
                if j not in self.neighbors:
                    raise ParseError(f"buyer {i} lists unknown neighbor {j}", context=f"buyers[{i}]")
                if i not in self.neighbors[j]:
                    raise ParseError(f"edge {i}-{j} is not symmetric", context=f"buyers[{i}]")

    @property
    def n(self) -> int:
        return len(self.neighbors)

    @property
    def buyers(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def truthful_report(self, valuations: Mapping[int, float]) -> "ReportProfile":
        reports = {i: BuyerReport(float(valuations[i]), self.neighbors[i]) for i in self.buyers}
        return ReportProfile(self.seller_neighbors, reports)


@dataclass(frozen=True)
class ReportProfile:
    """What the mechanism actually sees: each buyer's bid and declared neighbors."""

    seller_neighbors: frozenset[int]
    reports: Mapping[int, BuyerReport]

    def __post_init__(self):
        object.__setattr__(self, "seller_neighbors", frozenset(self.seller_neighbors))
        object.__setattr__(
            self, "reports",
            {i: BuyerReport(float(r[0]), frozenset(r[1])) for i, r in self.reports.items()})

    @property
    def n(self) -> int:
        return len(self.reports)

    @property
    def buyers(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def bid(self, i: int) -> float:
        return self.reports[i].bid

    def declared(self, i: int) -> frozenset[int]:
        return self.reports[i].declared

    def with_report(self, i: int, bid: float, declared: Iterable[int]) -> "ReportProfile":
        reports = dict(self.reports)
        reports[i] = BuyerReport(float(bid), frozenset(declared))
        return ReportProfile(self.seller_neighbors, reports)


def _reachable(report: ReportProfile, muted: int | None = None) -> set[int]:
    """BFS from the seller along declared sets; `muted`'s declarations are skipped."""
    seen: set[int] = set()
    queue = deque(sorted(report.seller_neighbors))
    while queue:
        i = queue.popleft()
        if i in seen:
            continue
        seen.add(i)
        if i == muted:
            continue
        for j in report.reports[i].declared:
            if j not in seen:
                queue.append(j)
    return seen


def valid_buyers(report: ReportProfile) -> frozenset[int]:
    """V(t'): buyers reachable from the seller through declared neighbor sets."""
    return frozenset(_reachable(report))


def valid_without_diffusion(report: ReportProfile, i: int) -> frozenset[int]:
    """V_{-r_i'}(t'): valid buyers when i's declared set is replaced by the empty set."""
    if i not in report.reports:
        raise PreconditionError(f"unknown buyer {i}")
    return frozenset(_reachable(report, muted=i))


def valid_without_buyer(report: ReportProfile, i: int) -> frozenset[int]:
    """V_{-i}(t') = V_{-r_i'}(t') minus i herself."""
    return valid_without_diffusion(report, i) - {i}


def critical_buyers(report: ReportProfile, i: int) -> frozenset[int]:
    """C(i): valid buyers other than i whose diffusion is on every path to i.

    Computed by the removal-reachability test: j is critical for i exactly
    when i drops out of the valid set once j stops diffusing.
    """
    valid = valid_buyers(report)
    if i not in valid:
        raise PreconditionError(f"buyer {i} is not valid")
    return frozenset(j for j in valid if j != i and i not in _reachable(report, muted=j))


def diffusion_distance(report: ReportProfile, i: int) -> int:
    """Shortest hop count from the seller to i along declared sets (seller's neighbors: 1)."""
    dist = diffusion_distances(report)
    if i not in dist:
        raise PreconditionError(f"buyer {i} is not valid")
    return dist[i]


def diffusion_distances(report: ReportProfile) -> dict[int, int]:
    """BFS depth of every valid buyer."""
    dist: dict[int, int] = {}
    frontier = sorted(report.seller_neighbors)
    depth = 1
    while frontier:
        nxt: set[int] = set()
        for i in frontier:
            if i in dist:
                continue
            dist[i] = depth
            nxt.update(j for j in report.reports[i].declared if j not in dist)
        frontier = sorted(nxt)
        depth += 1
    return dist


# -- generation ---------------------------------------------------------------


def generate_small_world(n: int, initial_degree: int, rewire_prob: float, seed: int,
                         attach: str = "designate", attach_k: int = 1,
                         max_retries: int = 1000) -> StructureProfile:
    """Watts-Strogatz ring lattice with rewiring, rooted at a seller.

    attach="designate": generate n+1 nodes, the seller takes over one node's
    position (adopting its neighbor set) and that node is removed, leaving n
    buyers. attach="random": generate n buyer nodes and wire the seller to
    attach_k uniformly random buyers. Graphs whose buyers are not all
    reachable are rejected and regenerated with the next seed offset, so the
    result is deterministic in (n, degree, p, seed).
    """
    import networkx as nx

    if n < 3:
        raise PreconditionError("small-world generation needs n >= 3")
    if initial_degree % 2 != 0 or initial_degree >= n:
        raise PreconditionError("initial_degree must be even and < n")
    if not (0.0 <= rewire_prob <= 1.0):
        raise PreconditionError("rewire_prob must lie in [0, 1]")
    if attach not in ("designate", "random"):
        raise PreconditionError(f"unknown attach mode {attach!r}")
    if attach == "random" and not (1 <= attach_k <= n):
        raise PreconditionError("attach_k must lie in 1..n")

    for offset in range(max_retries):
        gen_seed = (int(seed) + offset) % 2**64
        if attach == "designate":
            graph = nx.watts_strogatz_graph(n + 1, initial_degree, rewire_prob,
                                            seed=gen_seed & 0x7FFFFFFF)
            others = [v for v in graph.nodes if v != 0]
            relabel = {v: k + 1 for k, v in enumerate(sorted(others))}
            seller_adj = frozenset(relabel[v] for v in graph.neighbors(0))
            neighbors = {relabel[v]: frozenset(relabel[u] for u in graph.neighbors(v) if u != 0)
                         for v in others}
        else:
            graph = nx.watts_strogatz_graph(n, initial_degree, rewire_prob,
                                            seed=gen_seed & 0x7FFFFFFF)
            rng = __import__("numpy").random.default_rng(gen_seed)
            picks = rng.choice(n, size=attach_k, replace=False)
            seller_adj = frozenset(int(p) + 1 for p in picks)
            neighbors = {v + 1: frozenset(u + 1 for u in graph.neighbors(v)) for v in graph.nodes}
        structure = StructureProfile(seller_adj, neighbors)
        report = structure.truthful_report({i: 0.0 for i in structure.buyers})
        if len(valid_buyers(report)) == structure.n and structure.seller_neighbors:
            return structure
    raise PreconditionError(
        f"no connected small-world graph found in {max_retries} seed offsets from {seed}")


# -- instance files -----------------------------------------------------------


def parse_instance(text: str) -> tuple[StructureProfile, dict[int, float] | None]:
    """Parse the JSON instance format; returns the structure and optional valuations."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", context=f"line {exc.lineno}") from exc
    if not isinstance(data, dict):
        raise ParseError("instance must be a JSON object", context="$")
    if "seller_neighbors" not in data or "buyers" not in data:
        raise ParseError("instance needs 'seller_neighbors' and 'buyers'", context="$")
    seen: set[int] = set()
    neighbors: dict[int, frozenset[int]] = {}
    valuations: dict[int, float] = {}
    for pos, entry in enumerate(data["buyers"]):
        if "id" not in entry:
            raise ParseError("buyer entry missing 'id'", context=f"buyers[{pos}]")
        i = int(entry["id"])
        if i in seen:
            raise ParseError(f"duplicate buyer id {i}", context=f"buyers[{pos}]")
        seen.add(i)
        neighbors[i] = frozenset(int(j) for j in entry.get("neighbors", []))
        if entry.get("valuation") is not None:
            valuations[i] = float(entry["valuation"])
    structure = StructureProfile(frozenset(int(j) for j in data["seller_neighbors"]), neighbors)
    return structure, (valuations or None)


def serialize_instance(structure: StructureProfile,
                       valuations: Mapping[int, float] | None = None) -> str:
    buyers = []
    for i in structure.buyers:
        entry = {"id": i, "neighbors": sorted(structure.neighbors[i])}
        if valuations and i in valuations:
            entry["valuation"] = valuations[i]
        buyers.append(entry)
    payload = {"seller_neighbors": sorted(structure.seller_neighbors), "buyers": buyers}
    return json.dumps(payload, indent=2) + "\n"


def parse_edge_list(text: str, seller_node: int | str | None = None
                    ) -> tuple[StructureProfile, dict[int, int]]:
    """Parse `u v` pairs, one per line; token `s` is the seller, `#` starts a comment.

    When the file has no `s` token (e.g. a raw social-network edge list), pass
    `seller_node` to designate which node plays the seller. Node labels are
    relabeled to dense buyer ids 1..n in sorted order; the mapping from
    original label to buyer id is returned alongside.
    """
    seller_key = str(seller_node) if seller_node is not None else "s"
    adjacency: dict[str, set[str]] = {}
    seller_adj: set[str] = set()
    saw_seller = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {raw!r}", context=f"line {lineno}")
        u, v = parts
        if u == v:
            raise ParseError(f"self-loop {u!r}", context=f"line {lineno}")
        endpoints = []
        for tok in (u, v):
            if tok == seller_key:
                saw_seller = True
                endpoints.append(None)
            else:
                if tok != "s":
                    try:
                        int(tok)
                    except ValueError:
                        raise ParseError(f"node label {tok!r} is not an integer",
                                         context=f"line {lineno}") from None
                endpoints.append(tok)
        a, b = endpoints
        if a is None and b is None:
            raise ParseError("edge connects the seller to itself", context=f"line {lineno}")
        if a is None:
            seller_adj.add(b)
            adjacency.setdefault(b, set())
        elif b is None:
            seller_adj.add(a)
            adjacency.setdefault(a, set())
        else:
            adjacency.setdefault(a, set()).add(b)
            adjacency.setdefault(b, set()).add(a)
    if not saw_seller:
        raise ParseError(
            "no seller found: use token 's' or designate one with seller_node/--seller-node")
    labels = sorted(adjacency, key=lambda t: int(t))
    id_map = {lab: k + 1 for k, lab in enumerate(labels)}
    structure = StructureProfile(
        frozenset(id_map[lab] for lab in seller_adj),
        {id_map[lab]: frozenset(id_map[x] for x in adjacency[lab]) for lab in labels})
    return structure, {int(lab): i for lab, i in id_map.items()}


def serialize_edge_list(structure: StructureProfile) -> str:
    lines = [f"s {i}" for i in sorted(structure.seller_neighbors)]
    for i in structure.buyers:
        for j in sorted(structure.neighbors[i]):
            if i < j:
                lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def load_instance_file(path: str, seller_node=None
                       ) -> tuple[StructureProfile, dict[int, float] | None]:
    """Dispatch on extension: .json instance format, anything else edge list."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if path.endswith(".json"):
        return parse_instance(text)
    structure, _ = parse_edge_list(text, seller_node=seller_node)
    return structure, None
