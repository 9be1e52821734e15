"""Expected-revenue estimation and the experiment harness.

Two estimation modes share the batch engine: seeded Monte Carlo over i.i.d.
valuation profiles, and tensor-product Gauss-Legendre quadrature with every
axis split at the mechanism's reserve breakpoints (the revenue integrand
jumps where a bid crosses a reserve, so panels are aligned there; remaining
kinks are continuous and integrate cleanly). Quadrature carries an error
estimate from re-evaluation at a second node count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import BatchAuction, default_chunk_rows
from .errors import ParseError, PreconditionError
from .mechanisms import MechanismSpec, parse_mechanism_id
from .network import (ReportProfile, StructureProfile, generate_small_world,
                      load_instance_file, valid_without_diffusion)
from .structures import resolve_structure
from .valuation import ValueDistribution, distribution_from_spec

MAX_QUADRATURE_BUYERS = 5


@dataclass(frozen=True)
class RevenueEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    mechanism: str
    structure_id: str
    mode: str = "monte-carlo"

    def __post_init__(self):
        if not (self.mean == self.mean):  # NaN guard
            raise PreconditionError("revenue estimate is NaN")


def _dist_for(dists, i):
    return dists if isinstance(dists, ValueDistribution) else dists[i]


def _pattern(structure: StructureProfile) -> ReportProfile:
    lows = {i: 0.0 for i in structure.buyers}
    reports = {i: (lows[i], structure.neighbors[i]) for i in structure.buyers}
    return ReportProfile(frozenset(structure.seller_neighbors), reports)


def _draw(dists, structure, rng, rows) -> np.ndarray:
    cols = [np.asarray(_dist_for(dists, i).sample(rng, rows), dtype=np.float64)
            for i in structure.buyers]
    return np.column_stack(cols)


def monte_carlo_revenue(spec: MechanismSpec, structure: StructureProfile, dists,
                        samples: int, seed: int, structure_id: str = "",
                        backend=None) -> RevenueEstimate:
    """Average truthful-report revenue over i.i.d. valuation draws; deterministic
    in (structure, mechanism, samples, seed)."""
    estimates = monte_carlo_table([spec], structure, dists, samples, seed,
                                  structure_id=structure_id, backend=backend)
    return estimates[0]


def monte_carlo_table(specs: Sequence[MechanismSpec], structure: StructureProfile,
                      dists, samples: int, seed: int, structure_id: str = "",
                      backend=None) -> list[RevenueEstimate]:
    """All mechanisms evaluated on the same valuation draws (paired seeds)."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    pattern = _pattern(structure)
    auctions = [BatchAuction(pattern, dists, s, backend=backend) for s in specs]
    rng = np.random.default_rng(seed)
    chunk = default_chunk_rows(structure.n)
    sums = [[] for _ in specs]
    sqsums = [[] for _ in specs]
    done = 0
    while done < samples:
        rows = min(chunk, samples - done)
        bids = _draw(dists, structure, rng, rows)
        for t, ba in enumerate(auctions):
            pays = ba.revenues(bids)
            sums[t].append(float(pays.sum()))
            sqsums[t].append(float(np.dot(pays, pays)))
        done += rows
    out = []
    for t, s in enumerate(specs):
        total = math.fsum(sums[t])
        total_sq = math.fsum(sqsums[t])
        mean = total / samples
        var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1)) if samples > 1 else 0.0
        out.append(RevenueEstimate(mean, math.sqrt(var / samples), samples, seed,
                                   s.mech_id, structure_id))
    return out


def monte_carlo_paired_difference(spec_a: MechanismSpec, spec_b: MechanismSpec,
                                  structure: StructureProfile, dists, samples: int,
                                  seed: int, backend=None) -> tuple[float, float]:
    """(mean, stderr) of the per-draw revenue difference A - B under shared draws."""
    pattern = _pattern(structure)
    ba = BatchAuction(pattern, dists, spec_a, backend=backend)
    bb = BatchAuction(pattern, dists, spec_b, backend=backend)
    rng = np.random.default_rng(seed)
    chunk = default_chunk_rows(structure.n)
    sums, sqsums, done = [], [], 0
    while done < samples:
        rows = min(chunk, samples - done)
        bids = _draw(dists, structure, rng, rows)
        diff = ba.revenues(bids) - bb.revenues(bids)
        sums.append(float(diff.sum()))
        sqsums.append(float(np.dot(diff, diff)))
        done += rows
    mean = math.fsum(sums) / samples
    var = max(0.0, (math.fsum(sqsums) - samples * mean * mean) / (samples - 1)) if samples > 1 else 0.0
    return mean, math.sqrt(var / samples)


# -- quadrature -----------------------------------------------------------------


def _axis_rule(dist: ValueDistribution, breakpoints: Sequence[float],
               total_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on the support, split at `breakpoints`,
    `total_nodes` nodes spread evenly over the panels (widest panels take the
    remainder; every panel keeps at least 2)."""
    inner = sorted(b for b in breakpoints if dist.low < b < dist.high)
    edges = [dist.low, *inner, dist.high]
    spans = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    P = len(spans)
    if total_nodes < 2 * P:
        raise PreconditionError(f"{total_nodes} nodes cannot cover {P} panels")
    counts = [total_nodes // P] * P
    widest = sorted(range(P), key=lambda p: (-(spans[p][1] - spans[p][0]), p))
    for t in range(total_nodes - sum(counts)):
        counts[widest[t % P]] += 1
    xs, ws = [], []
    for (a, b), c in zip(spans, counts):
        x, w = np.polynomial.legendre.leggauss(c)
        xs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(xs), np.concatenate(ws)


def _tensor_value(ba: BatchAuction, axes) -> float:
    sizes = [len(x) for x, _ in axes]
    n = len(axes)
    total = int(np.prod(sizes))
    strides = np.ones(n, dtype=np.int64)
    for j in range(n - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    chunk = default_chunk_rows(n)
    partials = []
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bids = np.empty((len(flat), n))
        wts = np.ones(len(flat))
        for j in range(n):
            digit = (flat // strides[j]) % sizes[j]
            bids[:, j] = axes[j][0][digit]
            wts *= axes[j][1][digit]
        partials.append(float(np.dot(wts, ba.revenues(bids))))
    return math.fsum(partials)


def exact_revenue_small(spec: MechanismSpec, structure: StructureProfile, dists,
                        nodes_per_dim: int = 64, error_nodes: int | None = 96,
                        backend=None) -> tuple[float, float | None]:
    """Expected revenue by tensor quadrature over the valuation cube (n <= 5).

    Returns (value at nodes_per_dim, error estimate). The estimate is the
    absolute difference against a second rule with `error_nodes` per axis;
    the integrand is only piecewise smooth, so treat it as indicative.
    """
    if structure.n > MAX_QUADRATURE_BUYERS:
        raise PreconditionError(
            f"quadrature handles n <= {MAX_QUADRATURE_BUYERS}, got {structure.n}")
    pattern = _pattern(structure)
    ba = BatchAuction(pattern, dists, spec, backend=backend)
    max_d = int(ba.compiled.dist.max())

    def axes(total):
        out = []
        for i in structure.buyers:
            d = _dist_for(dists, i)
            out.append(_axis_rule(d, spec.value_breakpoints(d, max_d), total))
        return out

    value = _tensor_value(ba, axes(nodes_per_dim))
    err = None
    if error_nodes:
        err = abs(_tensor_value(ba, axes(error_nodes)) - value)
    return value, err


def quadrature_estimate(spec, structure, dists, nodes_per_dim=64, error_nodes=96,
                        structure_id="", backend=None) -> RevenueEstimate:
    value, err = exact_revenue_small(spec, structure, dists, nodes_per_dim,
                                     error_nodes, backend=backend)
    return RevenueEstimate(value, err if err is not None else 0.0,
                           nodes_per_dim ** structure.n, 0, spec.mech_id,
                           structure_id, mode="quadrature")


# -- structure enumeration -------------------------------------------------------


def enumerate_structures(n: int) -> list[StructureProfile]:
    """Every connected seller-rooted structure on n buyers, one representative
    per rooted-isomorphism class, in deterministic order. Exhaustive over edge
    sets, so n <= 5."""
    if not (1 <= n <= 5):
        raise PreconditionError("structure enumeration handles 1 <= n <= 5")
    seller_edges = [(0, i) for i in range(1, n + 1)]
    buyer_edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    all_edges = seller_edges + buyer_edges
    perms = list(itertools.permutations(range(1, n + 1)))
    seen: set[tuple] = set()
    out: list[StructureProfile] = []
    for mask in range(1, 1 << len(all_edges)):
        edges = [all_edges[b] for b in range(len(all_edges)) if mask >> b & 1]
        adjacency: dict[int, set[int]] = {v: set() for v in range(n + 1)}
        for u, v in edges:
            adjacency[u].add(v)
            adjacency[v].add(u)
        if not adjacency[0]:
            continue
        stack, reached = [0], {0}
        while stack:
            u = stack.pop()
            for v in adjacency[u]:
                if v not in reached:
                    reached.add(v)
                    stack.append(v)
        if len(reached) != n + 1:
            continue
        canon = None
        for perm in perms:
            relabel = (0, *perm)
            mapped = tuple(sorted(tuple(sorted((relabel[u], relabel[v]))) for u, v in edges))
            if canon is None or mapped < canon:
                canon = mapped
        if canon in seen:
            continue
        seen.add(canon)
        out.append(StructureProfile(
            frozenset(adjacency[0]),
            {i: frozenset(adjacency[i] - {0}) for i in range(1, n + 1)}))
    return out


def mechanism_signature(structure: StructureProfile) -> tuple:
    """Canonical form of the data the shipped mechanisms actually consume:
    each buyer's diffusion distance and audience-without-her-diffusion.

    Structures sharing a signature get identical outcome distributions from
    every mechanism here, which is what collapses the revenue table's
    optional-edge variants into one class."""
    report = _pattern(structure)
    from .network import diffusion_distances
    dist = diffusion_distances(report)
    audiences = {i: valid_without_diffusion(report, i) for i in structure.buyers}
    best = None
    for perm in itertools.permutations(structure.buyers):
        relabel = {old: new for old, new in zip(structure.buyers, perm)}
        desc = [None] * structure.n
        for i in structure.buyers:
            desc[relabel[i] - 1] = (dist[i], tuple(sorted(relabel[j] for j in audiences[i])))
        candidate = tuple(desc)
        if best is None or candidate < best:
            best = candidate
    return best


def equivalence_classes(structures: Sequence[StructureProfile]
                        ) -> dict[tuple, list[StructureProfile]]:
    classes: dict[tuple, list[StructureProfile]] = {}
    for s in structures:
        classes.setdefault(mechanism_signature(s), []).append(s)
    return classes


# -- ratios and studies -----------------------------------------------------------


def approximation_ratio(spec: MechanismSpec, structure: StructureProfile, dists,
                        mode: str = "monte-carlo", samples: int = 100_000,
                        seed: int = 0, nodes_per_dim: int = 64,
                        backend=None) -> float:
    """Mechanism revenue over the all-buyers Myerson benchmark, same mode and seed."""
    benchmark = parse_mechanism_id("myerson-all")
    if mode in ("monte-carlo", "mc"):
        est = monte_carlo_table([spec, benchmark], structure, dists, samples, seed,
                                backend=backend)
        num, den = est[0].mean, est[1].mean
    elif mode in ("quadrature", "quad"):
        num, _ = exact_revenue_small(spec, structure, dists, nodes_per_dim, None,
                                     backend=backend)
        den, _ = exact_revenue_small(benchmark, structure, dists, nodes_per_dim, None,
                                     backend=backend)
    else:
        raise PreconditionError(f"unknown mode {mode!r}")
    if den <= 0.0:
        raise PreconditionError("benchmark revenue is zero; ratio undefined")
    return num / den


def small_world_study(sizes: Sequence[int], structures_per_size: int, draws: int,
                      seed: int, mech_ids: Sequence[str], dists,
                      degree: int = 2, rewire: float = 0.5,
                      backend=None) -> list[RevenueEstimate]:
    """Average revenue across sampled small-world structures for each size.

    Emits one row per (structure, mechanism) plus, per (size, mechanism), an
    aggregate row whose stderr is the spread of the structure means.
    """
    specs = [parse_mechanism_id(m) for m in mech_ids]
    rows: list[RevenueEstimate] = []
    for n in sizes:
        per_mech: dict[str, list[float]] = {s.mech_id: [] for s in specs}
        for k in range(structures_per_size):
            struct_seed = int(np.random.SeedSequence([seed, n, k]).generate_state(1)[0])
            structure = generate_small_world(n, degree, rewire, struct_seed)
            sid = f"sw-n{n}-{k}"
            ests = monte_carlo_table(specs, structure, dists, draws, struct_seed,
                                     structure_id=sid, backend=backend)
            rows.extend(ests)
            for est in ests:
                per_mech[est.mechanism].append(est.mean)
        for s in specs:
            means = np.array(per_mech[s.mech_id])
            spread = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
            rows.append(RevenueEstimate(float(means.mean()), spread,
                                        structures_per_size * draws, seed, s.mech_id,
                                        f"sw-n{n}-aggregate"))
    return rows


# -- config-driven reports ---------------------------------------------------------


@dataclass
class ExperimentConfig:
    structures: list[tuple[str, StructureProfile]]
    mechanisms: list[MechanismSpec]
    dist: ValueDistribution
    samples: int = 100_000
    seed: int = 0
    mode: str = "monte-carlo"
    quad_nodes: int = 64
    quad_check_nodes: int | None = 96
    aggregate_groups: dict[str, list[str]] = field(default_factory=dict)


_MODES = {"monte-carlo": "monte-carlo", "mc": "monte-carlo",
          "quadrature": "quadrature", "quad": "quadrature"}


def parse_config(data: dict, base_dir: str = ".") -> ExperimentConfig:
    import os

    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object", context="$")
    structures: list[tuple[str, StructureProfile]] = []
    aggregate_groups: dict[str, list[str]] = {}
    entries = data.get("structures")
    if not isinstance(entries, list) or not entries:
        raise ParseError("non-empty list required", context="structures")
    for pos, entry in enumerate(entries):
        ctx = f"structures[{pos}]"
        if not isinstance(entry, dict):
            raise ParseError("entry must be an object", context=ctx)
        if "name" in entry:
            sid, structure = resolve_structure(entry["name"])
            structures.append((sid, structure))
        elif "file" in entry:
            path = os.path.join(base_dir, entry["file"])
            structure, _ = load_instance_file(path, seller_node=entry.get("seller_node"))
            structures.append((os.path.splitext(os.path.basename(path))[0], structure))
        elif "inline" in entry:
            from .network import parse_instance
            import json as _json
            structure, _ = parse_instance(_json.dumps(entry["inline"]))
            structures.append((entry.get("id", f"inline-{pos}"), structure))
        elif "generator" in entry:
            gen = entry["generator"]
            if gen.get("kind") != "small-world":
                raise ParseError(f"unknown generator kind {gen.get('kind')!r}",
                                 context=f"{ctx}.generator.kind")
            try:
                n = int(gen["n"])
                degree = int(gen.get("degree", 2))
                rewire = float(gen.get("rewire", 0.5))
                count = int(gen.get("count", 1))
                gseed = int(gen.get("seed", data.get("seed", 0)))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad generator parameters: {exc}",
                                 context=f"{ctx}.generator") from exc
            group = f"sw-n{n}-seed{gseed}"
            ids = []
            for k in range(count):
                struct_seed = int(np.random.SeedSequence([gseed, n, k]).generate_state(1)[0])
                structure = generate_small_world(n, degree, rewire, struct_seed,
                                                 attach=gen.get("attach", "designate"),
                                                 attach_k=int(gen.get("attach_k", 1)))
                sid = f"{group}-{k}"
                structures.append((sid, structure))
                ids.append(sid)
            aggregate_groups[group] = ids
        else:
            raise ParseError("entry needs one of name/file/inline/generator", context=ctx)
    mech_entries = data.get("mechanisms")
    if not isinstance(mech_entries, list) or not mech_entries:
        mechanisms: list[MechanismSpec] = []
    else:
        mechanisms = [parse_mechanism_id(str(m)) for m in mech_entries]
    dist = distribution_from_spec(data.get("distribution", {"kind": "uniform"}))
    mode_token = str(data.get("mode", "monte-carlo"))
    if mode_token not in _MODES:
        raise ParseError(f"unknown mode {mode_token!r}", context="mode")
    return ExperimentConfig(
        structures=structures,
        mechanisms=mechanisms,
        dist=dist,
        samples=int(data.get("samples", 100_000)),
        seed=int(data.get("seed", 0)),
        mode=_MODES[mode_token],
        quad_nodes=int(data.get("quad_nodes", 64)),
        quad_check_nodes=(int(data["quad_check_nodes"])
                          if data.get("quad_check_nodes") is not None else 96),
        aggregate_groups=aggregate_groups,
    )


def run_table(config: ExperimentConfig, backend=None) -> list[RevenueEstimate]:
    rows: list[RevenueEstimate] = []
    by_id: dict[str, list[RevenueEstimate]] = {}
    for sid, structure in config.structures:
        if config.mode == "quadrature":
            if structure.n > MAX_QUADRATURE_BUYERS:
                raise PreconditionError(
                    f"quadrature mode requires n <= {MAX_QUADRATURE_BUYERS}; "
                    f"structure {sid} has n = {structure.n}")
            ests = [quadrature_estimate(spec, structure, config.dist,
                                        config.quad_nodes, config.quad_check_nodes,
                                        structure_id=sid, backend=backend)
                    for spec in config.mechanisms]
        else:
            ests = monte_carlo_table(config.mechanisms, structure, config.dist,
                                     config.samples, config.seed, structure_id=sid,
                                     backend=backend)
        rows.extend(ests)
        by_id[sid] = ests
    for group, ids in config.aggregate_groups.items():
        for spec in config.mechanisms:
            means = np.array([e.mean for sid in ids for e in by_id[sid]
                              if e.mechanism == spec.mech_id])
            spread = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
            rows.append(RevenueEstimate(float(means.mean()), spread,
                                        config.samples * len(ids), config.seed,
                                        spec.mech_id, f"{group}-aggregate",
                                        mode=config.mode))
    return rows


def csv_report(rows: Sequence[RevenueEstimate],
               structure_sizes: dict[str, int] | None = None) -> str:
    lines = ["structure_id,n,mechanism,mode,mean,stderr,samples,seed"]
    sizes = structure_sizes or {}
    for r in rows:
        lines.append(f"{r.structure_id},{sizes.get(r.structure_id, '')},{r.mechanism},"
                     f"{r.mode},{r.mean!r},{r.stderr!r},{r.samples},{r.seed}")
    return "\n".join(lines) + "\n"


def table_report(config: ExperimentConfig, backend=None) -> str:
    rows = run_table(config, backend=backend)
    sizes = {sid: structure.n for sid, structure in config.structures}
    for group, ids in config.aggregate_groups.items():
        if ids:
            sizes[f"{group}-aggregate"] = sizes[ids[0]]
    return csv_report(rows, sizes)
