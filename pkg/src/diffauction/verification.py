"""Property-based verification of individual rationality, incentive
compatibility, and the diffusion-auction axioms by exhaustive deviation
enumeration at small scale.

Exhaustive mode enumerates every grid valuation assignment, every deviating
bid on the grid, and every declared subset of each buyer's true neighbors
(joint bid+subset deviations). Grid checks are evidence, not proof: the real
type space is continuous. Mechanisms known to the batch engine are checked
vectorized; anything exposing only `.run(report, dists)` (e.g. the shipped
broken mutants) goes through the generic per-profile path.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import BatchAuction
from .errors import PreconditionError
from .mechanisms import EMPTY_OUTCOME, MechanismSpec, Outcome
from .network import ReportProfile, StructureProfile, valid_buyers
from .valuation import ValueDistribution

UTILITY_TOL = 1e-12


@dataclass(frozen=True)
class DeviationGrid:
    """Finite surrogate for the continuous type space."""

    bid_grid: tuple[float, ...]
    neighbor_strategy: str = "all-subsets"
    buyer_cap: int = 5
    max_degree: int = 6

    def __post_init__(self):
        grid = tuple(sorted(set(float(b) for b in self.bid_grid)))
        if len(grid) < 2:
            raise PreconditionError("bid grid needs at least 2 points")
        object.__setattr__(self, "bid_grid", grid)

    @classmethod
    def make(cls, dist: ValueDistribution, points: int = 11, **kw) -> "DeviationGrid":
        """Uniform grid over the support plus the reserve and its one-step
        neighborhood, where violations concentrate."""
        base = np.linspace(dist.low, dist.high, points)
        step = (dist.high - dist.low) / (points - 1)
        tau = dist.reserve()
        extra = [tau, tau - step, tau + step]
        grid = sorted({round(float(v), 15) for v in [*base, *extra]
                       if dist.low <= v <= dist.high})
        return cls(tuple(grid), **kw)

    def check_exhaustive_bounds(self, structure: StructureProfile):
        if structure.n > self.buyer_cap:
            raise PreconditionError(
                f"exhaustive mode handles n <= {self.buyer_cap} (got {structure.n}); "
                "use mode='sampled'")
        degree = max((len(structure.neighbors[i]) for i in structure.buyers), default=0)
        if degree > self.max_degree:
            raise PreconditionError(
                f"exhaustive mode handles degree <= {self.max_degree} (got {degree}); "
                "use mode='sampled'")


@dataclass(frozen=True)
class Violation:
    buyer: int
    truthful_utility: float
    deviating_utility: float
    deviation: tuple[float, tuple[int, ...]]   # (bid, declared set)
    instance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "buyer": self.buyer,
            "truthful_utility": self.truthful_utility,
            "deviating_utility": self.deviating_utility,
            "deviation": {"bid": self.deviation[0], "declared": list(self.deviation[1])},
            "instance": self.instance,
        }


def _dist_for(dists, i):
    return dists if isinstance(dists, ValueDistribution) else dists[i]


def _supports_engine(mechanism) -> bool:
    return isinstance(mechanism, MechanismSpec)


def _profile_matrix(grid: Sequence[float], n: int) -> np.ndarray:
    """All grid^n valuation assignments, row-major in buyer-1-fastest-last order."""
    g = np.asarray(grid, dtype=np.float64)
    mesh = np.meshgrid(*[np.arange(len(g))] * n, indexing="ij")
    digits = np.stack(mesh, axis=-1).reshape(-1, n)
    return g[digits]


def _run_rows(mechanism, structure: StructureProfile, dists, bids: np.ndarray,
              declare_override: tuple[int, frozenset] | None = None):
    """(winners, winner payments) over rows, via the engine or the generic loop."""
    reports = {i: (0.0, structure.neighbors[i]) for i in structure.buyers}
    if declare_override is not None:
        i, subset = declare_override
        reports[i] = (0.0, subset)
    pattern = ReportProfile(frozenset(structure.seller_neighbors), reports)
    if _supports_engine(mechanism):
        return BatchAuction(pattern, dists, mechanism).run(bids)
    winners = np.full(bids.shape[0], -1, dtype=np.int32)
    pays = np.zeros(bids.shape[0])
    for r in range(bids.shape[0]):
        rep = {i: (bids[r, i - 1], pattern.declared(i)) for i in pattern.buyers}
        out = mechanism.run(ReportProfile(pattern.seller_neighbors, rep), dists)
        if out.winner is not None:
            winners[r] = out.winner
            pays[r] = out.payment(out.winner)
    return winners, pays


def check_ir(mechanism, structure: StructureProfile, dists,
             grid: DeviationGrid) -> list[Violation]:
    """Truthful utility must be non-negative at every grid valuation assignment."""
    grid.check_exhaustive_bounds(structure)
    n = structure.n
    bids = _profile_matrix(grid.bid_grid, n)
    violations: list[Violation] = []
    if _supports_engine(mechanism):
        winners, pays = _run_rows(mechanism, structure, dists, bids)
        won = winners > 0
        util = np.where(won, bids[np.arange(len(bids)), np.maximum(winners - 1, 0)] - pays, 0.0)
        for r in np.nonzero(util < -UTILITY_TOL)[0]:
            i = int(winners[r])
            violations.append(Violation(
                i, float(util[r]), 0.0, (float(bids[r, i - 1]), tuple(sorted(structure.neighbors[i]))),
                {"valuations": [float(v) for v in bids[r]]}))
        return violations
    # generic path: any buyer may be charged, not just the winner
    for row in bids:
        vals = {i: float(row[i - 1]) for i in structure.buyers}
        out = mechanism.run(structure.truthful_report(vals), dists)
        for i in structure.buyers:
            util = (vals[i] if out.winner == i else 0.0) - out.payment(i)
            if util < -UTILITY_TOL:
                violations.append(Violation(
                    i, float(util), 0.0, (vals[i], tuple(sorted(structure.neighbors[i]))),
                    {"valuations": list(vals.values())}))
    return violations


def _subsets(items: frozenset[int]):
    items = sorted(items)
    for size in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, size))


def check_ic(mechanism, structure: StructureProfile, dists, grid: DeviationGrid,
             mode: str = "exhaustive", samples: int = 2000, seed: int = 0
             ) -> list[Violation]:
    """Truthful reporting must dominate every (bid, declared subset) deviation.

    Exhaustive mode quantifies over all grid valuation assignments for all
    buyers, all deviating grid bids, and all declared subsets of the
    deviator's true neighbor set; other buyers stay truthful.
    """
    if mode == "sampled":
        return _check_ic_sampled(mechanism, structure, dists, grid, samples, seed)
    if mode != "exhaustive":
        raise PreconditionError(f"unknown mode {mode!r}")
    grid.check_exhaustive_bounds(structure)
    n = structure.n
    g = np.asarray(grid.bid_grid)
    G = len(g)
    shape = (G,) * n
    bids = _profile_matrix(g, n)
    w_truth, p_truth = _run_rows(mechanism, structure, dists, bids)
    w_truth = w_truth.reshape(shape)
    p_truth = p_truth.reshape(shape)
    axis_vals = [g.reshape([-1 if a == ax else 1 for a in range(n)])
                 for ax in range(n)]
    violations: list[Violation] = []
    for i in sorted(structure.buyers):
        u_truth = np.where(w_truth == i, axis_vals[i - 1] - p_truth, 0.0)
        for subset in _subsets(structure.neighbors[i]):
            w_dev, p_dev = _run_rows(mechanism, structure, dists, bids,
                                     declare_override=(i, subset))
            w_dev = w_dev.reshape(shape)
            p_dev = p_dev.reshape(shape)
            for b_idx, b in enumerate(g):
                win_slice = np.take(w_dev, b_idx, axis=i - 1) == i
                pay_slice = np.take(p_dev, b_idx, axis=i - 1)
                # broadcast the deviator's true valuation back over her axis
                u_dev = np.where(np.expand_dims(win_slice, i - 1),
                                 axis_vals[i - 1] - np.expand_dims(pay_slice, i - 1), 0.0)
                bad = u_dev > u_truth + UTILITY_TOL
                if not bad.any():
                    continue
                for index in np.argwhere(bad):
                    vals = {j: float(g[index[j - 1]]) for j in structure.buyers}
                    violations.append(Violation(
                        i, float(u_truth[tuple(index)]), float(u_dev[tuple(index)]),
                        (float(b), tuple(sorted(subset))),
                        {"valuations": [vals[j] for j in structure.buyers]}))
    violations.sort(key=lambda v: (v.buyer, v.deviation[0], v.deviation[1],
                                   tuple(v.instance.get("valuations", ()))))
    return violations


def _check_ic_sampled(mechanism, structure, dists, grid, samples, seed):
    rng = np.random.default_rng(seed)
    g = list(grid.bid_grid)
    violations = []
    for _ in range(samples):
        vals = {i: float(rng.choice(g)) for i in structure.buyers}
        truth = structure.truthful_report(vals)
        out_t = mechanism.run(truth, dists)
        i = int(rng.integers(1, structure.n + 1))
        u_truth = (vals[i] if out_t.winner == i else 0.0) - out_t.payment(i)
        bid = float(rng.choice(g))
        neigh = sorted(structure.neighbors[i])
        mask = int(rng.integers(0, 1 << len(neigh)))
        subset = frozenset(neigh[b] for b in range(len(neigh)) if mask >> b & 1)
        out_d = mechanism.run(truth.with_report(i, bid, subset), dists)
        u_dev = (vals[i] if out_d.winner == i else 0.0) - out_d.payment(i)
        if u_dev > u_truth + UTILITY_TOL:
            violations.append(Violation(i, u_truth, u_dev, (bid, tuple(sorted(subset))),
                                        {"valuations": [vals[j] for j in structure.buyers]}))
    return violations


@dataclass(frozen=True)
class AxiomReport:
    passed: bool
    trials: int
    failures: tuple[str, ...] = ()


def check_axioms(mechanism, structure: StructureProfile, dists, trials: int,
                 seed: int = 0) -> AxiomReport:
    """Invalid buyers get nothing, pay nothing, and cannot influence the outcome.

    Samples reports with random declination subsets (so some buyers become
    invalid), then resamples the invalid buyers' reports and requires the
    outcome to be bitwise unchanged.
    """
    rng = np.random.default_rng(seed)
    run = mechanism.run
    failures: list[str] = []
    for t in range(trials):
        reports = {}
        for i in structure.buyers:
            d = _dist_for(dists, i)
            neigh = sorted(structure.neighbors[i])
            mask = int(rng.integers(0, 1 << len(neigh)))
            subset = frozenset(neigh[b] for b in range(len(neigh)) if mask >> b & 1)
            reports[i] = (float(d.sample(rng)), subset)
        report = ReportProfile(frozenset(structure.seller_neighbors), reports)
        valid = valid_buyers(report)
        invalid = [i for i in structure.buyers if i not in valid]
        outcome = run(report, dists)
        if outcome.winner is not None and outcome.winner in invalid:
            failures.append(f"trial {t}: invalid buyer {outcome.winner} won")
        for i in invalid:
            if outcome.payment(i) != 0.0:
                failures.append(f"trial {t}: invalid buyer {i} charged {outcome.payment(i)}")
        if invalid:
            perturbed = dict(reports)
            for i in invalid:
                d = _dist_for(dists, i)
                neigh = sorted(structure.neighbors[i])
                mask = int(rng.integers(0, 1 << len(neigh)))
                subset = frozenset(neigh[b] for b in range(len(neigh)) if mask >> b & 1)
                perturbed[i] = (float(d.sample(rng)), subset)
            again = run(ReportProfile(frozenset(structure.seller_neighbors), perturbed), dists)
            if again.winner != outcome.winner or dict(again.payments) != dict(outcome.payments):
                failures.append(f"trial {t}: outcome depends on invalid buyers' reports")
    return AxiomReport(not failures, trials, tuple(failures))


def definitional_cwm_oracle(report: ReportProfile, dists) -> Outcome:
    """Ground-truth closest-winner outcome straight from the definitions.

    Rebuilds the audience-without-each-buyer by explicit search, tests argmax
    membership per buyer, and picks the potential winner nearest the seller.
    Quadratic and deliberately shortcut-free; used to referee the optimized
    implementations.
    """
    def reach(muted=None):
        seen = set()
        frontier = deque(sorted(report.seller_neighbors))
        while frontier:
            x = frontier.popleft()
            if x in seen:
                continue
            seen.add(x)
            if x != muted:
                frontier.extend(sorted(report.declared(x)))
        return seen

    valid = reach()
    virt = {i: _dist_for(dists, i).virtual(report.bid(i)) for i in valid}
    depth = {}
    frontier = sorted(report.seller_neighbors)
    level = 1
    while frontier:
        nxt = set()
        for x in frontier:
            if x not in depth:
                depth[x] = level
                nxt |= set(report.declared(x)) - set(depth)
        frontier = sorted(nxt)
        level += 1

    best = None
    for i in sorted(valid):
        if virt[i] < 0.0:
            continue
        audience = reach(muted=i)
        top = min(audience, key=lambda j: (-virt[j], j))
        if top != i:
            continue
        if best is None or depth[i] < depth[best]:
            best = i
    if best is None:
        return EMPTY_OUTCOME
    rivals = reach(muted=best) - {best}
    rival_virt = max((virt[j] for j in rivals), default=float("-inf"))
    pay = _dist_for(dists, best).payment_inverse(max(0.0, rival_virt))
    return Outcome(best, {best: pay})


# -- shipped broken mechanisms (mutation sensitivity targets) -------------------


class _Mutant:
    def __init__(self, mech_id, fn):
        self.mech_id = mech_id
        self._fn = fn

    def run(self, report, dists):
        return self._fn(report, dists)


def overcharging_mutant(base: MechanismSpec, surcharge: float = 0.1):
    """Charges the winner above the truthful price; must fail IR on the grid."""
    def run(report, dists):
        out = base.run(report, dists)
        if out.winner is None:
            return out
        return Outcome(out.winner, {out.winner: out.payment(out.winner) + surcharge})
    return _Mutant(f"{base.mech_id}+overcharge", run)


def ignore_reserve_mutant():
    """Second-price among valid buyers with no reserve; must fail IC (hiding
    a rival lowers the price) and shows up against the axioms on payments."""
    def run(report, dists):
        valid = sorted(valid_buyers(report))
        if not valid:
            return EMPTY_OUTCOME
        bids = {i: report.bid(i) for i in valid}
        winner = max(valid, key=lambda i: (bids[i], -i))
        rivals = [bids[i] for i in valid if i != winner]
        return Outcome(winner, {winner: max(rivals) if rivals else 0.0})
    return _Mutant("second-price-no-reserve", run)


def wrong_tiebreak_mutant():
    """Closest-winner mechanism whose argmax breaks ties toward the LARGEST id.

    Tie-breaks cannot hurt IC/IR in second-price-style payments (at a tie the
    winner's utility is zero either way), so this mutant is the one the
    outcome-equivalence checker exists for: on tied grid bids it disagrees
    with the definitional oracle about the winner.
    """
    def run(report, dists):
        from .network import diffusion_distances, valid_without_diffusion
        valid = sorted(valid_buyers(report))
        virt = {i: _dist_for(dists, i).virtual(report.bid(i)) for i in valid}
        depth = diffusion_distances(report)
        best = None
        for i in valid:
            if virt[i] < 0.0:
                continue
            audience = valid_without_diffusion(report, i)
            top = max(sorted(audience), key=lambda j: (virt[j], j))  # wrong direction
            if top != i:
                continue
            if best is None or depth[i] < depth[best]:
                best = i
        if best is None:
            return EMPTY_OUTCOME
        rivals = valid_without_diffusion(report, best) - {best}
        rival = max((virt[j] for j in rivals), default=float("-inf"))
        pay = _dist_for(dists, best).payment_inverse(max(0.0, rival))
        return Outcome(best, {best: pay})
    return _Mutant("wrong-tiebreak", run)


def oracle_equivalence_failures(mechanism, structure: StructureProfile, dists,
                                grid: DeviationGrid) -> list[dict]:
    """Profiles where a closest-winner implementation disagrees with the
    definitional oracle (winner or payment beyond 1e-12)."""
    failures = []
    for row in _profile_matrix(grid.bid_grid, structure.n):
        report = structure.truthful_report({i: float(row[i - 1])
                                            for i in structure.buyers})
        want = definitional_cwm_oracle(report, dists)
        got = mechanism.run(report, dists)
        same = (want.winner == got.winner
                and abs(want.revenue - got.revenue) <= 1e-12)
        if not same:
            failures.append({"valuations": [float(v) for v in row],
                             "expected": want.winner, "got": got.winner})
    return failures
