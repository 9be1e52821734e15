"""The four auction mechanisms as pure functions from a report profile to an Outcome.

All argmax operations break ties toward the smallest buyer id. Payments are
value-space: the winner pays the inverse virtual transform of her strongest
rival's virtual bid (floored at zero), possibly lifted by a shifted reserve.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ParseError, PreconditionError
from .network import (ReportProfile, diffusion_distances, valid_buyers,
                      valid_without_buyer, valid_without_diffusion)
from .valuation import ValueDistribution

KPWM_DEGREE_CAP = 20


@dataclass(frozen=True)
class Outcome:
    """Winner (at most one) and per-buyer payments; buyers absent from `payments` pay 0."""

    winner: int | None
    payments: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "payments", dict(self.payments))

    @property
    def revenue(self) -> float:
        return sum(self.payments.values())

    def payment(self, i: int) -> float:
        return self.payments.get(i, 0.0)


EMPTY_OUTCOME = Outcome(None, {})


@dataclass(frozen=True)
class ShiftingFunction:
    """Distance-indexed reserve-price increments sigma(d), with a default beyond the table.

    The design intent is monotone non-increasing in d; increasing tables are
    accepted with a warning because published experiments have used them.
    """

    increments: Mapping[int, float]
    default: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "increments",
                           {int(d): float(s) for d, s in self.increments.items()})
        for d, s in self.increments.items():
            if d < 1:
                raise ParseError(f"shift distance {d} must be >= 1", context="sigma")
            if s < 0.0:
                raise ParseError(f"shift sigma({d}) = {s} is negative", context="sigma")
        if self.default < 0.0:
            raise ParseError("default shift is negative", context="sigma")
        values = [s for _, s in sorted(self.increments.items())] + [self.default]
        if any(b > a + 1e-15 for a, b in zip(values, values[1:])):
            warnings.warn("shifting function is not monotone non-increasing in distance",
                          stacklevel=2)

    def __call__(self, d: int) -> float:
        return self.increments.get(d, self.default)

    @property
    def max_shift(self) -> float:
        return max([self.default, *self.increments.values()])

    def spec_string(self) -> str:
        parts = [f"{d}={s:g}" for d, s in sorted(self.increments.items())]
        parts.append(f"default={self.default:g}")
        return "table:" + ",".join(parts)


ZERO_SHIFT = ShiftingFunction({}, 0.0)


@dataclass(frozen=True)
class PotentialWinnerChain:
    """Potential winners ordered from closest to farthest, with their potential payments."""

    entries: tuple[tuple[int, float], ...]

    @property
    def buyers(self) -> tuple[int, ...]:
        return tuple(b for b, _ in self.entries)

    def payment(self, buyer: int) -> float:
        for b, p in self.entries:
            if b == buyer:
                return p
        raise KeyError(buyer)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _dist_for(dists, i: int) -> ValueDistribution:
    if isinstance(dists, ValueDistribution):
        return dists
    return dists[i]


def _argmax_with_tiebreak(candidates, virtuals) -> int | None:
    """Buyer with the highest virtual bid, smallest id on ties; None if empty."""
    best = None
    best_v = None
    for i in sorted(candidates):
        v = virtuals[i]
        if best is None or v > best_v:
            best, best_v = i, v
    return best


def myerson(participants, bids: Mapping[int, float], dists) -> Outcome:
    """Highest non-negative virtual bid wins and pays the inverse of the best rival's.

    `participants` may be any buyer subset; ids outside it are ignored.
    """
    participants = sorted(participants)
    virtuals = {i: _dist_for(dists, i).virtual(bids[i]) for i in participants}
    winner = _argmax_with_tiebreak(participants, virtuals)
    if winner is None or virtuals[winner] < 0.0:
        return EMPTY_OUTCOME
    rival = max((virtuals[i] for i in participants if i != winner), default=float("-inf"))
    pay = _dist_for(dists, winner).payment_inverse(max(0.0, rival))
    return Outcome(winner, {winner: pay})


def _virtuals(report: ReportProfile, dists, buyers) -> dict[int, float]:
    return {i: _dist_for(dists, i).virtual(report.bid(i)) for i in buyers}


def potential_winners(report: ReportProfile, dists) -> PotentialWinnerChain:
    """W(t') ordered by diffusion distance, each with p*_i(t').

    A valid buyer is a potential winner when she has the highest virtual bid
    (smallest id on ties) among the buyers still valid without her diffusion
    and that bid is non-negative. Any two potential winners are critical for
    one another in one direction, so the set forms a chain; the chain
    property is asserted here.
    """
    valid = valid_buyers(report)
    virtuals = _virtuals(report, dists, valid)
    entries = []
    for i in sorted(valid):
        if virtuals[i] < 0.0:
            continue
        audience = valid_without_diffusion(report, i)
        if _argmax_with_tiebreak(audience, virtuals) != i:
            continue
        rivals = audience - {i}
        rival_best = max((virtuals[j] for j in rivals), default=float("-inf"))
        pay = _dist_for(dists, i).payment_inverse(max(0.0, rival_best))
        entries.append((i, pay))
    dist = diffusion_distances(report)
    entries.sort(key=lambda e: (dist[e[0]], e[0]))
    chain = tuple(entries)
    for (a, _), (b, _) in zip(chain, chain[1:]):
        if b in valid_without_diffusion(report, a):
            raise AssertionError(f"potential winners {a}, {b} violate the chain structure")
    return PotentialWinnerChain(chain)


def k_partial_potential_winner(report: ReportProfile, dists, k: int
                               ) -> tuple[int, float] | None:
    """The unique buyer who can shrink her declaration to leave exactly k valid buyers
    while winning Myerson among them, with her minimal such payment; None if nobody can.
    """
    valid = valid_buyers(report)
    if len(valid) <= k:
        raise PreconditionError(f"k-partial scan needs |V| > k, got |V|={len(valid)}, k={k}")
    virtuals = _virtuals(report, dists, valid)
    found: tuple[int, float] | None = None
    for i in sorted(valid):
        declared = sorted(report.declared(i))
        if len(declared) > KPWM_DEGREE_CAP:
            raise PreconditionError(
                f"buyer {i} declares {len(declared)} neighbors; subset enumeration "
                f"is capped at degree {KPWM_DEGREE_CAP}")
        best_pay = None
        seen_sets: set[frozenset[int]] = set()
        for mask in range(1 << len(declared)):
            subset = frozenset(declared[b] for b in range(len(declared)) if mask >> b & 1)
            shrunk = report.with_report(i, report.bid(i), subset)
            audience = valid_buyers(shrunk)
            if len(audience) != k or audience in seen_sets:
                continue
            seen_sets.add(audience)
            if _argmax_with_tiebreak(audience, virtuals) != i or virtuals[i] < 0.0:
                continue
            rival = max((virtuals[j] for j in audience if j != i), default=float("-inf"))
            pay = _dist_for(dists, i).payment_inverse(max(0.0, rival))
            best_pay = pay if best_pay is None else min(best_pay, pay)
        if best_pay is not None:
            if found is not None:
                raise AssertionError(
                    f"two k-partial potential winners {found[0]} and {i}; "
                    "uniqueness should be structural")
            found = (i, best_pay)
    return found


def k_pwm(report: ReportProfile, dists, k: int) -> Outcome:
    """Sell only once exactly k buyers are reachable, or to the unique k-partial
    potential winner beyond that, at her minimal k-partial potential payment."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    valid = valid_buyers(report)
    m = len(valid)
    if m < k:
        return EMPTY_OUTCOME
    if m == k:
        return myerson(valid, {i: report.bid(i) for i in valid}, dists)
    hit = k_partial_potential_winner(report, dists, k)
    if hit is None:
        return EMPTY_OUTCOME
    winner, pay = hit
    return Outcome(winner, {winner: pay})


def cwm(report: ReportProfile, dists) -> Outcome:
    """Closest Winner of Myerson's: the chain head wins at her potential payment."""
    chain = potential_winners(report, dists)
    if not len(chain):
        return EMPTY_OUTCOME
    winner, pay = chain.entries[0]
    return Outcome(winner, {winner: pay})


def cwm_srp(report: ReportProfile, dists, sigma: ShiftingFunction) -> Outcome:
    """CWM with shifted reserve prices.

    Walk the chain from the closest potential winner outward; the first one
    whose bid clears her shifted reserve tau_i + sigma(d_i) wins and pays
    max(p*_i, tau_i + sigma(d_i)). Payments of later chain members keep
    earlier members' bids in their rival sets (the printed formulas verbatim).
    """
    chain = potential_winners(report, dists)
    if not len(chain):
        return EMPTY_OUTCOME
    dist = diffusion_distances(report)
    for buyer, p_star in chain:
        d = _dist_for(dists, buyer)
        span = d.high - d.low
        if sigma.max_shift > span + 1e-12:
            raise PreconditionError(
                f"shift {sigma.max_shift} exceeds the support span {span}")
        shifted = d.reserve() + sigma(dist[buyer])
        if report.bid(buyer) >= shifted:
            return Outcome(buyer, {buyer: max(p_star, shifted)})
    return EMPTY_OUTCOME


def cwm_fast(report: ReportProfile, dists) -> Outcome:
    """Frontier implementation of CWM: grow the audience from the seller's
    neighbors, withholding only the current interim winner's declarations,
    until the audience stabilizes; the last interim winner takes the item at
    her running-maximum interim price.

    The running maximum equals the final second-best virtual bid because the
    audience only grows, so this tracks one top-2 instead of per-iteration
    reruns and stays linear in edges.
    """
    reports = report.reports
    virt: dict[int, float] = {}
    in_audience: set[int] = set()
    # top two (virtual, id) over the audience, tie-break toward smaller id
    best = second = None

    def better(i, j):
        return j is None or virt[i] > virt[j] or (virt[i] == virt[j] and i < j)

    def add(i):
        nonlocal best, second
        if i in in_audience:
            return
        in_audience.add(i)
        virt[i] = _dist_for(dists, i).virtual(reports[i].bid)
        if better(i, best):
            best, second = i, best
        elif better(i, second):
            second = i

    pending: deque = deque()
    for i in sorted(report.seller_neighbors):
        add(i)
        pending.append(i)
    expanded: set[int] = set()

    def winner_now():
        return best if best is not None and virt[best] >= 0.0 else None

    while True:
        w = winner_now()
        progressed = False
        rotations = 0
        while pending:
            i = pending.popleft()
            if i in expanded:
                continue
            if i == w:
                pending.append(i)
                rotations += 1
                if rotations > len(pending):
                    break
                continue
            expanded.add(i)
            for j in sorted(reports[i].declared):
                if j not in in_audience:
                    add(j)
                    pending.append(j)
            progressed = True
            break
        if progressed:
            continue
        break

    w = winner_now()
    if w is None:
        return EMPTY_OUTCOME
    rival = virt[second] if second is not None and second != w else float("-inf")
    pay = _dist_for(dists, w).payment_inverse(max(0.0, rival))
    return Outcome(w, {w: pay})


def cwm_fast_trace(report: ReportProfile, dists) -> list[tuple[tuple[int, ...], int | None, float | None]]:
    """Literal iteration-by-iteration frontier trace (audience, interim winner, interim price).

    Follows the boxed loop directly: run the optimal auction on the audience,
    expand every non-winner's declarations, repeat until the audience stops
    changing. Quadratic and only used for explanation output.
    """
    audience: set[int] = set(report.seller_neighbors)
    steps = []
    while True:
        out = myerson(audience, {i: report.bid(i) for i in audience}, dists)
        steps.append((tuple(sorted(audience)), out.winner,
                      out.payments.get(out.winner) if out.winner is not None else None))
        grown = set(audience)
        for j in audience:
            if j != out.winner:
                grown |= report.reports[j].declared
        if grown == audience:
            return steps
        audience = grown


def myerson_all(report: ReportProfile, dists) -> Outcome:
    """Myerson over every valid buyer (the n-PWM benchmark; not IC as a diffusion auction)."""
    valid = valid_buyers(report)
    return myerson(valid, {i: report.bid(i) for i in valid}, dists)


def myerson_rs(report: ReportProfile, dists) -> Outcome:
    """Myerson among the seller's direct neighbors only (the no-diffusion baseline)."""
    return myerson(report.seller_neighbors,
                   {i: report.bid(i) for i in report.seller_neighbors}, dists)


# -- mechanism identifiers ------------------------------------------------------

SIGMA_1 = ShiftingFunction({1: 0.1}, 0.0)
# Reproduces the published n<=4 revenue tables; the source's printed formula
# (0.1*d for d<=2) is increasing and does not reproduce them. See README.
SIGMA_2 = ShiftingFunction({1: 0.2, 2: 0.1}, 0.0)


@dataclass(frozen=True)
class MechanismSpec:
    """A parsed mechanism identifier: kind plus parameters, runnable on reports."""

    mech_id: str
    kind: str                      # myerson-rs | myerson-all | kpwm | cwm | cwm-fast | cwm-srp
    k: int | None = None
    sigma: ShiftingFunction | None = None

    def run(self, report: ReportProfile, dists) -> Outcome:
        if self.kind == "myerson-rs":
            return myerson_rs(report, dists)
        if self.kind == "myerson-all":
            return myerson_all(report, dists)
        if self.kind == "kpwm":
            return k_pwm(report, dists, self.k)
        if self.kind == "cwm":
            return cwm(report, dists)
        if self.kind == "cwm-fast":
            return cwm_fast(report, dists)
        if self.kind == "cwm-srp":
            return cwm_srp(report, dists, self.sigma)
        raise PreconditionError(f"unknown mechanism kind {self.kind}")

    def value_breakpoints(self, dist: ValueDistribution, max_distance: int) -> tuple[float, ...]:
        """Interior support points where the revenue integrand can jump.

        Quadrature splits every axis here: the reserve, plus each shifted
        reserve a buyer at some distance might face.
        """
        points = {dist.reserve()}
        if self.kind == "cwm-srp":
            for d in range(1, max_distance + 1):
                points.add(dist.reserve() + self.sigma(d))
        return tuple(sorted(p for p in points if dist.low < p < dist.high))


def parse_sigma_spec(spec: str) -> ShiftingFunction:
    """Parse `indicator:<amount>:<max_d>` or `table:<d=v,...,default=v>`."""
    parts = spec.split(":")
    if parts[0] == "indicator":
        if len(parts) != 3:
            raise ParseError(f"expected indicator:<amount>:<max_d>, got {spec!r}", context="sigma")
        try:
            amount, max_d = float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad indicator parameters in {spec!r}", context="sigma") from exc
        return ShiftingFunction({d: amount for d in range(1, max_d + 1)}, 0.0)
    if parts[0] == "table":
        if len(parts) != 2:
            raise ParseError(f"expected table:<d=v,...>, got {spec!r}", context="sigma")
        increments = {}
        default = 0.0
        for item in parts[1].split(","):
            if "=" not in item:
                raise ParseError(f"bad table entry {item!r}", context="sigma")
            key, value = item.split("=", 1)
            try:
                if key.strip() == "default":
                    default = float(value)
                else:
                    increments[int(key)] = float(value)
            except ValueError as exc:
                raise ParseError(f"bad table entry {item!r}", context="sigma") from exc
        return ShiftingFunction(increments, default)
    raise ParseError(f"unknown sigma spec {spec!r}", context="sigma")


_PLAIN = {
    "myerson-rs": ("myerson-rs", {}),
    "myerson-all": ("myerson-all", {}),
    "n-pwm": ("myerson-all", {}),
    "cwm": ("cwm", {}),
    "cwm-fast": ("cwm-fast", {}),
    "cwm-srp1": ("cwm-srp", {"sigma": SIGMA_1}),
    "cwm-srp2": ("cwm-srp", {"sigma": SIGMA_2}),
}


def parse_mechanism_id(mech_id: str) -> MechanismSpec:
    """Resolve a mechanism identifier string like `cwm`, `kpwm:3`, or
    `cwm-srp:indicator:0.1:1` to a runnable spec."""
    mech_id = mech_id.strip()
    if mech_id in _PLAIN:
        kind, extra = _PLAIN[mech_id]
        return MechanismSpec(mech_id, kind, **extra)
    if mech_id.startswith("kpwm:"):
        try:
            k = int(mech_id.split(":", 1)[1])
        except ValueError as exc:
            raise ParseError(f"bad k in {mech_id!r}", context="mechanism") from exc
        if k < 1:
            raise ParseError("k must be >= 1", context="mechanism")
        return MechanismSpec(mech_id, "kpwm", k=k)
    if mech_id.startswith("cwm-srp:"):
        sigma = parse_sigma_spec(mech_id.split(":", 1)[1])
        return MechanismSpec(mech_id, "cwm-srp", sigma=sigma)
    raise ParseError(f"unknown mechanism {mech_id!r}", context="mechanism")
