"""Valuation priors: CDF/density, virtual value transform, reserve prices, sampling.

The virtual value of a bid v under prior F is

    phi(v) = v - (1 - F(v)) / f(v)

Allocation by highest non-negative virtual bid together with the inverse
transform for payments is the revenue-optimal rule for regular priors
(monotone non-decreasing hazard rate), which is all this package supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoSaleError, SingularityError

BISECTION_TOL = 1e-12


class ValueDistribution:
    """A prior over valuations on a closed support [low, high].

    Subclasses provide `cdf`, `pdf`, and `sample`. The virtual transform,
    its inverse (monotone bisection unless a closed form is available),
    and the reserve price are derived here.
    """

    low: float
    high: float

    def cdf(self, v: float) -> float:
        raise NotImplementedError

    def pdf(self, v: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def virtual_affine(self) -> tuple[float, float] | None:
        """(a, b) with phi(v) = a*v + b when the transform is affine, else None."""
        return None

    # -- derived operations -------------------------------------------------

    def in_support(self, v: float) -> bool:
        return self.low <= v <= self.high

    def virtual(self, v: float) -> float:
        """phi(v) = v - (1 - F(v)) / f(v)."""
        if not self.in_support(v):
            raise DomainError(f"value {v} outside support [{self.low}, {self.high}]")
        affine = self.virtual_affine()
        if affine is not None:
            a, b = affine
            return a * v + b
        density = self.pdf(v)
        if density <= 0.0:
            raise SingularityError(f"pdf({v}) = {density}; virtual value undefined")
        return v - (1.0 - self.cdf(v)) / density

    def virtual_range(self) -> tuple[float, float]:
        return self.virtual(self.low), self.virtual(self.high)

    def inverse_virtual(self, y: float) -> float:
        """The unique v with phi(v) = y; domain is [phi(low), phi(high)]."""
        lo, hi = self.virtual_range()
        if not (lo <= y <= hi):
            raise DomainError(f"virtual value {y} outside range [{lo}, {hi}]")
        affine = self.virtual_affine()
        if affine is not None:
            a, b = affine
            return (y - b) / a
        a, b = self.low, self.high
        while b - a > BISECTION_TOL:
            mid = 0.5 * (a + b)
            if self.virtual(mid) < y:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    def payment_inverse(self, y: float) -> float:
        """inverse_virtual clipped to the support: below phi(low) any bid wins."""
        lo, hi = self.virtual_range()
        if y <= lo:
            return self.low
        if y > hi:
            raise DomainError(f"virtual payment {y} above range top {hi}")
        return self.inverse_virtual(y)

    def reserve(self) -> float:
        """tau = phi^{-1}(0), the lowest winning valuation."""
        lo, hi = self.virtual_range()
        if hi < 0.0:
            raise NoSaleError("entire virtual range is negative; no reserve exists")
        if lo >= 0.0:
            return self.low
        return self.inverse_virtual(0.0)


@dataclass(frozen=True)
class UniformDistribution(ValueDistribution):
    """U[low, high]. phi(v) = 2v - high regardless of low; tau = high/2 clipped."""

    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not (self.high > self.low):
            raise DomainError(f"empty support [{self.low}, {self.high}]")

    def cdf(self, v):
        return np.clip((v - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, v):
        width = self.high - self.low
        inside = (self.low <= np.asarray(v)) & (np.asarray(v) <= self.high)
        return np.where(inside, 1.0 / width, 0.0) if np.ndim(v) else (1.0 / width if inside else 0.0)

    def sample(self, rng, size=None):
        return rng.uniform(self.low, self.high, size=size)

    def virtual_affine(self):
        return (2.0, -self.high)


class IdentityVirtualDistribution(ValueDistribution):
    """Pedagogical prior whose virtual transform is the identity.

    Used by the CLI's --virtual-bids mode so mechanisms can run directly on
    virtual bids (as in worked examples that list virtual bids on the graph);
    payments then live in virtual space. Not a real prior: cdf/pdf/sample
    are unavailable.
    """

    def __init__(self, low: float, high: float):
        if not (high > low):
            raise DomainError(f"empty support [{low}, {high}]")
        self.low = low
        self.high = high

    def cdf(self, v):
        raise DomainError("identity-virtual distribution has no cdf")

    def pdf(self, v):
        raise DomainError("identity-virtual distribution has no pdf")

    def sample(self, rng, size=None):
        raise DomainError("identity-virtual distribution cannot be sampled")

    def virtual_affine(self):
        return (1.0, 0.0)


def virtual_value(dist: ValueDistribution, v: float) -> float:
    return dist.virtual(v)


def inverse_virtual(dist: ValueDistribution, y: float) -> float:
    return dist.inverse_virtual(y)


def reserve(dist: ValueDistribution) -> float:
    return dist.reserve()


def check_regularity(dist: ValueDistribution, grid: int, tol: float = 1e-9) -> bool:
    """True iff the hazard rate f/(1-F) is non-decreasing on a uniform grid."""
    if grid < 2:
        raise DomainError("regularity grid needs at least 2 points")
    points = np.linspace(dist.low, dist.high, grid)
    hazards = []
    for v in points:
        f = float(dist.pdf(v))
        tail = 1.0 - float(dist.cdf(v))
        hazards.append(math.inf if tail <= 0.0 else f / tail)
    return all(b >= a - tol for a, b in zip(hazards, hazards[1:]))


def distribution_from_spec(spec: dict) -> ValueDistribution:
    """Build a distribution from its config form, e.g. {"kind": "uniform", "low": 0, "high": 1}.

    Extension point: new kinds (e.g. a piecewise-linear cdf) register here by
    adding a branch that returns any ValueDistribution subclass; everything
    downstream only uses the ValueDistribution interface.
    """
    from .errors import ParseError

    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParseError("distribution spec must be an object with a 'kind' field",
                         context="distribution")
    kind = spec["kind"]
    if kind == "uniform":
        return UniformDistribution(float(spec.get("low", 0.0)), float(spec.get("high", 1.0)))
    raise ParseError(f"unknown distribution kind {kind!r}", context="distribution.kind")
