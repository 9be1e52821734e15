import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from diffauction.errors import DomainError, NoSaleError, ParseError
from diffauction.valuation import (IdentityVirtualDistribution,
                                   UniformDistribution, ValueDistribution,
                                   check_regularity, distribution_from_spec,
                                   inverse_virtual, reserve, virtual_value)

U01 = UniformDistribution(0.0, 1.0)


class TruncatedInverseSquare(ValueDistribution):
    """pdf proportional to 1/v^2 on [1, 10]; hazard is not monotone everywhere."""

    low, high = 1.0, 10.0
    _norm = 1.0 - 1.0 / 10.0  # integral of 1/v^2 over [1, 10]

    def cdf(self, v):
        return (1.0 - 1.0 / v) / self._norm

    def pdf(self, v):
        return (1.0 / v**2) / self._norm

    def sample(self, rng, size=None):
        u = rng.uniform(size=size)
        return 1.0 / (1.0 - u * self._norm)


def test_virtual_uniform_closed_form():
    assert virtual_value(U01, 0.75) == pytest.approx(0.5)
    assert virtual_value(U01, 0.5) == 0.0
    assert virtual_value(U01, 1.0) == 1.0


def test_virtual_general_low_matches_affine():
    # phi(v) = 2v - high regardless of low
    d = UniformDistribution(1.0, 2.0)
    for v in (1.0, 1.3, 2.0):
        assert virtual_value(d, v) == pytest.approx(2 * v - 2.0)
        # matches the generic formula v - (1-F)/f
        assert virtual_value(d, v) == pytest.approx(v - (1 - d.cdf(v)) / d.pdf(v))


def test_virtual_domain_error():
    with pytest.raises(DomainError):
        virtual_value(U01, 1.5)


def test_inverse_virtual_uniform():
    assert inverse_virtual(U01, 0.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        inverse_virtual(U01, 6.0)


def test_inverse_virtual_bisection_matches_affine():
    class OpaqueUniform(ValueDistribution):
        low, high = 0.0, 1.0

        def cdf(self, v):
            return v

        def pdf(self, v):
            return 1.0

        def sample(self, rng, size=None):
            return rng.uniform(size=size)

    opaque = OpaqueUniform()
    for y in (-0.3, 0.0, 0.4, 1.0):
        assert opaque.inverse_virtual(y) == pytest.approx(U01.inverse_virtual(y), abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(hs.floats(0.0, 1.0))
def test_inverse_round_trip(v):
    assert inverse_virtual(U01, virtual_value(U01, v)) == pytest.approx(v, abs=1e-10)


def test_inverse_round_trip_dense():
    rng = np.random.default_rng(8)
    for d in (U01, UniformDistribution(0.5, 2.5)):
        for v in d.low + (d.high - d.low) * rng.random(1000):
            assert abs(d.inverse_virtual(d.virtual(v)) - v) < 1e-10


@settings(max_examples=100, deadline=None)
@given(hs.floats(0.0, 1.0), hs.floats(0.0, 1.0))
def test_virtual_below_value_and_increasing(a, b):
    assert virtual_value(U01, a) <= a
    lo, hi = sorted((a, b))
    assert virtual_value(U01, lo) <= virtual_value(U01, hi)


def test_reserve_values():
    assert reserve(U01) == pytest.approx(0.5)
    assert reserve(UniformDistribution(0.0, 2.0)) == pytest.approx(1.0)
    assert reserve(UniformDistribution(1.0, 2.0)) == pytest.approx(1.0)


def test_reserve_bisection_oracle():
    # solve phi(v) = 0 by bisection on the generic formula, clip to support
    def oracle(d):
        lo_v, hi_v = d.virtual(d.low), d.virtual(d.high)
        if hi_v < 0:
            raise NoSaleError("")
        if lo_v >= 0:
            return d.low
        a, b = d.low, d.high
        for _ in range(100):
            mid = (a + b) / 2
            if d.virtual(mid) < 0:
                a = mid
            else:
                b = mid
        return (a + b) / 2

    for d in (U01, UniformDistribution(1.0, 2.0), UniformDistribution(0.25, 0.75)):
        assert reserve(d) == pytest.approx(oracle(d), abs=1e-9)


def test_reserve_clips_to_support_bottom():
    assert reserve(UniformDistribution(3.0, 4.0)) == 3.0


def test_payment_inverse_clips():
    d = UniformDistribution(3.0, 4.0)
    assert d.payment_inverse(0.0) == 3.0          # below phi(low) = 2
    assert d.payment_inverse(3.0) == pytest.approx(3.5)


def test_check_regularity_uniform():
    assert check_regularity(U01, 64)
    assert check_regularity(U01, 2)


def test_check_regularity_grid_too_small():
    with pytest.raises(DomainError):
        check_regularity(U01, 1)


def test_check_regularity_inverse_square():
    # hazard h(v) = f/(1-F) = (1/v^2) / (1/v - 1/10) is not monotone on [1,10]
    assert not check_regularity(TruncatedInverseSquare(), 64)


def test_sampling_matches_cdf_ks():
    rng = np.random.default_rng(2024)
    draws = np.sort(U01.sample(rng, 1_000_000))
    ecdf = np.arange(1, len(draws) + 1) / len(draws)
    ks = np.max(np.abs(ecdf - draws))
    assert ks < 0.002


def test_identity_virtual_distribution():
    d = IdentityVirtualDistribution(-1.0, 10.0)
    assert d.virtual(7.0) == 7.0
    assert d.inverse_virtual(6.0) == 6.0
    with pytest.raises(DomainError):
        d.cdf(0.5)


def test_distribution_from_spec():
    d = distribution_from_spec({"kind": "uniform", "low": 0.0, "high": 1.0})
    assert isinstance(d, UniformDistribution)
    with pytest.raises(ParseError):
        distribution_from_spec({"kind": "pareto"})
    with pytest.raises(ParseError):
        distribution_from_spec({})
