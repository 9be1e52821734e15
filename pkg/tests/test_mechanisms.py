import itertools

import numpy as np
import pytest

from diffauction import structures as st
from diffauction.errors import ParseError, PreconditionError
from diffauction.mechanisms import (SIGMA_1, SIGMA_2, ZERO_SHIFT, Outcome, ShiftingFunction, cwm, cwm_fast,
                                    cwm_fast_trace, cwm_srp,
                                    k_partial_potential_winner, k_pwm, myerson,
                                    myerson_all, myerson_rs, parse_mechanism_id,
                                    parse_sigma_spec, potential_winners)
from diffauction.network import ReportProfile, StructureProfile, valid_buyers
from diffauction.valuation import IdentityVirtualDistribution, UniformDistribution

U01 = UniformDistribution(0.0, 1.0)
VIRT = IdentityVirtualDistribution(-100.0, 100.0)


def report_for(structure, bids):
    return structure.truthful_report({i: b for i, b in zip(structure.buyers, bids)})


def second_price_with_reserve(participants, bids, reserve=0.5):
    """Independent oracle for Myerson under U[0,1]: highest bid at or above the
    reserve wins (smallest id on ties) and pays max(reserve, best rival bid)."""
    participants = sorted(participants)
    winner = min(participants, key=lambda i: (-bids[i], i))
    if bids[winner] < reserve:
        return None, 0.0
    rival = max((bids[i] for i in participants if i != winner), default=0.0)
    return winner, max(reserve, rival)


# -- myerson ---------------------------------------------------------------------


def test_myerson_examples():
    out = myerson({1, 2, 3}, {1: 0.9, 2: 0.7, 3: 0.3}, U01)
    assert out.winner == 1 and out.payment(1) == pytest.approx(0.7)
    assert myerson({1, 2, 3}, {1: 0.4, 2: 0.3, 3: 0.2}, U01) == Outcome(None, {})
    out = myerson({1}, {1: 0.6}, U01)
    assert out.winner == 1 and out.payment(1) == pytest.approx(0.5)


def test_myerson_matches_second_price_with_reserve():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        bids = {i: float(rng.random()) for i in range(1, n + 1)}
        got = myerson(set(bids), bids, U01)
        winner, pay = second_price_with_reserve(set(bids), bids)
        assert got.winner == winner
        if winner is not None:
            assert got.payment(winner) == pytest.approx(pay, abs=1e-12)


def test_myerson_tie_break_smallest_id():
    out = myerson({1, 2, 3}, {1: 0.8, 2: 0.8, 3: 0.8}, U01)
    assert out.winner == 1
    assert out.payment(1) == pytest.approx(0.8)


# -- potential winners ------------------------------------------------------------


def test_chain_fig1():
    r = report_for(st.fig1(), [st.FIG1_VIRTUAL_BIDS[i] for i in range(1, 9)])
    chain = potential_winners(r, VIRT)
    assert chain.entries == ((4, 6.0), (6, 7.0))


def test_chain_simple_scan():
    r = report_for(st.chain(3), [0.9, 0.8, 0.7])
    chain = potential_winners(r, U01)
    assert chain.buyers == (1,)
    assert chain.payment(1) == pytest.approx(0.5)


def test_chain_empty_when_all_below_reserve():
    r = report_for(st.chain(3), [0.4, 0.3, 0.2])
    assert potential_winners(r, U01).entries == ()


def test_chain_members_pairwise_critical():
    from diffauction.network import critical_buyers
    rng = np.random.default_rng(5)
    for _ in range(60):
        s = st.random_connected_structure(int(rng.integers(2, 8)), rng)
        r = report_for(s, rng.random(s.n))
        chain = potential_winners(r, U01)
        for a, b in itertools.combinations(chain.buyers, 2):
            assert a in critical_buyers(r, b) or b in critical_buyers(r, a)


# -- k-partial potential winner -----------------------------------------------------


def kpartial_oracle(report, dists, k):
    """Exhaustive subset enumeration with a local Myerson reimplementation."""
    hits = {}
    for i in sorted(valid_buyers(report)):
        declared = sorted(report.declared(i))
        for size in range(len(declared) + 1):
            for combo in itertools.combinations(declared, size):
                shrunk = report.with_report(i, report.bid(i), frozenset(combo))
                audience = valid_buyers(shrunk)
                if len(audience) != k:
                    continue
                virt = {j: dists.virtual(report.bid(j)) for j in audience}
                winner = min(audience, key=lambda j: (-virt[j], j))
                if winner != i or virt[i] < 0.0:
                    continue
                rival = max((virt[j] for j in audience if j != i), default=float("-inf"))
                pay = dists.payment_inverse(max(0.0, rival))
                hits[i] = min(hits.get(i, np.inf), pay)
    assert len(hits) <= 1
    return next(iter(hits.items()), None)


def test_kpartial_chain_has_no_candidate():
    # On an undirected chain with truthful rivals nobody can shrink the valid
    # set to 2: buyer 2's own declaration keeps the tail reachable. Verified
    # against the exhaustive-subset oracle.
    r = report_for(st.chain(4), [0.9, 0.3, 0.8, 0.6])
    got = k_partial_potential_winner(r, U01, 2)
    assert got is None
    assert kpartial_oracle(r, U01, 2) is None


def test_kpartial_hub_candidate():
    # The hub shape does allow a cut: buyer 1 declaring {2} leaves exactly {1, 2}
    r = report_for(st.TABLE1_N3["n3-4"], [0.9, 0.3, 0.8])
    got = k_partial_potential_winner(r, U01, 2)
    assert got == (1, pytest.approx(0.5))
    assert kpartial_oracle(r, U01, 2) == got


def test_kpartial_star_absent():
    r = report_for(st.star(3), [0.9, 0.8, 0.7])
    with pytest.raises(PreconditionError):
        k_partial_potential_winner(r, U01, 3)   # |V| = 3 not > 3
    assert k_partial_potential_winner(r, U01, 2) is None


def test_kpartial_matches_oracle_randomized():
    rng = np.random.default_rng(17)
    for _ in range(80):
        n = int(rng.integers(2, 7))
        s = st.random_connected_structure(n, rng)
        r = report_for(s, rng.random(n))
        k = int(rng.integers(1, max(2, n)))
        if len(valid_buyers(r)) <= k:
            continue
        assert k_partial_potential_winner(r, U01, k) == kpartial_oracle(r, U01, k)


def test_kpartial_minimal_payment_over_subsets():
    # buyer 1 can reach size-2 sets {1,2} or {1,3}; the cheaper rival decides
    s = StructureProfile(frozenset({1}), {1: frozenset({2, 3}), 2: frozenset({1}),
                                          3: frozenset({1})})
    r = report_for(s, [0.9, 0.6, 0.8])
    winner, pay = k_partial_potential_winner(r, U01, 2)
    assert winner == 1
    assert pay == pytest.approx(0.6)   # min(phi^-1(0.2), phi^-1(0.6)) = min(0.6, 0.8)


# -- k-PWM --------------------------------------------------------------------------


def test_kpwm_equals_myerson_at_k():
    rng = np.random.default_rng(23)
    for _ in range(50):
        bids = rng.random(3)
        r = report_for(st.star(3), bids)
        assert k_pwm(r, U01, 3) == myerson({1, 2, 3}, {i: bids[i - 1] for i in (1, 2, 3)}, U01)


def test_kpwm_below_k_no_sale():
    r = report_for(st.chain(2), [0.9, 0.9])
    assert k_pwm(r, U01, 3) == Outcome(None, {})
    assert k_pwm(r, U01, 3).revenue == 0.0


def test_kpwm_above_k_uses_partial_winner():
    r = report_for(st.TABLE1_N3["n3-4"], [0.9, 0.3, 0.8])
    out = k_pwm(r, U01, 2)
    assert out.winner == 1 and out.payment(1) == pytest.approx(0.5)
    # no candidate at all -> no sale
    r4 = report_for(st.chain(4), [0.9, 0.3, 0.8, 0.6])
    assert k_pwm(r4, U01, 2) == Outcome(None, {})


def test_kpwm_rejects_bad_k():
    with pytest.raises(PreconditionError):
        k_pwm(report_for(st.chain(2), [0.6, 0.6]), U01, 0)


# -- CWM ----------------------------------------------------------------------------


def test_cwm_fig1_winner4():
    r = report_for(st.fig1(), [st.FIG1_VIRTUAL_BIDS[i] for i in range(1, 9)])
    out = cwm(r, VIRT)
    assert out.winner == 4
    assert out.payment(4) == pytest.approx(6.0)


def test_cwm_chain_blocks_deeper_rivals():
    r = report_for(st.chain(3), [0.6, 0.9, 0.99])
    out = cwm(r, U01)
    assert out.winner == 1 and out.payment(1) == pytest.approx(0.5)


def test_cwm_no_sale():
    assert cwm(report_for(st.chain(3), [0.2, 0.3, 0.4]), U01) == Outcome(None, {})


def test_cwm_fast_trace_fig1():
    r = report_for(st.fig1(), [st.FIG1_VIRTUAL_BIDS[i] for i in range(1, 9)])
    steps = cwm_fast_trace(r, VIRT)
    assert [w for _, w, _ in steps] == [1, 4, 4]
    assert steps[0][0] == (1, 2)
    assert steps[-1][0] == (1, 2, 3, 4, 5, 8)
    assert steps[-1][2] == pytest.approx(6.0)


def test_cwm_fast_star_single_round():
    bids = [0.7, 0.9, 0.6]
    out = cwm_fast(report_for(st.star(3), bids), U01)
    assert out == myerson({1, 2, 3}, {1: 0.7, 2: 0.9, 3: 0.6}, U01)


def test_cwm_equals_cwm_fast_randomized():
    rng = np.random.default_rng(31)
    for _ in range(250):
        n = int(rng.integers(1, 13))
        s = st.random_connected_structure(n, rng)
        r = report_for(s, rng.random(n))
        a, b = cwm(r, U01), cwm_fast(r, U01)
        assert a.winner == b.winner
        if a.winner is not None:
            assert a.payment(a.winner) == pytest.approx(b.payment(b.winner), abs=1e-12)


def test_cwm_no_cut_points_degenerates_to_myerson():
    # n3-3 (4-cycle through the seller) has no critical buyers
    rng = np.random.default_rng(37)
    for _ in range(100):
        bids = rng.random(3)
        r = report_for(st.TABLE1_N3["n3-3"], bids)
        a = cwm(r, U01)
        b = myerson_all(r, U01)
        assert a.winner == b.winner
        if a.winner is not None:
            assert a.payment(a.winner) == pytest.approx(b.payment(b.winner), abs=1e-15)


# -- CWM-SRP ---------------------------------------------------------------------------


def test_srp_zero_shift_equals_cwm():
    rng = np.random.default_rng(41)
    grid = np.linspace(0.0, 1.0, 9)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        s = st.random_connected_structure(n, rng)
        bids = rng.choice(grid, size=n)
        r = report_for(s, bids)
        assert cwm_srp(r, U01, ZERO_SHIFT) == cwm(r, U01)


def test_srp_falls_through_failed_reserve():
    # shifted reserve 0.6 at distance 1; buyer 1 at 0.55 fails, buyer 3 takes over
    r = report_for(st.fig2(1), [0.55, 0.2, 0.7])
    out = cwm_srp(r, U01, SIGMA_1)
    assert out.winner == 3
    assert out.payment(3) == pytest.approx(0.55)   # max(p*_3, 0.5) keeps buyer 1's bid
    assert cwm(r, U01).winner == 1


def test_srp_no_sale_when_chain_exhausted():
    r = report_for(st.fig2(1), [0.55, 0.2, 0.3])
    assert cwm_srp(r, U01, SIGMA_1) == Outcome(None, {})


def test_srp_reserve_above_support_blocks_buyer():
    sigma = ShiftingFunction({1: 0.6}, 0.0)
    for v1 in (0.5, 0.75, 1.0):
        r = report_for(st.chain(2), [v1, 0.4])
        assert cwm_srp(r, U01, sigma).winner != 1


def test_srp_payment_floors_at_shifted_reserve():
    r = report_for(st.star(3), [0.9, 0.2, 0.1])
    out = cwm_srp(r, U01, SIGMA_1)
    assert out.winner == 1
    assert out.payment(1) == pytest.approx(0.6)   # p* = 0.5 lifted to tau + 0.1


def test_srp_shift_exceeding_span_rejected():
    sigma = ShiftingFunction({1: 1.5}, 0.0)
    with pytest.raises(PreconditionError):
        cwm_srp(report_for(st.chain(2), [0.9, 0.9]), U01, sigma)


# -- shifting functions ------------------------------------------------------------


def test_sigma_parsing():
    s1 = parse_sigma_spec("indicator:0.1:1")
    assert s1(1) == pytest.approx(0.1) and s1(2) == 0.0
    s2 = parse_sigma_spec("table:1=0.2,2=0.1,default=0")
    assert (s2(1), s2(2), s2(3)) == (0.2, 0.1, 0.0)
    with pytest.raises(ParseError):
        parse_sigma_spec("indicator:0.1")
    with pytest.raises(ParseError):
        parse_sigma_spec("table:oops")
    with pytest.raises(ParseError):
        parse_sigma_spec("staircase:1")


def test_sigma_shipped_functions():
    assert SIGMA_1(1) == pytest.approx(0.1)
    assert SIGMA_1(2) == 0.0
    assert (SIGMA_2(1), SIGMA_2(2), SIGMA_2(3)) == (0.2, 0.1, 0.0)


def test_sigma_increasing_warns_but_works():
    with pytest.warns(UserWarning):
        sigma = ShiftingFunction({1: 0.1, 2: 0.2}, 0.0)
    assert sigma(2) == pytest.approx(0.2)


def test_sigma_negative_rejected():
    with pytest.raises(ParseError):
        ShiftingFunction({1: -0.1}, 0.0)


# -- shared invariants -------------------------------------------------------------


ALL_SPECS = ["myerson-rs", "myerson-all", "kpwm:2", "kpwm:3", "cwm", "cwm-fast",
             "cwm-srp1", "cwm-srp2"]


def test_ir_pointwise_under_truthful_reports():
    rng = np.random.default_rng(43)
    specs = [parse_mechanism_id(m) for m in ALL_SPECS]
    for _ in range(120):
        n = int(rng.integers(1, 7))
        s = st.random_connected_structure(n, rng)
        r = report_for(s, rng.random(n))
        for spec in specs:
            out = spec.run(r, U01)
            if out.winner is not None:
                assert out.payment(out.winner) <= r.bid(out.winner) + 1e-12
            assert all(out.payment(i) == 0.0 for i in s.buyers if i != out.winner)


def test_invalid_buyers_never_win_or_pay():
    rng = np.random.default_rng(47)
    specs = [parse_mechanism_id(m) for m in ALL_SPECS]
    s = st.fig1()
    for _ in range(40):
        bids = rng.random(8)
        reports = {i: (float(bids[i - 1]), s.neighbors[i]) for i in s.buyers}
        reports[2] = (reports[2][0], frozenset())   # cut buyers 4..8 off via 2? 4 still via 1
        reports[1] = (reports[1][0], frozenset())   # now 3..8 unreachable
        r = ReportProfile(s.seller_neighbors, reports)
        invalid = set(s.buyers) - valid_buyers(r)
        assert invalid
        for spec in specs:
            out = spec.run(r, U01)
            assert out.winner not in invalid
            assert all(out.payment(i) == 0.0 for i in invalid)


def permuted(structure, bids, perm):
    relabel = {old: new for old, new in zip(structure.buyers, perm)}
    neighbors = {relabel[i]: frozenset(relabel[j] for j in structure.neighbors[i])
                 for i in structure.buyers}
    s2 = StructureProfile(frozenset(relabel[i] for i in structure.seller_neighbors),
                          neighbors)
    bids2 = {relabel[i]: bids[i] for i in structure.buyers}
    return s2, bids2, relabel


def test_relabeling_equivariance():
    rng = np.random.default_rng(53)
    specs = [parse_mechanism_id(m) for m in ("cwm", "cwm-fast", "kpwm:2",
                                             "myerson-all", "cwm-srp1")]
    for _ in range(60):
        n = int(rng.integers(2, 7))
        s = st.random_connected_structure(n, rng)
        # distinct bids so tie-breaks cannot couple to labels
        bids = {i: float(b) for i, b in
                zip(s.buyers, rng.permutation(np.linspace(0.05, 0.95, n)))}
        perm = tuple(int(p) + 1 for p in rng.permutation(n))
        s2, bids2, relabel = permuted(s, bids, perm)
        for spec in specs:
            a = spec.run(s.truthful_report(bids), U01)
            b = spec.run(s2.truthful_report(bids2), U01)
            expected = relabel[a.winner] if a.winner is not None else None
            assert b.winner == expected
            if a.winner is not None:
                assert b.payment(expected) == pytest.approx(a.payment(a.winner), abs=1e-12)


def test_parse_mechanism_ids():
    assert parse_mechanism_id("kpwm:3").k == 3
    assert parse_mechanism_id("cwm-srp:indicator:0.1:1").sigma(1) == pytest.approx(0.1)
    assert parse_mechanism_id("n-pwm").kind == "myerson-all"
    with pytest.raises(ParseError):
        parse_mechanism_id("vcg")
    with pytest.raises(ParseError):
        parse_mechanism_id("kpwm:zero")


def test_myerson_rs_ignores_deeper_buyers():
    r = report_for(st.chain(3), [0.6, 0.99, 0.98])
    out = myerson_rs(r, U01)
    assert out.winner == 1 and out.payment(1) == pytest.approx(0.5)
