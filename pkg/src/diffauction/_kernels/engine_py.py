"""Pure-Python (numpy-vectorized) batch kernels.

Fallback backend with the exact semantics of the compiled kernels: same
lexicographic tie-breaks, same payment arithmetic. Each function evaluates one
mechanism over a (samples, buyers) bid matrix on a precompiled structure and
returns (winner column or -1, payment) per row. Columns are 0-based buyer
indices; virtual transforms are affine per buyer: virt = bid * va + vb.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _empty(B):
    return np.full(B, -1, dtype=np.int32), np.zeros(B, dtype=np.float64)


def myerson_batch(bids, va, vb, lo, participants):
    """Highest non-negative virtual bid among `participants` wins; pays the
    clipped inverse of the best rival virtual (floored at zero)."""
    B = bids.shape[0]
    P = np.asarray(participants, dtype=np.int64)
    if B == 0 or len(P) == 0:
        return _empty(B)
    virt = bids[:, P] * va[P] + vb[P]
    rows = np.arange(B)
    pos = np.argmax(virt, axis=1)          # first max = smallest buyer id (P sorted)
    best_v = virt[rows, pos].copy()
    virt[rows, pos] = -np.inf
    second_v = virt.max(axis=1) if len(P) > 1 else np.full(B, -np.inf)
    wcol = P[pos]
    y = np.maximum(second_v, 0.0)
    pay = np.maximum(lo[wcol], (y - vb[wcol]) / va[wcol])
    sold = best_v >= 0.0
    return (np.where(sold, wcol, -1).astype(np.int32),
            np.where(sold, pay, 0.0))


def cwm_srp_batch(bids, va, vb, lo, sr, order_cols, rival_ptr, rival_idx,
                  seller_cols=None, adj_indptr=None, adj_indices=None, valid=None):
    """Closest-potential-winner walk with per-buyer shifted reserves.

    `order_cols` lists valid buyer columns sorted by (diffusion distance, id);
    `rival_ptr`/`rival_idx` concatenate, per buyer column, the sorted columns
    of the buyers still valid without that buyer's diffusion (minus herself).
    With sr = tau this is plain CWM. The graph arguments are accepted for
    signature parity with the compiled backend and unused here.
    """
    B = bids.shape[0]
    order_cols = np.asarray(order_cols, dtype=np.int64)
    nv = len(order_cols)
    if B == 0 or nv == 0:
        return _empty(B)
    virt = bids * va + vb
    rows = np.arange(B)
    passing = np.zeros((B, nv), dtype=bool)
    rmax_ord = np.empty((B, nv), dtype=np.float64)
    for pos, c in enumerate(order_cols):
        cols = rival_idx[rival_ptr[c]:rival_ptr[c + 1]]
        if len(cols):
            sub = virt[:, cols]
            p = np.argmax(sub, axis=1)
            rm = sub[rows, p]
            ra = cols[p]
        else:
            rm = np.full(B, -np.inf)
            ra = np.full(B, bids.shape[1] + 1, dtype=np.int64)
        vc = virt[:, c]
        is_pw = (vc >= 0.0) & ((vc > rm) | ((vc == rm) & (c < ra)))
        passing[:, pos] = is_pw & (bids[:, c] >= sr[c])
        rmax_ord[:, pos] = rm
    sold = passing.any(axis=1)
    first = np.argmax(passing, axis=1)
    wcol = order_cols[first]
    y = np.maximum(rmax_ord[rows, first], 0.0)
    pay = np.maximum(lo[wcol], (y - vb[wcol]) / va[wcol])
    pay = np.maximum(pay, sr[wcol])
    return (np.where(sold, wcol, -1).astype(np.int32),
            np.where(sold, pay, 0.0))


def kpwm_batch(bids, va, vb, lo, k, m, valid_cols, cand_buyer, cand_ptr, cand_idx):
    """k-PWM beyond full participation: the unique buyer able to shrink the
    valid set to exactly k while winning takes the item at her minimal payment.

    Candidate sets are structure-level precomputations: cand_buyer[t] can reach
    a valid set whose rival columns are cand_idx[cand_ptr[t]:cand_ptr[t+1]].
    Raises if two distinct buyers win the same sample (structurally impossible).
    """
    B = bids.shape[0]
    if B == 0 or m < k:
        return _empty(B)
    if m == k:
        return myerson_batch(bids, va, vb, lo, valid_cols)
    virt = bids * va + vb
    rows = np.arange(B)
    win_col = np.full(B, -1, dtype=np.int64)
    win_pay = np.zeros(B, dtype=np.float64)
    conflicts = 0
    for t, c in enumerate(cand_buyer):
        cols = cand_idx[cand_ptr[t]:cand_ptr[t + 1]]
        if len(cols):
            sub = virt[:, cols]
            p = np.argmax(sub, axis=1)
            rm = sub[rows, p]
            ra = cols[p]
        else:
            rm = np.full(B, -np.inf)
            ra = np.full(B, bids.shape[1] + 1, dtype=np.int64)
        vc = virt[:, c]
        ok = (vc >= 0.0) & ((vc > rm) | ((vc == rm) & (c < ra)))
        if not ok.any():
            continue
        pay = np.maximum(lo[c], (np.maximum(rm, 0.0) - vb[c]) / va[c])
        conflicts += int(np.count_nonzero(ok & (win_col != -1) & (win_col != c)))
        fresh = ok & (win_col == -1)
        win_col[fresh] = c
        win_pay[fresh] = pay[fresh]
        again = ok & (win_col == c) & ~fresh
        win_pay[again] = np.minimum(win_pay[again], pay[again])
    if conflicts:
        raise AssertionError(f"{conflicts} samples found two k-partial potential winners")
    sold = win_col != -1
    return win_col.astype(np.int32), np.where(sold, win_pay, 0.0)
