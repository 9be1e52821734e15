# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernels: one pass per sample, no per-sample allocation.

Same contracts as engine_py (winner column or -1 plus payment per row, exact
lexicographic tie-breaks). The closest-winner walk is implemented as the
frontier expansion over the declared adjacency, O(edges) per sample, with
stamped workspaces so nothing is cleared between samples.
"""

import numpy as np

BACKEND_NAME = "cython"

cdef double NEG_INF = float("-inf")


def myerson_batch(double[:, ::1] bids, double[::1] va, double[::1] vb,
                  double[::1] lo, int[::1] participants):
    cdef Py_ssize_t B = bids.shape[0]
    cdef Py_ssize_t P = participants.shape[0]
    winners = np.full(B, -1, dtype=np.int32)
    pays = np.zeros(B, dtype=np.float64)
    if B == 0 or P == 0:
        return winners, pays
    cdef int[::1] wv = winners
    cdef double[::1] pv = pays
    cdef Py_ssize_t s, t
    cdef int c, best, second
    cdef double v, bv, sv, y, pay
    for s in range(B):
        best = -1
        second = -1
        bv = NEG_INF
        sv = NEG_INF
        for t in range(P):
            c = participants[t]
            v = bids[s, c] * va[c] + vb[c]
            if best == -1 or v > bv or (v == bv and c < best):
                second = best
                sv = bv
                best = c
                bv = v
            elif second == -1 or v > sv or (v == sv and c < second):
                second = c
                sv = v
        if bv >= 0.0:
            y = sv if second != -1 else NEG_INF
            if y < 0.0:
                y = 0.0
            pay = (y - vb[best]) / va[best]
            if pay < lo[best]:
                pay = lo[best]
            wv[s] = best
            pv[s] = pay
    return winners, pays


def cwm_srp_batch(double[:, ::1] bids, double[::1] va, double[::1] vb,
                  double[::1] lo, double[::1] sr,
                  int[::1] order_cols, int[::1] rival_ptr, int[::1] rival_idx,
                  int[::1] seller_cols=None, int[::1] adj_indptr=None,
                  int[::1] adj_indices=None, unsigned char[::1] valid=None):
    """Frontier walk: grow the audience from the seller's neighbors, withholding
    the current interim winner; at each stable audience test the winner against
    her shifted reserve, expanding her (and moving deeper along the chain) when
    she fails. order/rival arrays are unused here (numpy-backend inputs)."""
    cdef Py_ssize_t B = bids.shape[0]
    cdef Py_ssize_t n = bids.shape[1]
    winners = np.full(B, -1, dtype=np.int32)
    pays = np.zeros(B, dtype=np.float64)
    if B == 0 or seller_cols is None or seller_cols.shape[0] == 0:
        return winners, pays
    cdef int[::1] wv = winners
    cdef double[::1] pv = pays

    in_aud_arr = np.zeros(n, dtype=np.int32)
    failed_arr = np.zeros(n, dtype=np.int32)
    expanded_arr = np.zeros(n, dtype=np.int32)
    # each buyer enqueues at most twice: once on entry, once when released from hold
    queue_arr = np.zeros(2 * n + 1, dtype=np.int32)
    cdef int[::1] in_aud = in_aud_arr
    cdef int[::1] failed = failed_arr
    cdef int[::1] expanded = expanded_arr
    cdef int[::1] queue = queue_arr

    cdef Py_ssize_t s, t, e
    cdef int tag, c, j, w, held, best, second, qhead, qtail
    cdef double v, bv, sv, y, pay
    cdef bint sold

    for s in range(B):
        tag = <int> s + 1
        qhead = 0
        qtail = 0
        best = -1
        second = -1
        bv = NEG_INF
        sv = NEG_INF
        held = -1
        for t in range(seller_cols.shape[0]):
            c = seller_cols[t]
            # seller neighbors are distinct; enqueue and fold into the top-2
            in_aud[c] = tag
            v = bids[s, c] * va[c] + vb[c]
            if best == -1 or v > bv or (v == bv and c < best):
                second = best
                sv = bv
                best = c
                bv = v
            elif second == -1 or v > sv or (v == sv and c < second):
                second = c
                sv = v
            queue[qtail] = c
            qtail += 1
        sold = False
        while True:
            # withhold the current winner's declarations (unless she already failed)
            w = best if (best != -1 and bv >= 0.0 and failed[best] != tag) else -1
            if held != -1 and held != w:
                queue[qtail] = held
                qtail += 1
                held = -1
            if qhead < qtail:
                c = queue[qhead]
                qhead += 1
                if expanded[c] == tag:
                    continue
                if c == w and held == -1:
                    held = c
                    continue
                expanded[c] = tag
                for e in range(adj_indptr[c], adj_indptr[c + 1]):
                    j = adj_indices[e]
                    if valid[j] and in_aud[j] != tag:
                        in_aud[j] = tag
                        v = bids[s, j] * va[j] + vb[j]
                        if v > bv or (v == bv and j < best):
                            second = best
                            sv = bv
                            best = j
                            bv = v
                        elif second == -1 or v > sv or (v == sv and j < second):
                            second = j
                            sv = v
                        queue[qtail] = j
                        qtail += 1
                continue
            # audience stable
            if best == -1 or bv < 0.0 or failed[best] == tag:
                break  # no potential winner left
            if bids[s, best] >= sr[best]:
                y = sv if second != -1 else NEG_INF
                if y < 0.0:
                    y = 0.0
                pay = (y - vb[best]) / va[best]
                if pay < lo[best]:
                    pay = lo[best]
                if pay < sr[best]:
                    pay = sr[best]
                wv[s] = best
                pv[s] = pay
                sold = True
                break
            # reserve failed: release her declarations and walk deeper
            failed[best] = tag
            if held == best:
                held = -1
            if expanded[best] != tag:
                expanded[best] = tag
                for e in range(adj_indptr[best], adj_indptr[best + 1]):
                    j = adj_indices[e]
                    if valid[j] and in_aud[j] != tag:
                        in_aud[j] = tag
                        v = bids[s, j] * va[j] + vb[j]
                        if v > bv or (v == bv and j < best):
                            second = best
                            sv = bv
                            best = j
                            bv = v
                        elif second == -1 or v > sv or (v == sv and j < second):
                            second = j
                            sv = v
                        queue[qtail] = j
                        qtail += 1
    return winners, pays


def kpwm_batch(double[:, ::1] bids, double[::1] va, double[::1] vb, double[::1] lo,
               int k, int m, int[::1] valid_cols,
               int[::1] cand_buyer, int[::1] cand_ptr, int[::1] cand_idx):
    cdef Py_ssize_t B = bids.shape[0]
    if B == 0 or m < k:
        return np.full(B, -1, dtype=np.int32), np.zeros(B, dtype=np.float64)
    if m == k:
        return myerson_batch(bids, va, vb, lo, valid_cols)
    winners = np.full(B, -1, dtype=np.int32)
    pays = np.zeros(B, dtype=np.float64)
    cdef int[::1] wv = winners
    cdef double[::1] pv = pays
    cdef Py_ssize_t s, t, e
    cdef int c, ra, conflicts = 0
    cdef double vc, rm, v, y, pay
    for s in range(B):
        for t in range(cand_buyer.shape[0]):
            c = cand_buyer[t]
            vc = bids[s, c] * va[c] + vb[c]
            if vc < 0.0:
                continue
            rm = NEG_INF
            ra = -1
            for e in range(cand_ptr[t], cand_ptr[t + 1]):
                v = bids[s, cand_idx[e]] * va[cand_idx[e]] + vb[cand_idx[e]]
                if v > rm:
                    rm = v
                    ra = cand_idx[e]
            if vc < rm or (vc == rm and ra != -1 and ra < c):
                continue
            y = rm if rm > 0.0 else 0.0
            pay = (y - vb[c]) / va[c]
            if pay < lo[c]:
                pay = lo[c]
            if wv[s] == -1:
                wv[s] = c
                pv[s] = pay
            elif wv[s] == c:
                if pay < pv[s]:
                    pv[s] = pay
            else:
                conflicts += 1
    if conflicts:
        raise AssertionError(
            f"{conflicts} samples found two k-partial potential winners")
    return winners, pays
