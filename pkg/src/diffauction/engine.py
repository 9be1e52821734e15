"""Batch evaluation engine: precompile a report structure once, evaluate a
mechanism over many bid matrices through the selected kernel backend.

The hot paths (Monte Carlo estimation, quadrature grids, deviation
enumeration) all reduce to "fixed declared graph, many bid vectors", which is
what the kernels consume. Mechanisms with non-affine virtual transforms fall
back to per-row calls of the pure implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, PreconditionError
from .mechanisms import KPWM_DEGREE_CAP, MechanismSpec
from .network import (ReportProfile, diffusion_distances, valid_buyers,
                      valid_without_diffusion)
from .valuation import ValueDistribution


@dataclass(frozen=True)
class CompiledStructure:
    """Column-indexed arrays for one declared graph (bids left free)."""

    n: int
    valid: np.ndarray          # uint8[n]
    valid_cols: np.ndarray     # int32, sorted
    order_cols: np.ndarray     # int32, valid cols by (distance, col)
    dist: np.ndarray           # int32[n], -1 for invalid
    seller_cols: np.ndarray    # int32, sorted
    adj_indptr: np.ndarray     # int32[n+1]
    adj_indices: np.ndarray    # int32
    rival_ptr: np.ndarray      # int32[n+1]
    rival_idx: np.ndarray      # int32, sorted per row
    va: np.ndarray             # float64[n]
    vb: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    affine: bool


def _dist_for(dists, i: int) -> ValueDistribution:
    if isinstance(dists, ValueDistribution):
        return dists
    return dists[i]


def compile_structure(report: ReportProfile, dists) -> CompiledStructure:
    n = report.n
    valid_set = valid_buyers(report)
    valid = np.zeros(n, dtype=np.uint8)
    for i in valid_set:
        valid[i - 1] = 1
    valid_cols = np.array(sorted(i - 1 for i in valid_set), dtype=np.int32)
    distances = diffusion_distances(report)
    dist = np.full(n, -1, dtype=np.int32)
    for i, d in distances.items():
        dist[i - 1] = d
    order_cols = np.array(sorted((i - 1 for i in valid_set),
                                 key=lambda c: (dist[c], c)), dtype=np.int32)
    seller_cols = np.array(sorted(i - 1 for i in report.seller_neighbors), dtype=np.int32)

    indptr = np.zeros(n + 1, dtype=np.int32)
    indices: list[int] = []
    for i in range(1, n + 1):
        row = sorted(j - 1 for j in report.declared(i))
        indices.extend(row)
        indptr[i] = len(indices)
    adj_indices = np.array(indices, dtype=np.int32)

    rival_ptr = np.zeros(n + 1, dtype=np.int32)
    rivals: list[int] = []
    for i in range(1, n + 1):
        if i in valid_set:
            audience = valid_without_diffusion(report, i)
            rivals.extend(sorted(j - 1 for j in audience if j != i))
        rival_ptr[i] = len(rivals)
    rival_idx = np.array(rivals, dtype=np.int32)

    va = np.ones(n, dtype=np.float64)
    vb = np.zeros(n, dtype=np.float64)
    lo = np.zeros(n, dtype=np.float64)
    hi = np.ones(n, dtype=np.float64)
    affine = True
    for i in range(1, n + 1):
        d = _dist_for(dists, i)
        lo[i - 1], hi[i - 1] = d.low, d.high
        ab = d.virtual_affine()
        if ab is None:
            affine = False
        else:
            va[i - 1], vb[i - 1] = ab
    return CompiledStructure(n, valid, valid_cols, order_cols, dist, seller_cols,
                             indptr, adj_indices, rival_ptr, rival_idx,
                             va, vb, lo, hi, affine)


def _kpwm_candidates(report: ReportProfile, k: int):
    """Structure-level candidate sets for the k-partial scan: (buyer col,
    rival cols of a reachable size-k valid set), deduplicated, in id order."""
    valid_set = valid_buyers(report)
    out_buyer: list[int] = []
    ptr = [0]
    idx: list[int] = []
    for i in sorted(valid_set):
        declared = sorted(report.declared(i))
        if len(declared) > KPWM_DEGREE_CAP:
            raise PreconditionError(
                f"buyer {i} declares {len(declared)} neighbors; subset enumeration "
                f"is capped at degree {KPWM_DEGREE_CAP}")
        seen: set[frozenset[int]] = set()
        for mask in range(1 << len(declared)):
            subset = frozenset(declared[b] for b in range(len(declared)) if mask >> b & 1)
            audience = valid_buyers(report.with_report(i, 0.0, subset))
            if len(audience) != k or audience in seen:
                continue
            seen.add(audience)
            out_buyer.append(i - 1)
            idx.extend(sorted(j - 1 for j in audience if j != i))
            ptr.append(len(idx))
    return (np.array(out_buyer, dtype=np.int32), np.array(ptr, dtype=np.int32),
            np.array(idx, dtype=np.int32))


class BatchAuction:
    """One mechanism bound to one declared graph, evaluated over bid matrices.

    run(bids) takes a (rows, n) float64 matrix of all buyers' bids (column i
    is buyer i+1; invalid buyers' columns are ignored) and returns
    (winner buyer ids with -1 for no sale, payments).
    """

    def __init__(self, report: ReportProfile, dists, spec: MechanismSpec,
                 backend=None):
        self.report = report
        self.dists = dists
        self.spec = spec
        self.backend = backend if backend is not None else _kernels.impl
        self.compiled = compile_structure(report, dists)
        self.kernel_path = self.compiled.affine
        if self.kernel_path:
            self._prepare()

    def _reserve_or_inf(self, col: int) -> float:
        from .errors import NoSaleError
        try:
            return _dist_for(self.dists, col + 1).reserve()
        except NoSaleError:
            return np.inf

    def _prepare(self):
        c = self.compiled
        spec = self.spec
        if spec.kind == "myerson-rs":
            self._participants = c.seller_cols
        elif spec.kind == "myerson-all":
            self._participants = c.valid_cols
        elif spec.kind == "kpwm":
            self._m = len(c.valid_cols)
            if self._m > spec.k:
                self._cand = _kpwm_candidates(self.report, spec.k)
            else:
                self._cand = (np.zeros(0, np.int32), np.zeros(1, np.int32),
                              np.zeros(0, np.int32))
        elif spec.kind in ("cwm", "cwm-fast", "cwm-srp"):
            sr = np.full(c.n, np.inf)
            for col in c.valid_cols:
                tau = self._reserve_or_inf(int(col))
                if spec.kind == "cwm-srp":
                    d = _dist_for(self.dists, int(col) + 1)
                    if spec.sigma.max_shift > d.high - d.low + 1e-12:
                        raise PreconditionError(
                            f"shift {spec.sigma.max_shift} exceeds the support span")
                    sr[col] = tau + spec.sigma(int(c.dist[col]))
                else:
                    sr[col] = tau
            self._sr = sr
        else:
            raise PreconditionError(f"mechanism {spec.mech_id} has no batch form")

    def _check_bids(self, bids: np.ndarray):
        c = self.compiled
        if bids.ndim != 2 or bids.shape[1] != c.n:
            raise PreconditionError(f"bid matrix must be (rows, {c.n})")
        if len(c.valid_cols) and bids.shape[0]:
            sub = bids[:, c.valid_cols]
            below = sub.min(axis=0) < c.lo[c.valid_cols] - 1e-12
            above = sub.max(axis=0) > c.hi[c.valid_cols] + 1e-12
            if below.any() or above.any():
                col = int(c.valid_cols[int(np.argmax(below | above))])
                raise DomainError(f"bids for buyer {col + 1} leave the support "
                                  f"[{c.lo[col]}, {c.hi[col]}]")

    def run(self, bids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bids = np.ascontiguousarray(bids, dtype=np.float64)
        self._check_bids(bids)
        if not self.kernel_path:
            return self._run_generic(bids)
        c = self.compiled
        spec = self.spec
        if spec.kind in ("myerson-rs", "myerson-all"):
            cols, pays = self.backend.myerson_batch(bids, c.va, c.vb, c.lo,
                                                    self._participants)
        elif spec.kind == "kpwm":
            cols, pays = self.backend.kpwm_batch(bids, c.va, c.vb, c.lo,
                                                 spec.k, self._m, c.valid_cols,
                                                 *self._cand)
        else:
            cols, pays = self.backend.cwm_srp_batch(
                bids, c.va, c.vb, c.lo, self._sr, c.order_cols,
                c.rival_ptr, c.rival_idx, c.seller_cols,
                c.adj_indptr, c.adj_indices, c.valid)
        winners = np.where(cols >= 0, cols + 1, -1).astype(np.int32)
        return winners, pays

    def _run_generic(self, bids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rows = bids.shape[0]
        winners = np.full(rows, -1, dtype=np.int32)
        pays = np.zeros(rows, dtype=np.float64)
        for r in range(rows):
            reports = {i: (bids[r, i - 1], self.report.declared(i))
                       for i in self.report.buyers}
            outcome = self.spec.run(
                ReportProfile(self.report.seller_neighbors, reports), self.dists)
            if outcome.winner is not None:
                winners[r] = outcome.winner
                pays[r] = outcome.payment(outcome.winner)
        return winners, pays

    def revenues(self, bids: np.ndarray) -> np.ndarray:
        _, pays = self.run(bids)
        return pays


def default_chunk_rows(n: int, target_floats: int = 4_000_000) -> int:
    """Chunk size keeping intermediate (rows x n) arrays around 32 MB."""
    return max(1024, target_floats // max(n, 1))
