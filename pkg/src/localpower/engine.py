"""LocalPower simulator over in-process virtual workers.

Workers are held as stacked arrays: ``Z`` has shape ``(m, d, r)`` and the
local Grams ``(m, d, d)``, so a local step is one batched matmul plus one
batched QR.  At a synchronization step the server reduction runs in worker
index order and a single QR of the aggregate is broadcast, which makes the
workers bit-identical afterwards.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics as diag
from .errors import DimMismatch, InvalidParameter, RankDeficient
from .linalg_core import batched_qr, qr_orthonormalize, reference_topk, sin_theta_k
from .schedules import SyncSchedule


@dataclass(frozen=True)
class RunConfig:
    k: int
    r: int
    T: int
    schedule: SyncSchedule
    seed: int = 0
    record_every_step: bool = False
    diagnostics: bool = False
    on_the_fly_gram: bool = False
    eps: float = diag.DEFAULT_EPS
    tau: float = diag.DEFAULT_TAU

    def validate(self, d):
        if not 1 <= self.k <= self.r <= d:
            raise InvalidParameter(f"need 1 <= k <= r <= d, got k={self.k} r={self.r} d={d}")
        if self.schedule.horizon != self.T:
            raise InvalidParameter(f"schedule horizon {self.schedule.horizon} != T={self.T}")


@dataclass
class WorkerState:
    index: int
    local_gram: np.ndarray
    Z: np.ndarray
    R: Optional[np.ndarray] = None


@dataclass
class TraceRecord:
    t: int
    comms: int
    words_sent: int
    dist: float
    noise: Optional[diag.NoiseRecord] = None


@dataclass
class ConvergenceTrace:
    records: list
    final_Z: np.ndarray
    noise: list = field(default_factory=list)

    @property
    def dists(self):
        return np.array([rec.dist for rec in self.records])

    @property
    def final_dist(self):
        return self.records[-1].dist

    @property
    def comms_total(self):
        return self.records[-1].comms


def init_subspace(d, r, seed):
    """Orthonormal ``d x r`` start from a seeded Gaussian matrix."""
    if not 1 <= r <= d:
        raise InvalidParameter(f"need 1 <= r <= d, got r={r} d={d}")
    for attempt in (seed, seed + 1):
        G = np.random.default_rng(attempt).standard_normal((d, r))
        try:
            return qr_orthonormalize(G)[0]
        except RankDeficient:
            continue
    raise RankDeficient("random start was rank deficient twice")


def _local_products(P, Z, on_the_fly):
    if not on_the_fly:
        return P.local_grams @ Z
    return np.stack([A.T @ (A @ Z[i]) / A.shape[0] for i, A in enumerate(P.shards)])


def _aggregate(weights, Y):
    acc = weights[0] * Y[0]
    for i in range(1, len(weights)):
        acc = acc + weights[i] * Y[i]
    return acc


def worker_states(P, Z, R=None):
    """Snapshot stacked worker arrays as :class:`WorkerState` objects."""
    return [
        WorkerState(i, P.local_grams[i], Z[i].copy(), None if R is None else R[i].copy())
        for i in range(P.m)
    ]


def run(P, cfg, U_k, sigmas=None, Z0=None):
    """Run LocalPower for ``cfg.T`` iterations and record the distance to ``U_k``.

    ``sigmas`` (descending spectrum of the global Gram) is only needed for
    diagnostics and is computed on demand.  ``Z0`` overrides the seeded
    start.
    """
    d = P.d
    cfg.validate(d)
    U_k = np.asarray(U_k, dtype=np.float64)
    if U_k.shape != (d, cfg.k):
        raise DimMismatch(f"U_k has shape {U_k.shape}, expected {(d, cfg.k)}")
    m, r = P.m, cfg.r
    weights = P.weights
    sched = cfg.schedule

    if Z0 is None:
        Z0 = init_subspace(d, r, cfg.seed)
    Z = np.broadcast_to(Z0, (m, d, r)).copy()

    tracker = None
    if cfg.diagnostics:
        if sigmas is None:
            _, sigmas = reference_topk(P.global_gram, cfg.k)
        tracker = diag.NoiseTracker(P, U_k, sigmas, cfg.k, r, cfg.eps, cfg.tau, Z0)

    records = []
    noise = []
    comms = 0
    words = 0
    for t in range(1, cfg.T + 1):
        Y = _local_products(P, Z, cfg.on_the_fly_gram)
        synced = t in sched
        if synced:
            Q, Rt = qr_orthonormalize(_aggregate(weights, Y))
            Z_new = np.broadcast_to(Q, (m, d, r)).copy()
            R_new = np.broadcast_to(Rt, (m, r, r)).copy()
            comms += 1
            words += d * r * m
        else:
            Z_new, R_new = batched_qr(Y)
        rec_noise = None
        if tracker is not None:
            rec_noise = tracker.step(t, worker_states(P, Z), worker_states(P, Z_new, R_new), synced)
            noise.append(rec_noise)
        Z = Z_new
        if synced or cfg.record_every_step:
            records.append(TraceRecord(t, comms, words, sin_theta_k(U_k, Z[0]), rec_noise))
    return ConvergenceTrace(records, Z[0].copy(), noise)


def comm_rounds_to_reach(trace, eps):
    """Smallest cumulative communication count with ``dist <= eps`` (``None`` if never)."""
    for rec in trace.records:
        if rec.dist <= eps:
            return rec.comms
    return None
