"""Theory-side quantities evaluated at runtime.

Two groups live here.  The first tracks the averaged ("virtual") worker
iterate and splits the deviation from an exact power step into a Gram
mismatch part ``H`` and a triangular-factor mismatch part ``W``.  The
second evaluates the closed-form bounds: admissible approximation error,
iteration and communication budgets, and the error-floor scale.
"""
import math
from dataclasses import dataclass

import numpy as np

from .data import _ceil, measured_eta
from .errors import DimMismatch, InvalidParameter, SingularR
from .linalg_core import (
    back_substitute_right,
    condition_number,
    qr_orthonormalize,
    reference_topk,
    spectral_norm,
    tan_theta_k,
)
from .schedules import gap

DEFAULT_EPS = 0.1
DEFAULT_TAU = 6.0
_R_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class NoiseRecord:
    t: int
    H_norm: float
    W_norm: float
    G_norm: float
    epsilon0: float
    satisfied: bool
    recurrence_residual: float = float("nan")
    UG_norm: float = float("nan")
    tan_prev: float = float("nan")
    tan_now: float = float("nan")


@dataclass(frozen=True)
class TheoryReport:
    kappa: float
    sigmas: tuple
    gap_ratio: float
    Delta: int
    eta_measured: float
    eta_admissible: float
    T_required: int
    error_floor_scale: float


def virtual_iterate(states, weights):
    """Weighted average of the worker iterates (not orthonormal in general)."""
    if len(states) != len(weights) or not states:
        raise DimMismatch("need one weight per worker state")
    shape = states[0].Z.shape
    acc = np.zeros(shape)
    for s, w in zip(states, weights):
        if s.Z.shape != shape:
            raise DimMismatch(f"worker {s.index} has shape {s.Z.shape}, expected {shape}")
        acc = acc + w * s.Z
    return acc


def reference_R(P, Zbar_at_last_sync, steps_since_sync):
    """Triangular factor of the last link in the global-Gram QR chain.

    Starting from ``P_0`` (the common iterate at the last sync), factor
    ``M P_{l-1} = P_l L_l`` for ``l = 1..steps_since_sync`` and return the
    final ``L``.
    """
    if steps_since_sync < 1:
        raise InvalidParameter("steps_since_sync must be >= 1")
    Pl = np.asarray(Zbar_at_last_sync, dtype=np.float64)
    L = None
    for _ in range(steps_since_sync):
        Pl, L = qr_orthonormalize(P.global_gram @ Pl)
    return L


def noise_floor_target(sigmas, k, r, d, eps=DEFAULT_EPS, tau=DEFAULT_TAU):
    """Admissible noise level ``(sigma_k - sigma_{k+1})/5 * min(init term, eps)``."""
    gap = sigmas[k - 1] - sigmas[k]
    init = (math.sqrt(r) - math.sqrt(k - 1)) / (tau * math.sqrt(d))
    return gap / 5.0 * min(init, eps)


def _check_R(R, who):
    diag = np.abs(np.diagonal(R))
    if np.min(diag) <= _R_SINGULAR_TOL * max(np.max(diag), 1.0):
        raise SingularR(f"R factor of worker {who} is numerically singular")


def noise_components(P, states_prev, states_now, R_t):
    """Return ``(H, W)`` as ``d x r`` arrays."""
    M = P.global_gram
    H = np.zeros_like(states_prev[0].Z)
    W = np.zeros_like(H)
    for prev, now, w in zip(states_prev, states_now, P.weights):
        Ri = now.R
        _check_R(Ri, now.index)
        MZ = prev.local_gram @ prev.Z
        H = H + w * ((prev.local_gram - M) @ prev.Z)
        W = W + w * (back_substitute_right(MZ, Ri) @ (R_t - Ri))
    return H, W


def noise_decomposition(P, states_prev, states_now, R_t, sigmas, k, eps=DEFAULT_EPS, tau=DEFAULT_TAU, U_k=None, t=-1):
    """Split the virtual-iterate recursion residual into ``H + W`` and size it."""
    if len(states_prev) != P.m or len(states_now) != P.m:
        raise DimMismatch("need one state per worker")
    H, W = noise_components(P, states_prev, states_now, R_t)
    G = H + W
    d, r = G.shape
    eps0 = noise_floor_target(sigmas, k, r, d, eps, tau)
    G_norm = spectral_norm(G)
    Zbar_prev = virtual_iterate(states_prev, P.weights)
    Zbar_now = virtual_iterate(states_now, P.weights)
    resid = spectral_norm(Zbar_now @ R_t - (P.global_gram @ Zbar_prev + G))
    extra = {}
    if U_k is not None:
        extra = dict(
            UG_norm=spectral_norm(U_k.T @ G),
            tan_prev=tan_theta_k(U_k, Zbar_prev),
            tan_now=tan_theta_k(U_k, Zbar_now),
        )
    return NoiseRecord(
        t=t,
        H_norm=spectral_norm(H),
        W_norm=spectral_norm(W),
        G_norm=G_norm,
        epsilon0=eps0,
        satisfied=bool(G_norm <= eps0),
        recurrence_residual=resid,
        **extra,
    )


class NoiseTracker:
    """Per-step noise bookkeeping driven by the engine.

    Keeps the global-Gram QR chain started at the last sync incrementally,
    which reproduces :func:`reference_R` without re-running the chain.
    """

    def __init__(self, P, U_k, sigmas, k, r, eps, tau, Z0):
        self.P = P
        self.U_k = U_k
        self.sigmas = np.asarray(sigmas)
        self.k = k
        self.eps = eps
        self.tau = tau
        self._chain = np.asarray(Z0, dtype=np.float64)

    def step(self, t, states_prev, states_now, synced):
        if synced:
            R_t = states_now[0].R
            self._chain = states_now[0].Z
        else:
            self._chain, R_t = qr_orthonormalize(self.P.global_gram @ self._chain)
        return noise_decomposition(
            self.P, states_prev, states_now, R_t, self.sigmas, self.k,
            self.eps, self.tau, U_k=self.U_k, t=t,
        )


def error_propagation_check(rec, sigmas, k, eps, tol=1e-6):
    """Check the one-step tangent contraction on a :class:`NoiseRecord`.

    Returns ``(premises_hold, bound_holds)``.  The bound is only meaningful
    when the premises hold.
    """
    gap = sigmas[k - 1] - sigmas[k]
    cos_prev = 1.0 / math.sqrt(1.0 + rec.tan_prev**2) if math.isfinite(rec.tan_prev) else 0.0
    premises = 4 * rec.UG_norm <= gap * cos_prev and 4 * rec.G_norm <= gap * eps
    rate = max(eps, (sigmas[k] / sigmas[k - 1]) ** 0.25)
    bound = max(eps, rate * rec.tan_prev)
    return premises, bool(rec.tan_now <= bound + tol)


def _spectral_gap(sigmas, k):
    sk, sk1 = float(sigmas[k - 1]), float(sigmas[k])
    if not sk > sk1:
        raise InvalidParameter(f"need sigma_k > sigma_(k+1), got {sk} and {sk1}")
    return sk, sk1


def admissible_eta(sigmas, k, r, d, Delta, kappa, eps=DEFAULT_EPS, tau=DEFAULT_TAU):
    """Largest shard discrepancy the convergence guarantee tolerates (``inf`` for ``Delta == 1``)."""
    sk, sk1 = _spectral_gap(sigmas, k)
    if Delta < 1 or kappa < 1 or eps <= 0 or tau <= 0 or not 1 <= k <= r <= d:
        raise InvalidParameter("bad arguments to admissible_eta")
    if Delta == 1:
        return float("inf")
    init = (math.sqrt(r) - math.sqrt(k - 1)) / (tau * math.sqrt(d))
    return (
        math.log(2) / (80 * math.sqrt(2))
        / (Delta - 1)
        / (k * kappa**Delta)
        * (sk - sk1) / float(sigmas[0])
        * min(init, eps)
    )


def required_iterations(sigmas, k, eps, tau, d):
    sk, sk1 = _spectral_gap(sigmas, k)
    if not 0 < eps <= 0.5 or tau <= 0 or d < 1:
        raise InvalidParameter("need 0 < eps <= 1/2, tau > 0, d >= 1")
    return max(1, _ceil(4 * sk / (sk - sk1) * math.log(tau * d / eps)))


def error_floor_scale(Delta, kappa, eta):
    """``(Delta - 1) * kappa**Delta * eta``; meaningful only for relative comparison."""
    if Delta < 1 or kappa < 1 or eta < 0:
        raise InvalidParameter("need Delta >= 1, kappa >= 1, eta >= 0")
    return (Delta - 1) * kappa**Delta * eta


def baseline_comm_bound(sigmas, k, eps, d):
    sk, sk1 = _spectral_gap(sigmas, k)
    if eps <= 0 or d < 1:
        raise InvalidParameter("need eps > 0, d >= 1")
    return max(1, _ceil(4 * sk / (sk - sk1) * math.log(d / eps)))


def theory_report(P, k, r, schedule, eps=DEFAULT_EPS, tau=DEFAULT_TAU, eta=None):
    M = P.global_gram
    _, sigmas = reference_topk(M, k)
    kappa = condition_number(M)
    Delta = gap(schedule)
    eta = measured_eta(P) if eta is None else eta
    sk, sk1 = float(sigmas[k - 1]), float(sigmas[k])
    gapped = sk > sk1
    return TheoryReport(
        kappa=kappa,
        sigmas=tuple(float(s) for s in sigmas),
        gap_ratio=sk / (sk - sk1) if gapped else float("inf"),
        Delta=Delta,
        eta_measured=eta,
        eta_admissible=admissible_eta(sigmas, k, r, P.d, Delta, kappa, eps, tau) if gapped else 0.0,
        T_required=required_iterations(sigmas, k, min(eps, 0.5), tau, P.d) if gapped else 0,
        error_floor_scale=error_floor_scale(Delta, kappa, eta),
    )
