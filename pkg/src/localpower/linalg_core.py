"""Dense kernels and subspace metrics.

Everything here works on plain ``float64`` numpy arrays.  Eigen-information
used as ground truth comes from the cyclic Jacobi kernel, which shares no
code with the power iterations it is used to check.
"""
import numpy as np
import scipy.linalg

from .errors import DimMismatch, NoConvergence, RankDeficient, ZeroMatrix
from .kernels import jacobi_eigh, top_eigenvalue

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SPECTRAL_TOL = 1e-10
SPECTRAL_MAX_ITER = 200_000
RANK_TOL = 1e-12
TAN_SINGULAR_TOL = 1e-12

_SPECTRAL_SEED = 20240531


def gram(A):
    """Return ``A^T A / n`` with exact symmetry enforced."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise DimMismatch(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    M = (A.T @ A) / A.shape[0]
    return symmetrize(M)


def symmetrize(M):
    return 0.5 * (M + M.T)


def _sign_fix(Q, R):
    signs = np.sign(np.diagonal(R, axis1=-2, axis2=-1)).copy()
    signs[signs == 0] = 1.0
    return Q * signs[..., None, :], R * signs[..., :, None]


def qr_orthonormalize(Y, rank_tol=RANK_TOL):
    """Thin QR with a positive diagonal on ``R``.

    Raises :class:`RankDeficient` when some ``|R_jj|`` falls below
    ``rank_tol * ||Y||_F``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] > Y.shape[0]:
        raise DimMismatch(f"need a tall d x r matrix, got {Y.shape}")
    Q, R = np.linalg.qr(Y)
    Q, R = _sign_fix(Q, R)
    scale = np.linalg.norm(Y)
    if scale == 0.0 or np.min(np.diagonal(R)) <= rank_tol * scale:
        raise RankDeficient(f"numerical rank below {Y.shape[1]}")
    R = np.triu(R)
    return Q, R


def batched_qr(Y, rank_tol=RANK_TOL):
    """:func:`qr_orthonormalize` over a stack of shape ``(m, d, r)``."""
    Q, R = np.linalg.qr(Y)
    Q, R = _sign_fix(Q, R)
    scale = np.linalg.norm(Y, axis=(1, 2))
    diag_min = np.min(np.diagonal(R, axis1=1, axis2=2), axis=1)
    bad = np.flatnonzero((scale == 0.0) | (diag_min <= rank_tol * scale))
    if bad.size:
        raise RankDeficient(f"QR collapsed for worker(s) {bad.tolist()}")
    return Q, np.triu(R)


def gram_multiply(M, Z):
    M = np.asarray(M, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or Z.shape[0] != M.shape[1]:
        raise DimMismatch(f"cannot multiply {M.shape} by {Z.shape}")
    return M @ Z


def eigh_jacobi(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Full symmetric eigendecomposition, eigenvalues sorted descending."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimMismatch(f"expected a square matrix, got {M.shape}")
    w, V, sweeps = jacobi_eigh(M, tol, max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def reference_topk(M, k, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Top-``k`` eigenvectors and the full descending spectrum of ``M``."""
    d = np.shape(M)[0]
    if not 1 <= k <= d:
        raise DimMismatch(f"k={k} outside [1, {d}]")
    sigmas, V = eigh_jacobi(M, tol, max_sweeps)
    return np.ascontiguousarray(V[:, :k]), sigmas


def spectral_norm(B, tol=SPECTRAL_TOL, max_iter=SPECTRAL_MAX_ITER):
    """Largest singular value, via power iteration on the smaller Gram."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    if B.size == 0:
        raise DimMismatch("empty matrix")
    if not np.any(B):
        return 0.0
    G = B.T @ B if B.shape[0] >= B.shape[1] else B @ B.T
    if G.shape[0] == 1:
        return float(np.sqrt(G[0, 0]))
    v0 = np.random.default_rng(_SPECTRAL_SEED).standard_normal(G.shape[0])
    lam, _ = top_eigenvalue(symmetrize(G), v0, tol, max_iter)
    return float(np.sqrt(max(lam, 0.0)))


def _check_pair(U, Z):
    U = np.asarray(U, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if U.ndim != 2 or Z.ndim != 2 or U.shape[0] != Z.shape[0]:
        raise DimMismatch(f"subspaces live in different spaces: {U.shape} vs {Z.shape}")
    return U, Z


def sin_theta_k(U_k, Z):
    """Projection distance ``||(I - Z Z^T) U_k||`` clamped to ``[0, 1]``."""
    U_k, Z = _check_pair(U_k, Z)
    if Z.shape[1] < U_k.shape[1]:
        raise DimMismatch("iterate rank must be at least the target rank")
    resid = U_k - Z @ (Z.T @ U_k)
    return min(max(spectral_norm(resid), 0.0), 1.0)


def orthonormal_complement(U):
    """Columns completing ``U`` to an orthonormal basis of ``R^d``."""
    d, k = U.shape
    Q, _ = np.linalg.qr(U, mode="complete")
    return Q[:, k:]


def tan_theta_k(U, Z):
    """``||(U_perp^T Z)(U^T Z)^+||``; ``inf`` once ``U^T Z`` is singular.

    ``Z`` need not be orthonormal: the value is invariant under
    ``Z -> Z R`` for invertible ``R``.
    """
    U, Z = _check_pair(U, Z)
    k = U.shape[1]
    C = U.T @ Z
    if C.shape[1] < k:
        return float("inf")
    # C has full row rank -> C^+ = C^T (C C^T)^-1
    lam, V = eigh_jacobi(symmetrize(C @ C.T))
    scale = np.linalg.norm(Z, 2)
    if scale == 0.0 or lam[-1] <= 0.0 or np.sqrt(lam[-1]) < TAN_SINGULAR_TOL * scale:
        return float("inf")
    pinv = C.T @ (V / lam) @ V.T
    if k == U.shape[0]:
        return 0.0
    Uperp = orthonormal_complement(U)
    return spectral_norm((Uperp.T @ Z) @ pinv)


def numerical_rank(sigmas, rel_tol=RANK_TOL):
    top = sigmas[0]
    if top <= 0:
        return 0
    return int(np.sum(sigmas > rel_tol * top))


def condition_number(M):
    """``sigma_1 / sigma_rho`` over the numerically nonzero eigenvalues."""
    sigmas, _ = eigh_jacobi(M)
    rho = numerical_rank(sigmas)
    if rho == 0:
        raise ZeroMatrix("condition number of a zero matrix")
    return float(sigmas[0] / sigmas[rho - 1])


def row_coherence(A):
    """``(n / rho) * max_j ||row_j(U)||^2`` for an orthonormal basis ``U`` of range(A)."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    lam, V = eigh_jacobi(symmetrize(A.T @ A))
    rho = numerical_rank(lam)
    if rho == 0:
        raise ZeroMatrix("coherence of a zero matrix")
    U = (A @ V[:, :rho]) / np.sqrt(lam[:rho])
    lev = np.einsum("ij,ij->i", U, U)
    return float(n / rho * np.max(lev))


def back_substitute_right(X, R):
    """Solve ``Y R = X`` for ``Y`` with ``R`` upper triangular."""
    return scipy.linalg.solve_triangular(R, X.T, trans="T", lower=False).T
