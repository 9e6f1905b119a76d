"""Scalar-loop kernels: cyclic Jacobi and a symmetric power iteration.

Each kernel exists twice: a loop body compiled with numba, and a numpy
version that vectorises the inner loops with slicing.  ``jacobi_eigh`` and
``top_eigenvalue`` dispatch on :data:`localpower._accel.USE_JIT`; the
``*_numba`` / ``*_numpy`` names stay importable so tests and the benchmark
can pin a path.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit


def _jacobi_loops(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += a[i, j] * a[i, j]
    norm = math.sqrt(norm)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= tol * norm:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v, -1


def jacobi_numpy(a, tol, max_sweeps):
    n = a.shape[0]
    a = np.array(a, dtype=np.float64, copy=True)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    offmask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(a[offmask] ** 2)))
        if off <= tol * norm:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, -1


def _power_loops(g, v0, tol, max_iter):
    n = g.shape[0]
    v = v0.copy()
    nv = 0.0
    for i in range(n):
        nv += v[i] * v[i]
    nv = math.sqrt(nv)
    for i in range(n):
        v[i] /= nv
    w = np.empty(n)
    lam = 0.0
    for it in range(max_iter):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += g[i, j] * v[j]
            w[i] = acc
        lam = 0.0
        for i in range(n):
            lam += v[i] * w[i]
        res = 0.0
        nw = 0.0
        for i in range(n):
            e = w[i] - lam * v[i]
            res += e * e
            nw += w[i] * w[i]
        if nw == 0.0:
            return 0.0, it + 1
        if math.sqrt(res) <= tol * abs(lam):
            return lam, it + 1
        nw = math.sqrt(nw)
        for i in range(n):
            v[i] = w[i] / nw
    return lam, -1


def power_numpy(g, v0, tol, max_iter):
    v = v0 / np.linalg.norm(v0)
    lam = 0.0
    for it in range(max_iter):
        w = g @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, it + 1
        if np.linalg.norm(w - lam * v) <= tol * abs(lam):
            return lam, it + 1
        v = w / nw
    return lam, -1


jacobi_numba = njit(cache=True)(_jacobi_loops)
power_numba = njit(cache=True)(_power_loops)


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` in the order left on the
    diagonal (unsorted); ``sweeps == -1`` means the sweep cap was hit.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if _accel.USE_JIT:
        return jacobi_numba(a, float(tol), int(max_sweeps))
    return jacobi_numpy(a, float(tol), int(max_sweeps))


def top_eigenvalue(g, v0, tol, max_iter):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Stops when ``||G v - lam v|| <= tol * lam``.  Returns ``(lam, iters)``
    with ``iters == -1`` on hitting ``max_iter``.
    """
    g = np.ascontiguousarray(g, dtype=np.float64)
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    if _accel.USE_JIT:
        return power_numba(g, v0, float(tol), int(max_iter))
    return power_numpy(g, v0, float(tol), int(max_iter))
