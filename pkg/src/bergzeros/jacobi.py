"""Cyclic Jacobi eigensolver for complex Hermitian matrices."""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import EigenError


@njit(cache=True)
def _sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += abs(A[i, j]) ** 2
    norm = np.sqrt(norm)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += abs(A[i, j]) ** 2
        if np.sqrt(off) <= tol * norm:
            return sweep, True
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                # skip entries already negligible against both diagonals
                if g < 1e-18 * (abs(app) + abs(aqq)) and g < 1e-300 + tol * norm / n:
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                ph = apq / g  # e^{i alpha}
                theta = (aqq - app) / (2.0 * g)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # U restricted to (p, q): [[c, s], [-s conj(ph), c conj(ph)]]
                upp = c + 0j
                uqp = -s * np.conj(ph)
                upq = s + 0j
                uqq = c * np.conj(ph)
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = akp * upp + akq * uqp
                    A[k, q] = akp * upq + akq * uqq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = np.conj(upp) * apk + np.conj(uqp) * aqk
                    A[q, k] = np.conj(upq) * apk + np.conj(uqq) * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = vkp * upp + vkq * uqp
                    V[k, q] = vkp * upq + vkq * uqq
    return max_sweeps, False


def jacobi_eigh(T, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition ``T = V diag(w) V^*`` of a Hermitian matrix.

    Eigenvalues are returned in decreasing order with matching eigenvector
    columns.  Stops when the off-diagonal Frobenius norm is at most
    ``tol * ||T||_F``; raises :class:`EigenError` after ``max_sweeps``.
    """
    A = np.array(T, dtype=complex, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    V = np.eye(n, dtype=complex)
    if n == 0:
        return np.empty(0), V
    sweeps, ok = _sweeps(A, V, tol, max_sweeps)
    if not ok:
        raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps", sweeps=sweeps)
    w = A.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]
