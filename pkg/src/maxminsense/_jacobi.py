"""Cyclic Jacobi eigensolver for small real symmetric matrices."""

from __future__ import annotations

import numpy as np


def jacobi_eigh(matrix: np.ndarray, max_sweeps: int = 60):
    """Diagonalize a real symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Sweeps rotate
    every off-diagonal pair above a per-sweep threshold until the
    off-diagonal mass reaches machine precision relative to the matrix norm;
    raises RuntimeError if that does not happen within max_sweeps (not
    expected for the sizes used here).
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n and not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n < 2 or norm == 0.0:
        order = np.argsort(np.diag(a), kind="stable")
        return np.diag(a)[order], v[:, order]
    eps = np.finfo(np.float64).eps

    for sweep in range(max_sweeps):
        off2 = np.sum(a * a) - np.sum(np.diag(a) ** 2)
        if off2 <= (eps * norm) ** 2:
            break
        # Rotate aggressively early, then everything that is left.
        thresh = 0.2 * np.sqrt(off2) / n if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # Entry negligible against its diagonal: flush to zero.
                if sweep > 3 and abs(apq) <= eps * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 if theta == 0.0 else np.sign(theta) / (
                    abs(theta) + np.sqrt(1.0 + theta * theta)
                )
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]
