"""Dense linear algebra that also works in extended precision.

``numpy.linalg`` only supports float32/float64.  For ``np.longdouble`` inputs
the SVD is computed by a one-sided (Hestenes) Jacobi iteration, warm-started
from the float64 factorization, which is what makes the tiny singular values
of the background example resolvable.
"""

import numpy as np


def is_native(dtype):
    return np.dtype(dtype) in (np.dtype(np.float64), np.dtype(np.float32))


def _round_robin(n):
    # Tournament schedule: each step is a set of disjoint column pairs.
    m = n + (n % 2)
    idx = list(range(m))
    steps = []
    for _ in range(m - 1):
        p = np.array(idx[: m // 2])
        q = np.array(idx[m // 2:][::-1])
        keep = (p < n) & (q < n)
        steps.append((p[keep], q[keep]))
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return steps


def _polish_orthonormal(P, steps=2):
    eye = np.eye(P.shape[1], dtype=P.dtype)
    for _ in range(steps):
        P = P @ (1.5 * eye - 0.5 * (P.T @ P))
    return P


def jacobi_svd(A, tol=None, max_sweeps=60):
    """Thin SVD ``A = X diag(s) P.T`` of a tall matrix by one-sided Jacobi.

    Works in the dtype of ``A``.  Returns ``(X, s, P)`` with ``s`` sorted in
    descending order; columns of ``X`` belonging to exactly-zero singular
    values are zero.
    """
    A = np.asarray(A)
    dt = A.dtype
    m, n = A.shape
    if m < n:
        X, s, P = jacobi_svd(A.T, tol=tol, max_sweeps=max_sweeps)
        return P, s, X
    eps = np.finfo(dt).eps
    if tol is None:
        tol = eps * n
    _, _, vt = np.linalg.svd(A.astype(np.float64), full_matrices=False)
    P = _polish_orthonormal(vt.T.astype(dt))
    B = A @ P
    steps = _round_robin(n)
    for _ in range(max_sweeps):
        off = 0.0
        for p, q in steps:
            if p.size == 0:
                continue
            bp, bq = B[:, p], B[:, q]
            alpha = np.einsum("ij,ij->j", bp, bp)
            beta = np.einsum("ij,ij->j", bq, bq)
            gamma = np.einsum("ij,ij->j", bp, bq)
            denom = np.sqrt(alpha * beta)
            safe = denom > 0
            ratio = np.zeros_like(denom)
            ratio[safe] = np.abs(gamma[safe]) / denom[safe]
            if ratio.size:
                off = max(off, float(ratio.max()))
            act = ratio > tol
            if not act.any():
                continue
            p, q = p[act], q[act]
            alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            zeta = (beta - alpha) / (2 * gamma)
            t = np.where(zeta >= 0, 1, -1).astype(dt) / (np.abs(zeta) + np.sqrt(1 + zeta * zeta))
            c = 1 / np.sqrt(1 + t * t)
            s = c * t
            bp, bq = B[:, p], B[:, q]
            B[:, p] = c * bp - s * bq
            B[:, q] = s * bp + c * bq
            vp, vq = P[:, p], P[:, q]
            P[:, p] = c * vp - s * vq
            P[:, q] = s * vp + c * vq
        if off <= tol:
            break
    sig = np.sqrt(np.einsum("ij,ij->j", B, B))
    order = np.argsort(-sig, kind="stable")
    sig, P, B = sig[order], P[:, order], B[:, order]
    X = np.zeros_like(B)
    nz = sig > 0
    X[:, nz] = B[:, nz] / sig[nz]
    return X, sig, P


def svd(A):
    """Thin SVD in the dtype of ``A``; singular values descending."""
    A = np.asarray(A)
    if is_native(A.dtype):
        X, s, Pt = np.linalg.svd(A, full_matrices=False)
        return X, s, Pt.T
    return jacobi_svd(A)


def eigh_descending(G):
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order.

    Ties keep the solver's output order (stable sort).
    """
    G = np.asarray(G)
    if is_native(G.dtype):
        lam, psi = np.linalg.eigh(G)
    else:
        # symmetric: singular vectors are eigenvectors, signs from the Rayleigh quotient
        _, _, psi = jacobi_svd(G)
        lam = np.einsum("ij,ij->j", psi, G @ psi)
    order = np.argsort(-lam, kind="stable")
    return lam[order], psi[:, order]


def pinv(A, rtol=None):
    """Moore-Penrose pseudoinverse; singular values <= rtol * s_max are dropped.

    ``rtol`` defaults to ``max(A.shape) * eps``.
    """
    A = np.asarray(A)
    if rtol is None:
        rtol = max(A.shape) * np.finfo(A.dtype).eps
    X, s, P = svd(A)
    if s.size == 0 or s[0] == 0:
        return np.zeros(A.T.shape, dtype=A.dtype)
    keep = s > rtol * s[0]
    return (P[:, keep] / s[keep]) @ X[:, keep].T
