"""Dense linear-algebra substrate: weighted inner products, solves, kernels, angles.

Everything here operates on plain numpy arrays (square real matrices,
1-D vectors).  A weight ``w`` of ``None`` means the Euclidean inner
product throughout.
"""

import numpy as np
import scipy.linalg as sla

__all__ = [
    "weighted_inner",
    "solve_symmetric",
    "solve_general",
    "kernel_basis",
    "angle_to_subspace",
    "weighted_frobenius_error",
]

#: default relative tolerance for rank decisions in kernel_basis
KERNEL_TOL = 1e-8


def weighted_inner(a, b, w=None):
    """Inner product <a, b>_W = a^T W b; ``w=None`` is the Euclidean dot."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if w is None:
        return a @ b
    w = np.asarray(w, dtype=float)
    if w.shape != (a.size, a.size):
        raise ValueError(f"weight shape {w.shape} does not match vectors of size {a.size}")
    return a @ (w @ b)


def solve_symmetric(B, rhs):
    """Solve B x = rhs for symmetric (possibly indefinite) B.

    Uses a symmetric-indefinite (Bunch-Kaufman) factorization, so
    indefinite iterates are handled without assuming positive
    definiteness.  Raises ``numpy.linalg.LinAlgError`` on singular input.
    """
    B = np.asarray(B, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    nrm = np.linalg.norm(B, "fro")
    if nrm > 0 and np.linalg.norm(B - B.T, "fro") > 1e-10 * nrm:
        raise ValueError("matrix is not symmetric within tolerance")
    try:
        return sla.solve(B, rhs, assume_a="sym")
    except sla.LinAlgError as exc:
        raise np.linalg.LinAlgError(str(exc)) from exc


def solve_general(B, rhs):
    """Solve B x = rhs via a pivoted LU factorization (B need not be symmetric)."""
    return np.linalg.solve(np.asarray(B, dtype=float), np.asarray(rhs, dtype=float))


def kernel_basis(E, tol=KERNEL_TOL):
    """Orthonormal basis (n x r column block) of the numerical kernel of E.

    Columns are the right singular vectors whose singular value is
    <= tol * sigma_max(E).  r may be zero (an (n, 0) block is returned).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    E = np.asarray(E, dtype=float)
    _, sv, vt = np.linalg.svd(E)
    smax = sv[0] if sv.size else 0.0
    mask = sv <= tol * smax
    return vt[mask].T


def angle_to_subspace(s, basis, w=None):
    """Principal angle (degrees) between s and the column span of basis under <.,.>_W.

    Computed as arccos(||proj||_W / ||s||_W) where proj is the W-orthogonal
    projection of s onto the span.  An empty basis gives 90 degrees.
    """
    s = np.asarray(s, dtype=float)
    if not np.any(s):
        raise ValueError("zero vector has no angle")
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[1] == 0:
        return 90.0
    if w is None:
        wq = basis
        ws = s
    else:
        w = np.asarray(w, dtype=float)
        wq = w @ basis
        ws = w @ s
    gram = basis.T @ wq
    coef = np.linalg.solve(gram, basis.T @ ws)
    proj = basis @ coef
    num = np.sqrt(max(weighted_inner(proj, proj, w), 0.0))
    den = np.sqrt(weighted_inner(s, s, w))
    c = min(num / den, 1.0)
    return np.degrees(np.arccos(c))


def weighted_frobenius_error(X, M=None):
    """Weighted Frobenius norm ||M X M||_F; ``M=None`` gives the plain ||X||_F."""
    X = np.asarray(X, dtype=float)
    if M is None:
        return np.linalg.norm(X, "fro")
    M = np.asarray(M, dtype=float)
    if M.shape != X.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {M.shape}")
    return np.linalg.norm(M @ X @ M, "fro")
