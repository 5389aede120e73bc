"""Small dense linear algebra: rank, nullspace, least squares, Jacobi eigensolver.

Matrices are plain ``numpy`` arrays. Everything here targets the tiny systems
that show up in multiplier and reduced-Hessian computations (a few dozen rows
at most), so clarity wins over speed.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-9


class NotSquare(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
    return A


def rref(A, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, list[int], list[int]]:
    """Reduced row echelon form by Gauss-Jordan elimination with complete pivoting.

    Returns ``(R, pivot_cols, pivot_rows)`` where ``R`` keeps the original
    column order; ``pivot_rows[k]`` is the original row used for pivot ``k``.
    A pivot counts only if it exceeds ``tol * max(1, largest pivot)``.
    """
    R = _as_matrix(A).copy()
    rows, cols = R.shape
    row_perm = list(range(rows))
    pivot_cols: list[int] = []
    free_rows = list(range(rows))
    free_cols = list(range(cols))
    largest = 0.0
    while free_rows and free_cols:
        sub = np.abs(R[np.ix_(free_rows, free_cols)])
        r_loc, c_loc = np.unravel_index(np.argmax(sub), sub.shape)
        value = sub[r_loc, c_loc]
        if value <= tol * max(1.0, largest):
            break
        largest = max(largest, value)
        r, c = free_rows[r_loc], free_cols[c_loc]
        R[r] /= R[r, c]
        for i in range(rows):
            if i != r and R[i, c] != 0.0:
                R[i] -= R[i, c] * R[r]
        R[:, c] = 0.0
        R[r, c] = 1.0
        pivot_cols.append(c)
        free_rows.remove(r)
        free_cols.remove(c)
        row_perm.append(r)
    pivot_rows = row_perm[rows:]
    for r in free_rows:
        R[r] = 0.0
    return R, pivot_cols, pivot_rows


def rank(A, tol: float = DEFAULT_TOL) -> int:
    A = _as_matrix(A)
    if A.size == 0:
        return 0
    return len(rref(A, tol)[1])


def _orthonormalize(V: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt, applied twice for orthogonality to working precision."""
    Q = V.copy()
    k = Q.shape[1]
    for _ in range(2):
        for j in range(k):
            for i in range(j):
                Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
            Q[:, j] /= np.linalg.norm(Q[:, j])
    return Q


def nullspace(A, tol: float = DEFAULT_TOL, n: int | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of ``{w : A w = 0}``.

    ``n`` gives the ambient dimension when ``A`` has no rows.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1 and A.size == 0 or A.size == 0:
        cols = n if n is not None else (A.shape[1] if A.ndim == 2 else 0)
        return np.eye(cols)
    A = _as_matrix(A)
    cols = A.shape[1]
    R, pivots, pivot_rows = rref(A, tol)
    free = [j for j in range(cols) if j not in pivots]
    if not free:
        return np.zeros((cols, 0))
    V = np.zeros((cols, len(free)))
    for k, f in enumerate(free):
        V[f, k] = 1.0
        for p, r in zip(pivots, pivot_rows):
            V[p, k] = -R[r, f]
    return _orthonormalize(V)


def sym_eigs(H, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    Cyclic Jacobi rotations run until every off-diagonal entry is at most
    ``tol * ||H||_F``. The input is symmetrized first.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {H.shape}")
    n = H.shape[0]
    A = 0.5 * (H + H.T)
    V = np.eye(n)
    if n == 0:
        return np.zeros(0), V
    threshold = tol * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.abs(A - np.diag(np.diag(A)))
        if off.max() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= threshold * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
                V = V @ J
    eigs = np.diag(A).copy()
    order = np.argsort(eigs, kind="stable")
    return eigs[order], V[:, order]


def min_eig(H) -> float:
    """Smallest eigenvalue; ``+inf`` for an empty matrix (vacuously definite)."""
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return float("inf")
    return float(sym_eigs(H)[0][0])


def _solve_consistent(M: np.ndarray, rhs: np.ndarray, tol: float) -> np.ndarray:
    aug = np.hstack([M, rhs.reshape(-1, 1)])
    R, pivots, pivot_rows = rref(aug[:, :-1], tol)
    # Replay the elimination on the augmented matrix to carry the right-hand side.
    R_aug, _, _ = _rref_with_pivots(aug, pivots, pivot_rows)
    x = np.zeros(M.shape[1])
    for p, r in zip(pivots, pivot_rows):
        x[p] = R_aug[r, -1]
    return x


def _rref_with_pivots(A: np.ndarray, pivots: list[int], pivot_rows: list[int]):
    R = A.copy()
    for c, r in zip(pivots, pivot_rows):
        R[r] /= R[r, c]
        for i in range(R.shape[0]):
            if i != r and R[i, c] != 0.0:
                R[i] -= R[i, c] * R[r]
    return R, pivots, pivot_rows


def solve(A, b, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution of ``A x = b`` and its residual norm."""
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != b.shape[0]:
        raise DimensionMismatch("rows of A and length of b differ")
    if A.size == 0:
        return np.zeros(A.shape[1]), float(np.linalg.norm(b))
    x = _solve_consistent(A.T @ A, A.T @ b, tol)
    Z = nullspace(A, tol)
    if Z.shape[1]:
        x = x - Z @ (Z.T @ x)
    return x, float(np.linalg.norm(b - A @ x))


def reduced_hessian(H, Z) -> np.ndarray:
    """``Z^T H Z`` symmetrized; an empty basis gives a 0x0 matrix."""
    H = np.asarray(H, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != H.shape[0]:
        raise DimensionMismatch(f"basis shape {Z.shape} does not match Hessian {H.shape}")
    R = Z.T @ H @ Z
    return 0.5 * (R + R.T)
