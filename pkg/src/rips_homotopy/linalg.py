"""Small dense linear algebra over GF(p) and integer Smith normal form."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError


def is_prime(p: int) -> bool:
    if not isinstance(p, (int, np.integer)) or p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def require_prime(p: int) -> int:
    if not is_prime(p):
        raise ValidationError(f"{p} is not prime")
    return int(p)


def as_gf(M, p: int) -> np.ndarray:
    return np.asarray(M, dtype=np.int64) % p


def row_reduce(M, p: int) -> tuple[np.ndarray, list]:
    """Reduced row echelon form over GF(p) and the pivot columns."""
    A = as_gf(M, p).copy()
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        if others.size:
            A[others] = (A[others] - np.outer(A[others, c], A[r])) % p
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M, p: int) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(row_reduce(M, p)[1])


def nullspace(M, p: int) -> np.ndarray:
    """Columns spanning the kernel of M over GF(p)."""
    M = np.asarray(M)
    cols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    R, pivots = row_reduce(M, p)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for j, f in enumerate(free):
        basis[f, j] = 1
        for i, pc in enumerate(pivots):
            basis[pc, j] = (-R[i, f]) % p
    return basis


def inverse(M, p: int) -> np.ndarray:
    M = as_gf(M, p)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValidationError("only square matrices can be inverted")
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    R, pivots = row_reduce(np.hstack([M, np.eye(n, dtype=np.int64)]), p)
    if pivots[:n] != list(range(n)):
        raise ValidationError("matrix is singular over GF(p)")
    return R[:, n:]


def matmul(A, B, p: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.shape[1] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    return (A @ B) % p


def column_space_contains(F, G, p: int) -> bool:
    """True if every column of G lies in the column space of F."""
    G = np.asarray(G)
    if G.size == 0:
        return True
    F = np.asarray(F).reshape(G.shape[0], -1)
    return rank(np.hstack([F, G]), p) == rank(F, p)


def smith_diagonal(M) -> list:
    """Non-zero diagonal of the Smith normal form of an integer matrix.

    Entries are positive, each dividing the next. Exact arithmetic on
    Python integers.
    """
    A = [[int(x) for x in row] for row in np.asarray(M, dtype=object).tolist()]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    diag = []
    t = 0
    while t < min(rows, cols):
        entries = [(abs(A[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if A[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            done = True
            piv = A[t][t]
            for i in range(t + 1, rows):
                q = A[i][t] // piv
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    done = False
            for j in range(t + 1, cols):
                q = A[t][j] // piv
                if q:
                    for row in A:
                        row[j] -= q * row[t]
                if A[t][j]:
                    done = False
            if done:
                bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                            if A[i][j] % piv), None)
                if bad is None:
                    break
                # fold the offending row in so the next pivot divides everything
                A[t] = [a + b for a, b in zip(A[t], A[bad[0]])]
                continue
            # a smaller remainder sits in row t or column t; move it to the pivot
            cand = [(abs(A[i][t]), i, t) for i in range(t + 1, rows) if A[i][t]]
            cand += [(abs(A[t][j]), t, j) for j in range(t + 1, cols) if A[t][j]]
            _, i, j = min(cand)
            A[t], A[i] = A[i], A[t]
            for row in A:
                row[t], row[j] = row[j], row[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag
