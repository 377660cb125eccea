"""Prime-field linear algebra on numpy int64 arrays.

Matrices are plain ``np.ndarray`` of dtype int64 with entries in ``[0, q)``.
The modulus is kept below 2**31 so every product fits in int64.
"""

from __future__ import annotations

import math

import numpy as np

MAX_MODULUS = 2**31 - 1


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    p = max(n + 1, 2)
    while not is_prime(p):
        p += 1
    return p


def check_modulus(q: int) -> None:
    if not is_prime(q):
        raise FieldError(f"modulus {q} is not prime")
    if q > MAX_MODULUS:
        raise FieldError(f"modulus {q} exceeds {MAX_MODULUS}")


def as_matrix(rows, q: int, cols: int | None = None) -> np.ndarray:
    m = np.asarray(rows, dtype=np.int64)
    if m.size == 0:
        return np.zeros((m.shape[0] if m.ndim == 2 else 0, cols or 0), dtype=np.int64)
    return np.mod(m, q)


def inverse(a: int, q: int) -> int:
    return pow(int(a) % q, -1, q)


def row_reduce(m: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod q and the pivot columns."""
    a = np.mod(np.array(m, dtype=np.int64), q)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = (a[r] * inverse(a[r, c], q)) % q
        factors = a[:, c].copy()
        factors[r] = 0
        hit = np.nonzero(factors)[0]
        if hit.size:
            a[hit] = (a[hit] - np.outer(factors[hit], a[r])) % q
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray, q: int) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(row_reduce(m, q)[1])


def nullspace(m: np.ndarray, q: int) -> np.ndarray:
    """Basis of the right nullspace as columns (shape ``cols x k``)."""
    m = np.asarray(m, dtype=np.int64)
    cols = m.shape[1]
    if m.size == 0:
        return np.eye(cols, dtype=np.int64)
    red, pivots = row_reduce(m, q)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, p in enumerate(pivots):
            basis[p, k] = (-red[i, f]) % q
    return basis


def vandermonde(points, rows: int, cols: int, q: int) -> np.ndarray:
    """``V[i, j] = points[j] ** i mod q`` for ``i < rows`` and ``j < cols``."""
    pts = [int(x) % q for x in points]
    if len(pts) < cols:
        raise FieldError("need one evaluation point per column")
    pts = pts[:cols]
    if len(set(pts)) != len(pts):
        raise FieldError("evaluation points must be distinct")
    if q <= len(pts):
        raise FieldError("field too small for the requested points")
    out = np.ones((rows, cols), dtype=np.int64)
    for i in range(1, rows):
        out[i] = (out[i - 1] * np.array(pts, dtype=np.int64)) % q
    return out


def matmul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Product mod q without int64 overflow for q < 2**31."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for k in range(a.shape[1]):
        out = (out + np.outer(a[:, k], b[k])) % q
    return out
