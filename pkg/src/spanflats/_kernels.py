"""Integer kernels for the subset-enumeration hot loop.

Every spanned flat is keyed by its primitive Plücker vector: the maximal
minors of any spanning subset of integer lifts, divided by their gcd and
signed so the first nonzero entry is positive. Determinants use fraction-free
(Bareiss) elimination so everything stays in the integers.

Two interchangeable backends compute the same integers:

* ``numba``: ``@njit`` loops over int64 arrays.
* ``numpy``: batched, vectorized Bareiss; also runs on ``dtype=object`` arrays
  of Python ints, which is the path taken whenever the int64 overflow bound
  cannot be certified.

``SPANFLATS_NUMBA=0`` in the environment selects the numpy backend.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache, reduce
from itertools import combinations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_INT64_SAFE = 2**62
_CHUNK = 1 << 18  # matrix entries per vectorized batch

_backend = "numba" if numba is not None and os.environ.get(
    "SPANFLATS_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off") else "numpy"


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    _backend = name


@lru_cache(maxsize=None)
def column_sets(width: int, r: int) -> np.ndarray:
    return np.array(list(combinations(range(width), r)), dtype=np.int64).reshape(-1, r)


@lru_cache(maxsize=None)
def laplace_tables(width: int, r: int):
    """Expansion of each (r+1)-minor of [R; p] along the row p.

    Returns ``(cols, kidx, sign)``, each of shape (C(width, r+1), r+1): the
    p-column, the index of the complementary r-minor of R, and the cofactor sign.
    """
    big = column_sets(width, r + 1)
    small = {tuple(c): i for i, c in enumerate(column_sets(width, r).tolist())}
    cols = np.empty(big.shape, dtype=np.int64)
    kidx = np.empty(big.shape, dtype=np.int64)
    sign = np.empty(big.shape, dtype=np.int64)
    for t, T in enumerate(big.tolist()):
        for pos, c in enumerate(T):
            cols[t, pos] = c
            kidx[t, pos] = small[tuple(T[:pos] + T[pos + 1:])]
            sign[t, pos] = -1 if (r + pos) % 2 else 1
    return cols, kidx, sign


def _hadamard(s: int, m: int) -> float:
    return (math.sqrt(s) * m) ** s if s > 0 else 1.0


def int64_safe(max_abs: int, rows: int) -> bool:
    """Whether Bareiss on ``rows``-square minors and the incidence test fit int64."""
    m = max(int(max_abs), 1)
    worst = max(_hadamard(rows + 1, m), 2.0 * _hadamard(rows, m) ** 2,
                (rows + 2) * m * _hadamard(rows + 1, m))
    return worst < _INT64_SAFE


# ----------------------------------------------------------------- numpy backend


def _batch_det_np(mats: np.ndarray) -> np.ndarray:
    m = mats.copy()
    b, r, _ = m.shape
    one = np.ones(b, dtype=m.dtype)
    sign, prev = one.copy(), one.copy()
    alive = np.ones(b, dtype=bool)
    rows = np.arange(b)
    for k in range(r - 1):
        nz = m[:, k:, k] != 0
        alive &= nz.any(axis=1)
        piv = k + np.argmax(nz, axis=1)
        swap = piv != k
        if swap.any():
            idx, src = rows[swap], piv[swap]
            tmp = m[idx, k, :].copy()
            m[idx, k, :] = m[idx, src, :]
            m[idx, src, :] = tmp
            sign[swap] = -sign[swap]
        pk = np.where(alive, m[:, k, k], one)
        m[:, k + 1:, k + 1:] = (m[:, k + 1:, k + 1:] * pk[:, None, None]
                                - m[:, k + 1:, k:k + 1] * m[:, k:k + 1, k + 1:]) // prev[:, None, None]
        prev = pk
    det = sign * m[:, r - 1, r - 1]
    det[~alive] = 0
    return det


def _subset_minors_np(P, subsets, colsets):
    s, r = subsets.shape
    c = colsets.shape[0]
    out = np.empty((s, c), dtype=P.dtype)
    step = max(1, _CHUNK // max(1, c * r * r))
    for lo in range(0, s, step):
        rows = P[subsets[lo:lo + step]]                      # (b, r, width)
        mats = rows[:, :, colsets].transpose(0, 2, 1, 3)      # (b, c, r, r)
        out[lo:lo + step] = _batch_det_np(mats.reshape(-1, r, r)).reshape(-1, c)
    return out


def _primitive_np(A):
    A = A.copy()
    if A.dtype == object:
        g = np.array([reduce(math.gcd, (abs(v) for v in row), 0) for row in A], dtype=object)
    else:
        g = np.gcd.reduce(np.abs(A), axis=1)
    nz = g != 0
    A[nz] //= g[nz][:, None]
    lead_idx = np.argmax(A != 0, axis=1)
    lead = A[np.arange(A.shape[0]), lead_idx]
    A[lead < 0] *= -1
    return A


def _incidence_np(P, keys, cols, kidx, sign):
    u = keys.shape[0]
    n = P.shape[0]
    out = np.empty((u, n), dtype=bool)
    t = cols.shape[0]
    step = max(1, _CHUNK // max(1, n * t))
    for lo in range(0, u, step):
        K = keys[lo:lo + step]
        acc = None
        for pos in range(cols.shape[1]):
            term = (sign[:, pos] * P[:, cols[:, pos]])[None, :, :] * K[:, kidx[:, pos]][:, None, :]
            acc = term if acc is None else acc + term
        out[lo:lo + step] = ~(acc != 0).any(axis=2)
    return out


# ----------------------------------------------------------------- numba backend

if numba is not None:

    @numba.njit(cache=True)
    def _bareiss_det_nb(m):
        r = m.shape[0]
        sign = 1
        prev = 1
        for k in range(r - 1):
            if m[k, k] == 0:
                swap = -1
                for i in range(k + 1, r):
                    if m[i, k] != 0:
                        swap = i
                        break
                if swap < 0:
                    return 0
                for j in range(r):
                    tmp = m[k, j]
                    m[k, j] = m[swap, j]
                    m[swap, j] = tmp
                sign = -sign
            for i in range(k + 1, r):
                for j in range(k + 1, r):
                    m[i, j] = (m[i, j] * m[k, k] - m[i, k] * m[k, j]) // prev
            prev = m[k, k]
        return sign * m[r - 1, r - 1]

    @numba.njit(cache=True)
    def _subset_minors_nb(P, subsets, colsets):
        s, r = subsets.shape
        c = colsets.shape[0]
        out = np.empty((s, c), dtype=np.int64)
        work = np.empty((r, r), dtype=np.int64)
        for a in range(s):
            for b in range(c):
                for i in range(r):
                    for j in range(r):
                        work[i, j] = P[subsets[a, i], colsets[b, j]]
                out[a, b] = _bareiss_det_nb(work)
        return out

    @numba.njit(cache=True)
    def _primitive_nb(A):
        out = A.copy()
        for i in range(out.shape[0]):
            g = 0
            for j in range(out.shape[1]):
                x = abs(out[i, j])
                while x:
                    g, x = x, g % x
            if g == 0:
                continue
            flip = 1
            for j in range(out.shape[1]):
                if out[i, j] != 0:
                    flip = -1 if out[i, j] < 0 else 1
                    break
            for j in range(out.shape[1]):
                out[i, j] = flip * (out[i, j] // g)
        return out

    @numba.njit(cache=True)
    def _incidence_nb(P, keys, cols, kidx, sign):
        u = keys.shape[0]
        n = P.shape[0]
        t, w = cols.shape
        out = np.ones((u, n), dtype=np.bool_)
        for a in range(u):
            for p in range(n):
                for c in range(t):
                    acc = 0
                    for pos in range(w):
                        acc += sign[c, pos] * P[p, cols[c, pos]] * keys[a, kidx[c, pos]]
                    if acc != 0:
                        out[a, p] = False
                        break
        return out


# ----------------------------------------------------------------- dispatch


def as_matrix(lifts: list[list[int]], rows: int) -> np.ndarray:
    """int64 array when the overflow bound for ``rows``-row subsets holds, else object."""
    max_abs = max((abs(v) for row in lifts for v in row), default=0)
    if int64_safe(max_abs, rows):
        return np.array(lifts, dtype=np.int64)
    out = np.empty((len(lifts), len(lifts[0]) if lifts else 0), dtype=object)
    for i, row in enumerate(lifts):
        out[i, :] = row
    return out


def _use_numba(*arrays) -> bool:
    return _backend == "numba" and all(a.dtype == np.int64 for a in arrays)


def subset_minors(P: np.ndarray, subsets: np.ndarray, colsets: np.ndarray) -> np.ndarray:
    """All ``r``-minors (columns ``colsets``) of each row subset of ``P``."""
    if subsets.shape[0] == 0:
        return np.empty((0, colsets.shape[0]), dtype=P.dtype)
    if _use_numba(P):
        return _subset_minors_nb(P, subsets, colsets)
    return _subset_minors_np(P, subsets, colsets)


def primitive(A: np.ndarray) -> np.ndarray:
    """Divide each row by its gcd and make its first nonzero entry positive."""
    if A.shape[0] == 0:
        return A.copy()
    if _use_numba(A):
        return _primitive_nb(A)
    return _primitive_np(A)


def incidence(P: np.ndarray, keys: np.ndarray, r: int) -> np.ndarray:
    """Boolean (flats x points) matrix: point lies on the flat keyed by ``keys``.

    ``keys`` are Plücker vectors of flats with ``r``-dimensional lifts.
    """
    width = P.shape[1]
    if r >= width:
        return np.ones((keys.shape[0], P.shape[0]), dtype=bool)
    cols, kidx, sign = laplace_tables(width, r)
    if keys.shape[0] == 0 or P.shape[0] == 0:
        return np.zeros((keys.shape[0], P.shape[0]), dtype=bool)
    if _use_numba(P, keys):
        return _incidence_nb(P, keys, cols, kidx, sign)
    if P.dtype == object or keys.dtype == object:
        sign = sign.astype(object)
        P, keys = P.astype(object), keys.astype(object)
    return _incidence_np(P, keys, cols, kidx, sign)
