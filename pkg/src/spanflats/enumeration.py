"""Enumeration of S-spanned flats and the counting quantities built on it."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import combinations

import numpy as np

from . import _kernels
from .geometry import (Flat, GeometryError, PointSet, ProjPoint, _check_same,
                       ambient_flat, join, rref_integer)


@dataclass(frozen=True)
class SpannedFlatSet:
    """All k-flats spanned by a point set, in canonical flat order.

    ``members[i]`` holds the indices (into the point set) lying on ``flats[i]``.
    """

    k: int
    ambient_dim: int
    flats: tuple[Flat, ...]
    members: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.flats)

    def __iter__(self):
        return iter(self.flats)

    @property
    def multiplicity(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self.members)

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.multiplicity).items()))

    def incidence_matrix(self, n: int) -> np.ndarray:
        out = np.zeros((len(self.flats), n), dtype=bool)
        for i, mem in enumerate(self.members):
            out[i, list(mem)] = True
        return out

    def to_json(self, include_flats: bool = False) -> dict:
        rep = {
            "k": self.k,
            "flat_count": len(self.flats),
            "multiplicity_histogram": {str(m): c for m, c in self.histogram().items()},
        }
        if include_flats:
            rep["flats"] = [{"basis": f.to_json(), "points": list(m)}
                            for f, m in zip(self.flats, self.members)]
        return rep


def integer_lift(p: ProjPoint) -> list[int]:
    """Primitive integer representative of the homogeneous coordinates of ``p``."""
    den = reduce(math.lcm, (c.denominator for c in p.coords), 1)
    ints = [int(c * den) for c in p.coords]
    g = reduce(math.gcd, (abs(v) for v in ints), 0)
    return [v // g for v in ints]


def _minors_worker(args):
    P, subsets, colsets, backend = args
    _kernels.set_backend(backend)
    return _kernels.subset_minors(P, subsets, colsets)


def _all_minors(P, subsets, colsets, workers: int):
    if workers <= 1 or len(subsets) < 2 * workers:
        return _kernels.subset_minors(P, subsets, colsets)
    chunks = np.array_split(subsets, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_minors_worker,
                              [(P, c, colsets, _kernels.backend()) for c in chunks]))
    return np.concatenate(parts, axis=0)


def spanned_flats(S: PointSet, k: int, workers: int = 1) -> SpannedFlatSet:
    """Every k-flat containing k+1 points of ``S`` with independent lifts.

    Subsets of size k+1 are keyed by their primitive Plücker vectors; each
    distinct key is turned into a canonical :class:`Flat` and its member
    points are found by an exact incidence pass. ``workers > 1`` splits the
    subset loop across processes; the output does not depend on it.
    """
    d = S.ambient_dim
    if not 0 <= k <= d - 1:
        raise GeometryError(f"k={k} out of range 0..{d - 1}")
    return _spanned_flats(S, k, max(1, int(workers)))


@lru_cache(maxsize=512)
def _spanned_flats_cached(S: PointSet, k: int) -> SpannedFlatSet:
    return _enumerate(S, k, 1)


def _spanned_flats(S: PointSet, k: int, workers: int) -> SpannedFlatSet:
    if workers == 1:
        return _spanned_flats_cached(S, k)
    return _enumerate(S, k, workers)


def _enumerate(S: PointSet, k: int, workers: int) -> SpannedFlatSet:
    d, n, r = S.ambient_dim, len(S), k + 1
    if n < r:
        return SpannedFlatSet(k, d, (), ())
    if k == 0:
        order = sorted(range(n), key=lambda i: S[i].as_flat())
        return SpannedFlatSet(0, d, tuple(S[i].as_flat() for i in order),
                              tuple((i,) for i in order))
    lifts = [integer_lift(p) for p in S]
    P = _kernels.as_matrix(lifts, r)
    colsets = _kernels.column_sets(d + 1, r)
    subsets = np.array(list(combinations(range(n), r)), dtype=np.int64)
    keys = _kernels.primitive(_all_minors(P, subsets, colsets, workers))
    first: dict[tuple, int] = {}
    for idx, row in enumerate(keys.tolist()):
        if any(row):
            first.setdefault(tuple(row), idx)
    if not first:
        return SpannedFlatSet(k, d, (), ())
    rep = list(first.values())
    ukeys = keys[rep]
    inc = _kernels.incidence(P, ukeys, r)
    flats = [Flat(rref_integer([lifts[i] for i in subsets[j]], d + 1), d) for j in rep]
    members = [tuple(np.flatnonzero(row).tolist()) for row in inc]
    skeys = [f.sort_key() for f in flats]
    order = sorted(range(len(flats)), key=skeys.__getitem__)
    return SpannedFlatSet(k, d, tuple(flats[i] for i in order),
                          tuple(members[i] for i in order))


def hyperplane_count(S: PointSet, F: Flat) -> int:
    """H_S(F): number of (dim F - 1)-flats inside F spanned by the points of S on F."""
    _check_same(F, ambient_flat(S.ambient_dim))
    if F.proj_dim < 1:
        raise GeometryError("hyperplane_count needs a flat of dimension >= 1")
    sub = S.restrict(F)
    if F.proj_dim == 1:
        return len(sub)
    return len(spanned_flats(sub, F.proj_dim - 1))


def total_hyperplanes(S: PointSet, workers: int = 1) -> int:
    """H_S of the ambient space."""
    return len(spanned_flats(S, S.ambient_dim - 1, workers))


def hyperplanes_through_point(S: PointSet, F: Flat, q: ProjPoint) -> int:
    """Spanned hyperplanes of F (w.r.t. the points of S on F) passing through ``q``."""
    if F.proj_dim < 2:
        raise GeometryError("need a flat of dimension >= 2")
    if not F.contains_vector(q.coords):
        raise GeometryError("q does not lie on F")
    census = spanned_flats(S.restrict(F), F.proj_dim - 1)
    return sum(1 for h in census.flats if h.contains_vector(q.coords))


@dataclass(frozen=True)
class IncidenceCensus:
    """Double count of (point outside P, spanned hyperplane of P) pairs."""

    L: int
    a: tuple[int, ...]
    J: int
    raw_pairs: int
    x: int
    n: int
    d: int
    h_p: int

    @property
    def sum_a(self) -> int:
        return sum(self.a)

    @property
    def j_bound(self) -> int:
        return self.x ** 2 * self.n ** (self.d - 2)

    @property
    def j_bound_holds(self) -> bool:
        return self.J <= self.j_bound

    @property
    def pairs_hold(self) -> bool:
        return self.raw_pairs == self.x * self.h_p and self.sum_a >= self.raw_pairs

    def to_json(self) -> dict:
        return {"L": self.L, "a": list(self.a), "J": self.J, "raw_pairs": self.raw_pairs,
                "sum_a": self.sum_a, "x": self.x, "n": self.n, "d": self.d,
                "H_S_P": self.h_p, "J_bound": self.j_bound,
                "J_bound_holds": self.j_bound_holds, "pairs_hold": self.pairs_hold}


def pair_plane_census(S: PointSet, P: Flat) -> IncidenceCensus:
    """Family of ambient hyperplanes <h, q> for h spanned in P and q in S off P."""
    d = S.ambient_dim
    _check_same(P, ambient_flat(d))
    if P.proj_dim != d - 1:
        raise GeometryError("P must be a hyperplane of the ambient space")
    inside = set(S.indices_in(P))
    X = [S[i] for i in range(len(S)) if i not in inside]
    if not X:
        raise GeometryError("every point lies on P; X is empty")
    hp = spanned_flats(S.subset(sorted(inside)), d - 2).flats if len(inside) >= d - 1 else ()
    family: dict[Flat, None] = {}
    for h in hp:
        for q in X:
            family.setdefault(join(h, q), None)
    fam = sorted(family)
    a = tuple(sum(1 for q in X if H.contains_vector(q.coords)) for H in fam)
    J = sum(ai * (ai - 1) // 2 for ai in a)
    return IncidenceCensus(L=len(fam), a=a, J=J, raw_pairs=len(X) * len(hp),
                           x=len(X), n=len(S), d=d, h_p=len(hp))


def contained_matrix(sub: SpannedFlatSet, sup: SpannedFlatSet, n: int) -> np.ndarray:
    """(len(sub) x len(sup)) boolean: sub-flat i lies inside flat j.

    Valid because every spanned flat is the span of its member points.
    """
    A = sub.incidence_matrix(n).astype(np.int64)
    B = sup.incidence_matrix(n).astype(np.int64)
    outside = A @ (1 - B).T
    return outside == 0


def pencil_counts(S: PointSet, workers: int = 1):
    """For each spanned hyperplane P and each point q of S: the number of
    spanned hyperplanes of P through q (zero when q is off P).

    Returns ``(hyperplanes, counts)`` with ``counts`` of shape (len(P), n).
    """
    d, n = S.ambient_dim, len(S)
    hyp = spanned_flats(S, d - 1, workers)
    sub = spanned_flats(S, d - 2, workers)
    inside = contained_matrix(sub, hyp, n).astype(np.int64)
    counts = inside.T @ sub.incidence_matrix(n).astype(np.int64)
    counts = counts * hyp.incidence_matrix(n)
    return hyp, counts


def fraction_ratio(a, b) -> Fraction | None:
    return None if b == 0 else Fraction(a) / Fraction(b)
