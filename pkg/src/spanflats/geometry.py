"""Exact projective geometry over the rationals.

Points of RP^d are canonical homogeneous vectors (first nonzero entry 1) and
flats are stored as the reduced row-echelon basis of their linear lift, so two
flats are the same set exactly when their stored bases are equal.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Vector = tuple[Fraction, ...]


class GeometryError(ValueError):
    """Raised when a geometric precondition does not hold."""


class DimensionMismatch(GeometryError):
    """Raised when objects from different ambient spaces are combined."""


def to_scalar(value) -> Fraction:
    """Parse ``value`` (int, Fraction, or a string such as ``"-3/4"``) exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise GeometryError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GeometryError(f"malformed rational: {value!r}") from exc
    raise GeometryError(f"not an exact rational: {value!r}")


def format_scalar(x: Fraction) -> str:
    return str(x)


# ---------------------------------------------------------------- linear algebra


def rref(rows: Iterable[Sequence[Fraction]], width: int) -> tuple[Vector, ...]:
    """Reduced row-echelon basis of the row space of ``rows`` (zero rows dropped)."""
    m = [list(r) for r in rows]
    for r in m:
        if len(r) != width:
            raise DimensionMismatch(f"row of length {len(r)}, expected {width}")
    out: list[list[Fraction]] = []
    pivot_row = 0
    for col in range(width):
        pr = next((i for i in range(pivot_row, len(m)) if m[i][col] != 0), None)
        if pr is None:
            continue
        m[pivot_row], m[pr] = m[pr], m[pivot_row]
        piv = m[pivot_row][col]
        if piv != 1:
            m[pivot_row] = [v / piv for v in m[pivot_row]]
        top = m[pivot_row]
        for i in range(len(m)):
            if i != pivot_row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], top)]
        pivot_row += 1
        if pivot_row == len(m):
            break
    out = m[:pivot_row]
    return tuple(tuple(r) for r in out)


def rref_integer(rows: Iterable[Sequence[int]], width: int) -> tuple[Vector, ...]:
    """Same result as :func:`rref` for integer rows, eliminating in the integers.

    Rows are kept primitive (divided by their gcd) so entries stay small; the
    Fractions are only formed once, for the final reduced rows.
    """
    m = [list(map(int, r)) for r in rows]
    for r in m:
        if len(r) != width:
            raise DimensionMismatch(f"row of length {len(r)}, expected {width}")
    pivots: list[int] = []
    pivot_row = 0
    for col in range(width):
        pr = next((i for i in range(pivot_row, len(m)) if m[i][col] != 0), None)
        if pr is None:
            continue
        m[pivot_row], m[pr] = m[pr], m[pivot_row]
        top = m[pivot_row]
        a = top[col]
        for i in range(len(m)):
            if i != pivot_row and m[i][col] != 0:
                b = m[i][col]
                row = [a * x - b * y for x, y in zip(m[i], top)]
                g = math.gcd(*row)
                m[i] = [x // g for x in row] if g > 1 else row
        pivots.append(col)
        pivot_row += 1
        if pivot_row == len(m):
            break
    return tuple(tuple(Fraction(x, r[p]) for x in r) for r, p in zip(m[:pivot_row], pivots))


def _pivots(basis: Sequence[Vector]) -> list[int]:
    return [next(j for j, v in enumerate(row) if v != 0) for row in basis]


def _reduce(vec: Sequence[Fraction], basis: Sequence[Vector], pivots: Sequence[int]) -> list[Fraction]:
    v = list(vec)
    for row, p in zip(basis, pivots):
        c = v[p]
        if c != 0:
            v = [a - c * b for a, b in zip(v, row)]
    return v


def nullspace(basis: Sequence[Vector], width: int) -> tuple[Vector, ...]:
    """Basis of {x : row . x = 0 for every row} for an RREF ``basis``."""
    pivots = _pivots(basis)
    free = [j for j in range(width) if j not in pivots]
    vecs = []
    for f in free:
        v = [Fraction(0)] * width
        v[f] = Fraction(1)
        for row, p in zip(basis, pivots):
            v[p] = -row[f]
        vecs.append(tuple(v))
    return tuple(vecs)


# ---------------------------------------------------------------- points & flats


def _canonical_coords(coords: Sequence) -> Vector:
    vals = tuple(to_scalar(c) for c in coords)
    lead = next((v for v in vals if v != 0), None)
    if lead is None:
        raise GeometryError("homogeneous coordinates must not all be zero")
    if lead != 1:
        vals = tuple(v / lead for v in vals)
    return vals


@dataclass(frozen=True)
class ProjPoint:
    """A point of RP^d with first nonzero homogeneous coordinate equal to 1."""

    coords: Vector

    def __post_init__(self):
        canon = _canonical_coords(self.coords)
        if len(canon) < 3:
            raise GeometryError("ambient dimension must be at least 2")
        object.__setattr__(self, "coords", canon)

    @property
    def ambient_dim(self) -> int:
        return len(self.coords) - 1

    @property
    def at_infinity(self) -> bool:
        return self.coords[0] == 0

    def affine(self) -> Vector:
        if self.at_infinity:
            raise GeometryError("point at infinity has no affine coordinates")
        return self.coords[1:]

    def as_flat(self) -> "Flat":
        return Flat((self.coords,), self.ambient_dim)

    def to_json(self) -> list[str]:
        return [format_scalar(c) for c in self.coords]

    def __repr__(self) -> str:
        return "ProjPoint(" + ":".join(map(str, self.coords)) + ")"


@functools.total_ordering
@dataclass(frozen=True, eq=True)
class Flat:
    """Projective flat stored as the RREF basis of its linear lift.

    ``proj_dim`` is ``len(basis) - 1``; the empty flat has ``proj_dim == -1``.
    Construct through :func:`canonical_flat` unless the basis is already
    canonical.
    """

    basis: tuple[Vector, ...]
    ambient_dim: int
    _pivots: tuple[int, ...] = field(default=(), compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_pivots", tuple(_pivots(self.basis)))

    @property
    def proj_dim(self) -> int:
        return len(self.basis) - 1

    @property
    def width(self) -> int:
        return self.ambient_dim + 1

    @property
    def is_empty(self) -> bool:
        return not self.basis

    @property
    def is_ambient(self) -> bool:
        return len(self.basis) == self.width

    def sort_key(self):
        return (
            self.proj_dim,
            tuple((v.numerator, v.denominator) for row in self.basis for v in row),
        )

    def __lt__(self, other: "Flat") -> bool:
        if not isinstance(other, Flat):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def contains_vector(self, vec: Sequence[Fraction]) -> bool:
        return not any(_reduce(vec, self.basis, self._pivots))

    def contains(self, item: Union["Flat", ProjPoint]) -> bool:
        other = _as_flat(item)
        _check_same(self, other)
        return all(self.contains_vector(r) for r in other.basis)

    def __contains__(self, item) -> bool:
        return self.contains(item)

    def to_json(self) -> list[list[str]]:
        return [[format_scalar(v) for v in row] for row in self.basis]

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(map(str, r)) for r in self.basis)
        return f"Flat(dim={self.proj_dim}, [{rows}])"


FlatLike = Union[Flat, ProjPoint]


def _as_flat(x: FlatLike) -> Flat:
    if isinstance(x, Flat):
        return x
    if isinstance(x, ProjPoint):
        return x.as_flat()
    raise TypeError(f"expected Flat or ProjPoint, got {type(x).__name__}")


def _check_same(*flats: Flat) -> int:
    dims = {f.ambient_dim for f in flats}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed ambient dimensions {sorted(dims)}")
    return dims.pop()


def embed_affine(coords: Sequence) -> ProjPoint:
    """Affine chart R^d -> RP^d: ``(x_1..x_d) -> (1 : x_1 : ... : x_d)``."""
    if len(coords) < 2:
        raise GeometryError("affine points need at least 2 coordinates")
    return ProjPoint((Fraction(1),) + tuple(to_scalar(c) for c in coords))


def canonical_flat(generators: Sequence[Sequence], ambient_dim: int | None = None) -> Flat:
    """The flat whose lift is spanned by ``generators`` (homogeneous vectors)."""
    gens = [tuple(to_scalar(v) for v in g) for g in generators]
    widths = {len(g) for g in gens}
    if len(widths) > 1:
        raise DimensionMismatch(f"generators of mixed lengths {sorted(widths)}")
    if gens:
        width = widths.pop()
        if ambient_dim is not None and width != ambient_dim + 1:
            raise DimensionMismatch(f"generators of length {width} in RP^{ambient_dim}")
        ambient_dim = width - 1
    elif ambient_dim is None:
        raise GeometryError("ambient_dim is required for an empty generator list")
    return Flat(rref(gens, ambient_dim + 1), ambient_dim)


def empty_flat(ambient_dim: int) -> Flat:
    return Flat((), ambient_dim)


def ambient_flat(ambient_dim: int) -> Flat:
    w = ambient_dim + 1
    return Flat(
        tuple(tuple(Fraction(int(i == j)) for j in range(w)) for i in range(w)),
        ambient_dim,
    )


def join(*items: FlatLike) -> Flat:
    """Smallest flat containing every argument (a list may be passed too)."""
    if len(items) == 1 and isinstance(items[0], (list, tuple)):
        items = tuple(items[0])
    if not items:
        raise GeometryError("join of nothing needs an ambient dimension")
    flats = [_as_flat(x) for x in items]
    d = _check_same(*flats)
    if len(flats) == 1:
        return flats[0]
    return Flat(rref([r for f in flats for r in f.basis], d + 1), d)


def meet(a: FlatLike, b: FlatLike) -> Flat:
    """Intersection of two flats (the empty flat when the lifts meet trivially)."""
    a, b = _as_flat(a), _as_flat(b)
    d = _check_same(a, b)
    w = d + 1
    dual = rref(nullspace(a.basis, w) + nullspace(b.basis, w), w)
    return Flat(rref(nullspace(dual, w), w), d)


@dataclass(frozen=True)
class FlatRelation:
    contains: bool  # one of the two flats lies inside the other
    equal: bool
    disjoint: bool
    dims: tuple[int, int, int, int]  # (dim A, dim B, dim join, dim meet)
    a_in_b: bool
    b_in_a: bool


def flat_relation(a: FlatLike, b: FlatLike) -> FlatRelation:
    a, b = _as_flat(a), _as_flat(b)
    _check_same(a, b)
    j, m = join(a, b), meet(a, b)
    a_in_b, b_in_a = j == b, j == a
    return FlatRelation(
        contains=a_in_b or b_in_a,
        equal=a == b,
        disjoint=m.is_empty,
        dims=(a.proj_dim, b.proj_dim, j.proj_dim, m.proj_dim),
        a_in_b=a_in_b,
        b_in_a=b_in_a,
    )


def project_through(center: Flat, target: Flat, x: ProjPoint) -> ProjPoint:
    """Central projection of ``x`` from ``center`` onto ``target``.

    Returns ``join(center, x) & target``, computed as the ``target`` component
    of the lift of ``x`` in lift(center) + lift(target).
    """
    center, target = _as_flat(center), _as_flat(target)
    d = _check_same(center, target, x.as_flat())
    if not meet(center, target).is_empty:
        raise GeometryError("projection center and target must be disjoint")
    if center.contains_vector(x.coords):
        raise GeometryError("cannot project the center of projection")
    nq = len(center.basis)
    rows = list(center.basis) + list(target.basis)
    # solve sum_i c_i rows_i = x via RREF of the augmented transpose
    w = len(rows) + 1
    aug = [[rows[i][j] for i in range(len(rows))] + [x.coords[j]] for j in range(d + 1)]
    red = rref(aug, w)
    piv = _pivots(red)
    if w - 1 in piv:
        raise GeometryError("point lies outside join(center, target)")
    coef = [Fraction(0)] * (w - 1)
    for row, p in zip(red, piv):
        coef[p] = row[-1]
    comp = [sum((coef[nq + i] * target.basis[i][j] for i in range(len(target.basis))), Fraction(0))
            for j in range(d + 1)]
    return ProjPoint(tuple(comp))


def is_independent(vectors: Sequence[Sequence[Fraction]], width: int) -> bool:
    return len(rref(vectors, width)) == len(vectors)


@dataclass(frozen=True)
class PointSet:
    """Finite set of distinct points of RP^d, kept in insertion order."""

    points: tuple[ProjPoint, ...]
    ambient_dim: int
    label: str = ""

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        for p in pts:
            if p.ambient_dim != self.ambient_dim:
                raise DimensionMismatch(
                    f"point {p!r} is not in RP^{self.ambient_dim}")
        if len(set(pts)) != len(pts):
            raise GeometryError("duplicate points in PointSet")

    @classmethod
    def from_affine(cls, rows: Iterable[Sequence], label: str = "") -> "PointSet":
        pts = [embed_affine(r) for r in rows]
        if not pts:
            raise GeometryError("empty point set needs an explicit ambient_dim")
        return cls(tuple(pts), pts[0].ambient_dim, label)

    @classmethod
    def dedup(cls, points: Iterable[ProjPoint], ambient_dim: int, label: str = "") -> tuple["PointSet", int]:
        """Build a PointSet dropping repeats; also returns how many were dropped."""
        seen: dict[ProjPoint, None] = {}
        total = 0
        for p in points:
            total += 1
            seen.setdefault(p, None)
        return cls(tuple(seen), ambient_dim, label), total - len(seen)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def n(self) -> int:
        return len(self.points)

    @functools.cached_property
    def span(self) -> Flat:
        if not self.points:
            return empty_flat(self.ambient_dim)
        return canonical_flat([p.coords for p in self.points], self.ambient_dim)

    def indices_in(self, flat: Flat) -> tuple[int, ...]:
        _check_same(flat, ambient_flat(self.ambient_dim))
        return tuple(i for i, p in enumerate(self.points) if flat.contains_vector(p.coords))

    def count_in(self, flat: Flat) -> int:
        return len(self.indices_in(flat))

    def subset(self, indices: Iterable[int], label: str | None = None) -> "PointSet":
        return PointSet(tuple(self.points[i] for i in indices), self.ambient_dim,
                        self.label if label is None else label)

    def restrict(self, flat: Flat) -> "PointSet":
        return self.subset(self.indices_in(flat))
