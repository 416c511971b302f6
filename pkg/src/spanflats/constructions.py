"""Point-configuration generators and the nice-sequence hyperplane builder."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain, combinations
from typing import Iterator, Mapping

from .enumeration import spanned_flats
from .geometry import (Flat, GeometryError, PointSet, ProjPoint, canonical_flat,
                       embed_affine, join, meet, nullspace, project_through, rref)
from .structure import FlatCollection, check_good_collection

KINDS = ("general_position", "two_skew_lines", "skew_line_family", "flat_cluster",
         "flat_union", "grid")
REJECTION_BUDGET = 10_000
PROJECTION_TRIALS = 100


class ConstructionError(ValueError):
    """A generator or nice-sequence construction could not complete."""


@dataclass(frozen=True)
class ConfigSpec:
    kind: str
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConstructionError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    @classmethod
    def from_json(cls, data: Mapping) -> "ConfigSpec":
        data = dict(data)
        if "kind" not in data:
            raise ConstructionError("config spec needs a 'kind'")
        kind = data.pop("kind")
        seed = data.pop("seed", 0)
        params = dict(data.pop("params", {}))
        params.update(data)
        return cls(kind, params, seed)

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "params": dict(self.params)}


# ----------------------------------------------------------------- generators


def _rng(seed: int) -> random.Random:
    return random.Random(seed)


def _lattice_general_position(n: int, d: int, rng: random.Random, bound: int) -> list[tuple[int, ...]]:
    """n integer points of R^d with no d+1 on a hyperplane (no 3 collinear if d=2)."""
    pts: list[tuple[int, ...]] = []
    lifts: list[tuple[Fraction, ...]] = []
    normals: list[tuple[Fraction, ...]] = []
    tries = 0
    while len(pts) < n:
        tries += 1
        if tries > REJECTION_BUDGET:
            raise ConstructionError(f"rejection budget exhausted placing point {len(pts) + 1} of {n}")
        cand = tuple(rng.randint(-bound, bound) for _ in range(d))
        lift = (Fraction(1),) + tuple(Fraction(c) for c in cand)
        if len(pts) < d:
            if len(rref(lifts + [lift], d + 1)) != len(lifts) + 1:
                continue
        elif any(sum(a * b for a, b in zip(nv, lift)) == 0 for nv in normals):
            continue
        if len(pts) >= d - 1:
            for T in combinations(range(len(pts)), d - 1):
                basis = rref([lifts[i] for i in T] + [lift], d + 1)
                normals.append(nullspace(basis, d + 1)[0])
        pts.append(cand)
        lifts.append(lift)
    return pts


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConstructionError(msg)


def _int_param(p: Mapping, name: str, default=None, minimum: int = 0) -> int:
    if name not in p:
        if default is None:
            raise ConstructionError(f"missing parameter {name!r}")
        return default
    v = p[name]
    _require(isinstance(v, int) and not isinstance(v, bool), f"{name!r} must be an integer")
    _require(v >= minimum, f"{name!r} must be >= {minimum}")
    return v


def _random_flat(d: int, dim: int, rng: random.Random, bound: int):
    """Affine base point and ``dim`` independent integer directions."""
    while True:
        base = [rng.randint(-bound, bound) for _ in range(d)]
        dirs = [[rng.randint(-3, 3) for _ in range(d)] for _ in range(dim)]
        if len(rref([[Fraction(v) for v in r] for r in dirs], d)) == dim:
            return base, dirs


def _points_on_flat(base, dirs, count: int, rng: random.Random, bound: int):
    dim = len(dirs)
    if dim == 0:
        _require(count <= 1, "a 0-dimensional flat holds at most one point")
        return [tuple(base)] * count
    if dim == 1:
        ts = rng.sample(range(-bound, bound + 1), count)
        coeffs = [(t,) for t in ts]
    else:
        coeffs = _lattice_general_position(count, dim, rng, bound)
    return [tuple(b + sum(c * v[j] for c, v in zip(cf, dirs)) for j, b in enumerate(base))
            for cf in coeffs]


def _affine_flat(base, dirs) -> Flat:
    d = len(base)
    gens = [(1, *base)] + [(0, *v) for v in dirs]
    return canonical_flat(gens, d)


def _planted(p: Mapping, rng: random.Random, require_small: bool):
    d = _int_param(p, "d", minimum=2)
    specs = p.get("flats")
    _require(isinstance(specs, list) and specs, "'flats' must be a nonempty list of {dim, count}")
    dims = [_int_param(f, "dim", minimum=0) for f in specs]
    counts = [_int_param(f, "count", minimum=1) for f in specs]
    _require(all(a < d for a in dims), "flat dimensions must be < d")
    if require_small:
        _require(sum(dims) < d, "flat_cluster needs the sum of flat dimensions < d")
    x = _int_param(p, "x", 0)
    bound = _int_param(p, "coord_range", 6 * max(counts + [x, 2]), minimum=1)
    flats, points = [], []
    for a, c in zip(dims, counts):
        for _ in range(REJECTION_BUDGET):
            base, dirs = _random_flat(d, a, rng, bound)
            F = _affine_flat(base, dirs)
            if any(G.proj_dim + a < d and not meet(F, G).is_empty for G in flats):
                continue
            new = _points_on_flat(base, dirs, c, rng, bound)
            lifts = [embed_affine(q) for q in new]
            if len(set(lifts)) != len(lifts) or any(q in points for q in lifts):
                continue
            if any(G.contains_vector(q.coords) for G in flats for q in lifts):
                continue
            flats.append(F)
            points.extend(lifts)
            break
        else:
            raise ConstructionError("rejection budget exhausted placing planted flats")
    placed = 0
    for _ in range(REJECTION_BUDGET):
        if placed == x:
            break
        q = embed_affine([rng.randint(-bound, bound) for _ in range(d)])
        if q in points or any(F.contains_vector(q.coords) for F in flats):
            continue
        points.append(q)
        placed += 1
    _require(placed == x, "rejection budget exhausted placing outliers")
    return points, flats, d


def _skew_lines_3(p: Mapping):
    counts = p.get("counts")
    if counts is None:
        m = _int_param(p, "m", minimum=1)
        counts = [m, m, m]
    _require(isinstance(counts, list) and len(counts) == 3, "'counts' must list 3 line sizes")
    arrangement = p.get("arrangement", "transversal")
    _require(arrangement in ("transversal", "generic"), f"unknown arrangement {arrangement!r}")
    # lines {x = a, z = a y} for a = 0, 1, 2: one ruling of the quadric z = xy
    lines = [canonical_flat([(1, a, 0, 0), (0, 0, 1, a)], 3) for a in range(3)]
    pts = []
    for a, m in enumerate(counts):
        _require(isinstance(m, int) and m >= 1, "line sizes must be positive integers")
        # transversal: shared parameters put points on common lines of the other ruling
        ss = range(m) if arrangement == "transversal" else (a + 3 * t for t in range(m))
        pts.extend(embed_affine((a, s, a * s)) for s in ss)
    for A, B in combinations(lines, 2):
        if not meet(A, B).is_empty:  # pragma: no cover - fixed construction
            raise ConstructionError("generated lines are not skew")
    return pts, lines


def generate_with_truth(spec: ConfigSpec) -> tuple[PointSet, FlatCollection | None]:
    """Build the configuration and, when planted, its ground-truth flats."""
    p, rng = spec.params, _rng(spec.seed)
    label = f"{spec.kind}(seed={spec.seed})"
    if spec.kind == "general_position":
        n = _int_param(p, "n", minimum=1)
        d = _int_param(p, "d", minimum=2)
        bound = _int_param(p, "coord_range", max(8, 3 * n), minimum=1)
        pts = _lattice_general_position(n, d, rng, bound)
        return PointSet(tuple(embed_affine(q) for q in pts), d, label), None
    if spec.kind == "two_skew_lines":
        n = _int_param(p, "n", minimum=2)
        a, b = (n + 1) // 2, n // 2
        l1 = canonical_flat([(1, 0, 0, 0), (0, 1, 0, 0)], 3)   # x-axis
        l2 = canonical_flat([(1, 0, 1, 0), (0, 0, 0, 1)], 3)   # {(0, 1, t)}
        if not meet(l1, l2).is_empty:  # pragma: no cover - fixed construction
            raise ConstructionError("generated lines are not skew")
        pts = [embed_affine((t, 0, 0)) for t in range(a)] + [embed_affine((0, 1, t)) for t in range(b)]
        return PointSet(tuple(pts), 3, label), FlatCollection((l1, l2), 3)
    if spec.kind == "skew_line_family":
        pts, lines = _skew_lines_3(p)
        return PointSet(tuple(pts), 3, label), FlatCollection(tuple(lines), 3)
    if spec.kind in ("flat_cluster", "flat_union"):
        pts, flats, d = _planted(p, rng, require_small=spec.kind == "flat_cluster")
        return PointSet(tuple(pts), d, label), FlatCollection(tuple(flats), d)
    if spec.kind == "grid":
        m = _int_param(p, "m", minimum=1)
        d = _int_param(p, "d", minimum=2)
        pts = [embed_affine(c) for c in _grid(m, d)]
        return PointSet(tuple(pts), d, label), None
    raise ConstructionError(f"unknown kind {spec.kind!r}")  # pragma: no cover


def _grid(m: int, d: int):
    if d == 0:
        yield ()
        return
    for head in range(m):
        for rest in _grid(m, d - 1):
            yield (head,) + rest


def generate(spec: ConfigSpec) -> PointSet:
    return generate_with_truth(spec)[0]


# ----------------------------------------------------------------- nice sequences


@dataclass(frozen=True)
class NiceSequence:
    """Hyperplanes P_i of F_i whose join H meets each F_i exactly in P_i."""

    parts: tuple[Flat, ...]
    H: Flat
    excess: dict | None = None  # Case 2: projection center, Q_i and target

    def to_json(self) -> dict:
        out = {"H": self.H.to_json(), "parts": [P.to_json() for P in self.parts]}
        if self.excess is not None:
            out["excess"] = {
                "Q": self.excess["Q"].to_json(),
                "Q_i": [q.to_json() for q in self.excess["Q_i"]],
                "target": self.excess["target"].to_json(),
                "distinct_images": self.excess["distinct_images"],
                "points_off_center": self.excess["points_off_center"],
            }
        return out


def _subsets(items):
    items = list(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def _join_all(flats, d: int) -> Flat:
    flats = [f for f in flats if not f.is_empty]
    return join(*flats) if flats else Flat((), d)


def _check_prefix(parts, C: FlatCollection) -> None:
    """Dimension conditions on every (P_I, F_J) with I inside the chosen prefix."""
    d, a, k = C.ambient_dim, C.dims, len(C)
    for I in _subsets(range(len(parts))):
        if not I:
            continue
        P_I = _join_all([parts[i] for i in I], d)
        if P_I.proj_dim != sum(a[i] for i in I) - 1:
            raise AssertionError(f"dim P_I wrong for I={I}")
        for J in _subsets(i for i in range(k) if i not in I):
            if not J:
                continue
            dim = _join_all([P_I] + [C.flats[j] for j in J], d).proj_dim
            full = len(I) + len(J) == k
            need = d if full else sum(a[i] for i in I + J)
            if dim < need:
                raise AssertionError(f"dimension condition fails for I={I}, J={J}")


def _check_nice(S: PointSet, C: FlatCollection, parts, H: Flat) -> None:
    d = C.ambient_dim
    if H.proj_dim != d - 1:
        raise AssertionError(f"H has dimension {H.proj_dim}, expected {d - 1}")
    if S.restrict(H).span != H:
        raise AssertionError("H is not spanned by S")
    for F, P in zip(C.flats, parts):
        if meet(H, F) != P:
            raise AssertionError("H meets some F_i outside its chosen hyperplane")


def iter_nice_sequences(S: PointSet, C: FlatCollection, seed: int = 0,
                        stats: dict | None = None) -> Iterator[NiceSequence]:
    """All nice sequences reachable by scanning censuses in canonical order.

    Depth-first: step s keeps the spanned hyperplanes P of F_s with
    ``join(P, P_I, F_J) == join(F_s, P_I, F_J)`` whenever ``join(P_I, F_J)``
    meets F_s. With dim_sum = d + x > d the last hyperplane is built as
    ``join(Q, L)`` from a projection of F_k's points away from
    ``Q = join(P_1..P_{k-1}) & F_k``.
    """
    verdict = check_good_collection(C)
    if not verdict.good:
        raise ConstructionError(f"collection is not good (bad subset {verdict.bad_subset}, "
                                f"span dim {verdict.span_dim}, dim sum {verdict.dim_sum})")
    d, a, k = C.ambient_dim, C.dims, len(C)
    if min(a) < 1:
        raise ConstructionError("every flat of the collection needs dimension >= 1")
    x = sum(a) - d
    if x > 0 and sum(a[:-1]) > d - 1:
        raise ConstructionError("dim_sum > d needs the first k-1 flats to sum to at most d-1")
    subs = [S.restrict(F) for F in C.flats]
    for F, sub in zip(C.flats, subs):
        if sub.span != F:
            raise ConstructionError(f"{F!r} is not spanned by the points of S on it")
    censuses = [spanned_flats(sub, ai - 1).flats for sub, ai in zip(subs, a)]
    last = k if x == 0 else k - 1
    stats = stats if stats is not None else {}

    def admissible(s: int, chosen: list[Flat]):
        Fs = C.flats[s]
        tests = []
        for I in _subsets(range(s)):
            P_I = [chosen[i] for i in I]
            for J in _subsets(j for j in range(k) if j not in I and j != s):
                base = _join_all(P_I + [C.flats[j] for j in J], d)
                if base.is_empty or meet(base, Fs).is_empty:
                    continue
                tests.append((base, join(Fs, base)))
        good = [P for P in censuses[s] if all(join(P, b) == t for b, t in tests)]
        rec = stats.setdefault(s, {"admissible": 0, "census": 0, "visits": 0})
        rec["admissible"] += len(good)
        rec["census"] += len(censuses[s])
        rec["visits"] += 1
        return good

    def rec(s: int, chosen: list[Flat]):
        if s == last:
            if x == 0:
                H = join(*chosen)
                _check_nice(S, C, chosen, H)
                yield NiceSequence(tuple(chosen), H)
            else:
                yield from _case_two(S, C, chosen, subs[-1], x, seed)
            return
        for P in admissible(s, chosen):
            nxt = chosen + [P]
            _check_prefix(nxt, C)
            yield from rec(s + 1, nxt)

    yield from rec(0, [])


def _case_two(S, C, chosen, sub_k: PointSet, x: int, seed: int):
    d = C.ambient_dim
    Fk, ak = C.flats[-1], C.dims[-1]
    P_rest = join(*chosen)
    Q = meet(P_rest, Fk)
    if Q.proj_dim != x - 1:
        raise AssertionError(f"center has dimension {Q.proj_dim}, expected {x - 1}")
    Qs = []
    for i in range(len(chosen)):
        others = [chosen[j] for j in range(len(chosen)) if j != i]
        Qi = meet(_join_all([C.flats[i]] + others, d), Fk)
        if Qi.proj_dim != x or not Qi.contains(Q):
            raise AssertionError(f"Q_{i} has dimension {Qi.proj_dim}, expected {x}")
        Qs.append(Qi)
    rng = random.Random(seed)
    target = None
    images = None
    for _ in range(PROJECTION_TRIALS):
        gens = []
        for _ in range(ak - x + 1):
            c = [rng.randint(-5, 5) for _ in Fk.basis]
            gens.append([sum(ci * row[j] for ci, row in zip(c, Fk.basis)) for j in range(d + 1)])
        F = canonical_flat(gens, d)
        if F.proj_dim != ak - x or not meet(F, Q).is_empty:
            continue
        imgs = [meet(Qi, F) for Qi in Qs]
        if all(q.proj_dim == 0 for q in imgs):
            target, images = F, imgs
            break
    if target is None:
        raise ConstructionError("no generic projection target found within the trial budget")
    off = [p for p in sub_k if not Q.contains_vector(p.coords)]
    proj = [project_through(Q, target, p) for p in off]
    img_set, _ = PointSet.dedup(proj, d)
    excess = {"Q": Q, "Q_i": tuple(Qs), "target": target,
              "distinct_images": len(img_set), "points_off_center": len(off)}
    for L in spanned_flats(img_set, ak - x - 1).flats:
        if any(L.contains(q) for q in images):
            continue
        Pk = join(Q, L)
        parts = tuple(chosen) + (Pk,)
        H = join(P_rest, Pk)
        _check_nice(S, C, parts, H)
        yield NiceSequence(parts, H, excess)


def build_nice_sequence(S: PointSet, C: FlatCollection, avoid=(), seed: int = 0) -> NiceSequence:
    """First nice sequence (canonical scan order) whose hyperplane tuple is not in ``avoid``."""
    skip = {s.parts if isinstance(s, NiceSequence) else tuple(s) for s in avoid}
    for seq in iter_nice_sequences(S, C, seed):
        if seq.parts not in skip:
            return seq
    raise ConstructionError("no admissible nice sequence: census exhausted")


def enumerate_nice_hyperplanes(S: PointSet, C: FlatCollection, budget: int | None = None,
                               seed: int = 0, stats: dict | None = None) -> tuple[Flat, ...]:
    """Hyperplanes of up to ``budget`` distinct nice sequences, in scan order."""
    if budget is not None and budget < 1:
        raise ConstructionError("budget must be positive")
    out: dict[Flat, None] = {}
    for seq in iter_nice_sequences(S, C, seed, stats):
        if seq.H in out:
            raise AssertionError("two nice sequences produced the same hyperplane")
        out[seq.H] = None
        if budget is not None and len(out) >= budget:
            break
    if not out:
        raise ConstructionError("no admissible nice sequence: census exhausted")
    return tuple(out)
