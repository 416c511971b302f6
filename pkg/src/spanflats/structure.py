"""Rich/saturated flats, Beck descent, good collections and the dichotomy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .enumeration import contained_matrix, hyperplane_count, spanned_flats, total_hyperplanes
from .geometry import (Flat, GeometryError, PointSet, _check_same, ambient_flat,
                       join, to_scalar)


class ConfigError(ValueError):
    """Inconsistent threshold configuration."""


def _fraction_map(m: Mapping | None) -> dict[int, Fraction]:
    return {int(k): to_scalar(v) if not isinstance(v, float) else Fraction(v).limit_denominator()
            for k, v in (m or {}).items()}


@dataclass(frozen=True)
class ThresholdConfig:
    """Thresholds for the dichotomy. Per-dimension maps hold overrides only.

    Defaults: ``beck_beta(m) = 1/(2(m-1))`` and ``sat_gamma(m) = 1/(2 m!)``
    (half the n^m/m! spanned-hyperplane density of a generic m-flat);
    ``beck_gamma`` defaults to ``sat_gamma``.
    """

    beta: Fraction = Fraction(1, 2)
    rich_c: Fraction = Fraction(1, 2)
    beck_beta: Mapping[int, Fraction] = field(default_factory=dict)
    beck_gamma: Mapping[int, Fraction] = field(default_factory=dict)
    sat_gamma: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "beta", to_scalar(self.beta) if not isinstance(self.beta, float)
                           else Fraction(self.beta).limit_denominator())
        object.__setattr__(self, "rich_c", to_scalar(self.rich_c) if not isinstance(self.rich_c, float)
                           else Fraction(self.rich_c).limit_denominator())
        for name in ("beck_beta", "beck_gamma", "sat_gamma"):
            object.__setattr__(self, name, _fraction_map(getattr(self, name)))

    def validate(self) -> "ThresholdConfig":
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must lie in (0,1), got {self.beta}")
        if not 0 < self.rich_c <= 1:
            raise ConfigError(f"rich_c must lie in (0,1], got {self.rich_c}")
        for m, b in self.beck_beta.items():
            if not 0 < b < 1:
                raise ConfigError(f"beck_beta[{m}] must lie in (0,1), got {b}")
        for name in ("beck_gamma", "sat_gamma"):
            for m, g in getattr(self, name).items():
                if g <= 0:
                    raise ConfigError(f"{name}[{m}] must be positive, got {g}")
        return self

    def beck_beta_for(self, m: int) -> Fraction:
        if m in self.beck_beta:
            return self.beck_beta[m]
        return Fraction(1, 2 * (m - 1)) if m >= 2 else Fraction(1, 2)

    def sat_gamma_for(self, m: int) -> Fraction:
        if m in self.sat_gamma:
            return self.sat_gamma[m]
        return Fraction(1, 2 * math.factorial(max(m, 1)))

    def beck_gamma_for(self, m: int) -> Fraction:
        return self.beck_gamma.get(m, self.sat_gamma_for(m))

    def to_json(self, d: int) -> dict:
        dims = range(1, d + 1)
        return {
            "beta": str(self.beta),
            "rich_c": str(self.rich_c),
            "beck_beta": {str(m): str(self.beck_beta_for(m)) for m in dims if m >= 2},
            "beck_gamma": {str(m): str(self.beck_gamma_for(m)) for m in dims},
            "sat_gamma": {str(m): str(self.sat_gamma_for(m)) for m in dims},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ThresholdConfig":
        known = {"beta", "rich_c", "beck_beta", "beck_gamma", "sat_gamma"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data).validate()


# ----------------------------------------------------------------- predicates


def is_rich(S: PointSet, F: Flat, c) -> bool:
    """|F ∩ S| >= c |S|, compared exactly."""
    if F.is_empty:
        raise GeometryError("richness of the empty flat is undefined")
    return S.count_in(F) >= to_scalar(c) * len(S)


@dataclass(frozen=True)
class SaturationVerdict:
    saturated: bool
    h: int
    threshold: Fraction


def _require_spanned(sub: PointSet, F: Flat) -> None:
    if sub.span != F:
        raise GeometryError(f"{F!r} is not spanned by the points of S on it")


def is_saturated(S: PointSet, F: Flat, gamma) -> SaturationVerdict:
    """H_S(F) >= gamma |F ∩ S|^(dim F)."""
    if F.proj_dim < 1:
        raise GeometryError("saturation needs a flat of dimension >= 1")
    sub = S.restrict(F)
    _require_spanned(sub, F)
    h = hyperplane_count(sub, F)
    thr = to_scalar(gamma) * len(sub) ** F.proj_dim
    return SaturationVerdict(h >= thr, h, thr)


def max_coverage_hyperplane(S: PointSet, F: Flat) -> tuple[Flat, int]:
    """Spanned hyperplane of F holding the most points (ties: canonical order)."""
    if F.proj_dim < 2:
        raise GeometryError("max_coverage_hyperplane needs dim F >= 2")
    sub = S.restrict(F)
    _require_spanned(sub, F)
    census = spanned_flats(sub, F.proj_dim - 1)
    mult = census.multiplicity
    best = max(range(len(mult)), key=lambda i: (mult[i], -i))
    return census.flats[best], mult[best]


def beck_descent(S: PointSet, start: Flat, cfg: ThresholdConfig,
                 trace: list | None = None) -> Flat:
    """Walk down from ``start`` through max-coverage hyperplanes until saturated.

    At each flat of dimension m >= 2 that is not ``sat_gamma(m)``-saturated the
    walk moves to the max-coverage spanned hyperplane provided it holds at least
    ``beck_beta(m)`` of the current points; otherwise it stops there. Lines and
    points always stop. If the points on ``start`` span only a smaller flat,
    the walk begins at that span.
    """
    cfg.validate()
    cur = start
    sub = S.restrict(cur)
    if len(sub) == 0:
        raise GeometryError("start flat holds no points of S")
    log = trace if trace is not None else []
    if sub.span != cur:
        # points on a proper sub-flat: every spanned hyperplane contains it
        cur = sub.span
        log.append({"step": "restrict", "from_dim": start.proj_dim, "dim": cur.proj_dim,
                    "points": len(sub)})
    while True:
        m, cnt = cur.proj_dim, len(sub)
        if m <= 1:
            log.append({"step": "stop", "reason": "line" if m == 1 else "point",
                        "dim": m, "points": cnt})
            return cur
        h = len(spanned_flats(sub, m - 1))
        gamma = cfg.sat_gamma_for(m)
        if h >= gamma * cnt ** m:
            log.append({"step": "stop", "reason": "saturated", "dim": m, "points": cnt,
                        "h": h, "threshold": str(gamma * cnt ** m)})
            return cur
        G, cov = max_coverage_hyperplane(sub, cur)
        beta_m = cfg.beck_beta_for(m)
        if cov >= beta_m * cnt:
            log.append({"step": "descend", "from_dim": m, "points": cnt, "h": h,
                        "coverage": cov, "threshold": str(beta_m * cnt)})
            cur, sub = G, sub.restrict(G)
            continue
        log.append({"step": "stop", "reason": "saturated-by-beck", "dim": m, "points": cnt,
                    "h": h, "coverage": cov,
                    "beck_gamma_holds": h >= cfg.beck_gamma_for(m) * cnt ** m})
        return cur


# ----------------------------------------------------------------- collections


@dataclass(frozen=True)
class FlatCollection:
    """Ordered flats F_1..F_k, none empty and none the whole space."""

    flats: tuple[Flat, ...]
    ambient_dim: int

    def __post_init__(self):
        fl = tuple(self.flats)
        object.__setattr__(self, "flats", fl)
        if fl:
            if _check_same(*fl) != self.ambient_dim:
                raise GeometryError("collection flats live in a different ambient space")
        for f in fl:
            if f.is_empty:
                raise GeometryError("collection contains the empty flat")
            if f.is_ambient:
                raise GeometryError("collection contains the whole space")

    @classmethod
    def of(cls, flats: Sequence[Flat]) -> "FlatCollection":
        if not flats:
            raise GeometryError("use FlatCollection((), d) for an empty collection")
        return cls(tuple(flats), flats[0].ambient_dim)

    def __len__(self) -> int:
        return len(self.flats)

    def __iter__(self):
        return iter(self.flats)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.proj_dim for f in self.flats)

    @property
    def dim_sum(self) -> int:
        return sum(self.dims)

    def span(self, idx: Iterable[int] | None = None) -> Flat:
        idx = range(len(self.flats)) if idx is None else list(idx)
        chosen = [self.flats[i] for i in idx]
        return join(*chosen) if chosen else Flat((), self.ambient_dim)

    def covered(self, S: PointSet) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(S)
                     if any(f.contains_vector(p.coords) for f in self.flats))

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim, "flats": [f.to_json() for f in self.flats]}


def _violating(C: FlatCollection, include_full: bool):
    k = len(C)
    top = k if include_full else k - 1
    dims = C.dims
    for size in range(2, top + 1):
        for I in combinations(range(k), size):
            if C.span(I).proj_dim < sum(dims[i] for i in I):
                return I
    return None


@dataclass(frozen=True)
class GoodVerdict:
    good: bool
    bad_subset: tuple[int, ...] | None
    span_dim: int
    dim_sum: int


def check_good_collection(C: FlatCollection) -> GoodVerdict:
    """Good: the flats span the space, dim_sum >= d, and every proper
    subfamily I has dim span(I) >= sum of its dimensions.

    ``bad_subset`` is the smallest (then lexicographically first) proper
    subfamily violating that, as 0-based indices.
    """
    if len(C) < 1:
        raise GeometryError("empty collection")
    bad = _violating(C, include_full=False)
    span_dim = C.span().proj_dim
    good = bad is None and span_dim == C.ambient_dim <= C.dim_sum
    return GoodVerdict(good, bad, span_dim, C.dim_sum)


def merge_bad_subset(C: FlatCollection, I: Iterable[int]) -> FlatCollection:
    """Replace the flats indexed by ``I`` by their join; dim_sum must drop."""
    I = sorted(set(I))
    if not I or I[0] < 0 or I[-1] >= len(C):
        raise GeometryError(f"bad index set {I}")
    merged = C.span(I)
    if merged.proj_dim >= sum(C.dims[i] for i in I):
        raise GeometryError(
            f"subset {I} does not violate the dimension condition; merge would not decrease dim_sum")
    rest = [f for i, f in enumerate(C.flats) if i not in I]
    out = FlatCollection(tuple(rest) + (merged,), C.ambient_dim)
    if out.dim_sum >= C.dim_sum:  # pragma: no cover - guaranteed by the guard above
        raise AssertionError("merge did not decrease dim_sum")
    return out


# ----------------------------------------------------------------- dichotomy


@dataclass(frozen=True)
class DichotomyResult:
    outcome: str  # "cluster" or "saturated"
    collection: FlatCollection
    covered: int
    n: int
    d: int
    h_s: int
    trace: tuple[dict, ...]
    config: ThresholdConfig
    witness: dict | None = None

    @property
    def empirical_gamma(self) -> Fraction:
        return Fraction(self.h_s, self.n ** self.d)

    def verify(self, S: PointSet) -> bool:
        """Re-check the outcome's postconditions from scratch."""
        if self.outcome == "cluster":
            cov = len(self.collection.covered(S))
            return cov == self.covered and cov >= self.config.beta * len(S) \
                and self.collection.dim_sum < self.d
        ok = self.h_s == total_hyperplanes(S) and self.h_s > 0
        if len(self.collection):
            ok = ok and check_good_collection(self.collection).good
        return ok

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "flats": [f.to_json() for f in self.collection.flats],
            "dims": list(self.collection.dims),
            "dim_sum": self.collection.dim_sum,
            "covered": self.covered,
            "n": self.n,
            "d": self.d,
            "H_S": self.h_s,
            "empirical_gamma": str(self.empirical_gamma),
            "trace": list(self.trace),
            "config": self.config.to_json(self.d),
            "witness": self.witness,
        }


def decompose(S: PointSet, cfg: ThresholdConfig, witness: bool = False) -> DichotomyResult:
    """Either a cluster of flats with dim_sum < d covering beta*n points, or a
    saturated space (optionally with a good collection witnessing it).

    Repeatedly runs :func:`beck_descent` on the points not yet covered, adds
    the flat found, and merges violating subfamilies until none remain.
    """
    cfg.validate()
    d, n = S.ambient_dim, len(S)
    if n < d + 1:
        raise GeometryError(f"need at least d+1={d + 1} points, got {n}")
    trace: list[dict] = []
    flats: list[Flat] = []

    def finish(outcome: str, coll: FlatCollection) -> DichotomyResult:
        wit = None
        if outcome == "saturated" and witness and len(coll):
            wit = _nice_witness(S, coll)
        return DichotomyResult(outcome, coll, len(coll.covered(S)), n, d,
                               total_hyperplanes(S), tuple(trace), cfg, wit)

    for _ in range(n + 1):
        coll = FlatCollection(tuple(flats), d)
        covered = set(coll.covered(S))
        remaining = S.subset([i for i in range(n) if i not in covered])
        if len(remaining) == 0:
            break
        start = remaining.span
        G = beck_descent(remaining, start, cfg, trace)
        if G.is_ambient:
            trace.append({"step": "space-saturated", "points": len(remaining)})
            return finish("saturated", FlatCollection((), d))
        flats.append(G)
        trace.append({"step": "add", "dim": G.proj_dim, "points": len(remaining.restrict(G)),
                      "dim_sum": sum(f.proj_dim for f in flats)})
        while True:
            coll = FlatCollection(tuple(flats), d)
            I = _violating(coll, include_full=True)
            if I is None:
                break
            F_I = coll.span(I)
            if F_I.is_ambient:
                # minimal violating family spanning the space is itself good
                sub = FlatCollection(tuple(flats[i] for i in I), d)
                trace.append({"step": "good-subfamily", "subset": list(I)})
                return finish("saturated", sub)
            before = coll.dim_sum
            merged = merge_bad_subset(coll, I)
            if merged.dim_sum >= before:  # pragma: no cover
                raise AssertionError("merge did not decrease dim_sum")
            trace.append({"step": "merge", "subset": list(I), "dim_sum_before": before,
                          "dim_sum_after": merged.dim_sum})
            flats = list(merged.flats)
        coll = FlatCollection(tuple(flats), d)
        if coll.dim_sum >= d:
            return finish("saturated", coll)
        if len(coll.covered(S)) >= cfg.beta * n:
            return finish("cluster", coll)
    coll = FlatCollection(tuple(flats), d)
    return finish("cluster", coll)


def _nice_witness(S: PointSet, coll: FlatCollection) -> dict:
    from .constructions import ConstructionError, build_nice_sequence
    try:
        seq = build_nice_sequence(S, coll)
    except (ConstructionError, GeometryError) as exc:
        return {"ok": False, "reason": str(exc)}
    return {"ok": True, **seq.to_json()}


# ----------------------------------------------------------------- degeneracy

MAX_SUBFLATS = 2000


@dataclass(frozen=True)
class DegenerateEntry:
    flat: Flat
    count: int
    max_cover: int
    degenerate: bool


@dataclass(frozen=True)
class DegenerateCensus:
    entries: tuple[DegenerateEntry, ...]
    n: int
    d: int
    k: int
    alpha: Fraction
    variant: str

    @property
    def degenerate_count(self) -> int:
        return sum(e.degenerate for e in self.entries)

    @property
    def scale(self) -> Fraction:
        n, d, k = self.n, self.d, self.k
        return Fraction(n ** d, k ** (d + 1)) + Fraction(n ** (d - 1), k ** (d - 1))

    @property
    def ratio(self) -> Fraction:
        return self.degenerate_count / self.scale

    def to_json(self) -> dict:
        return {"k": self.k, "alpha": str(self.alpha), "variant": self.variant,
                "rich_hyperplanes": len(self.entries),
                "degenerate": self.degenerate_count,
                "ratio": str(self.ratio),
                "entries": [{"basis": e.flat.to_json(), "count": e.count,
                             "max_cover": e.max_cover, "degenerate": e.degenerate}
                            for e in self.entries]}


def _best_union(masks: list[int], dims: list[int], budget: int) -> int:
    """Largest |union| over families with sum of dims < budget (all dims >= 1)."""
    order = sorted(range(len(masks)), key=lambda i: -masks[i].bit_count())
    masks = [masks[i] for i in order]
    dims = [dims[i] for i in order]
    sizes = [m.bit_count() for m in masks]
    best = 0

    def dfs(start: int, union: int, used: int):
        nonlocal best
        have = union.bit_count()
        best = max(best, have)
        slots = budget - 1 - used  # every dim is >= 1
        for j in range(start, len(masks)):
            # sizes are sorted, so the next `slots` masks bound any extension from j on
            if have + sum(sizes[j:j + slots]) <= best:
                break
            if used + dims[j] >= budget:
                continue
            dfs(j + 1, union | masks[j], used + dims[j])

    dfs(0, 0, 0)
    return best


def degenerate_hyperplane_census(S: PointSet, k: int, alpha, variant: str = "classic") -> DegenerateCensus:
    """Spanned hyperplanes with >= k points, each tagged alpha-degenerate or not.

    classic: no spanned sub-hyperplane holds more than alpha of its points.
    flat-collection: no union of spanned sub-flats of positive dimension with
    dimension sum < dim F holds more than alpha of its points (a single point
    is the only family allowed when dim F = 1).
    """
    n, d = len(S), S.ambient_dim
    alpha = to_scalar(alpha) if not isinstance(alpha, float) else Fraction(alpha).limit_denominator()
    if not 2 <= k <= n:
        raise GeometryError(f"k={k} out of range 2..{n}")
    if not 0 < alpha <= 1:
        raise GeometryError(f"alpha must lie in (0,1], got {alpha}")
    if variant not in ("classic", "flat-collection"):
        raise GeometryError(f"unknown variant {variant!r}")
    hyp = spanned_flats(S, d - 1)
    rich = [i for i, m in enumerate(hyp.multiplicity) if m >= k]
    r = d - 1
    covers: dict[int, int] = {}
    if variant == "classic" or r == 1:
        sub = spanned_flats(S, d - 2)
        inside = contained_matrix(sub, hyp, n)
        mult = np.array(sub.multiplicity, dtype=np.int64)
        best = np.where(inside, mult[:, None], 0).max(axis=0) if len(sub) else np.zeros(len(hyp), int)
        covers = {i: int(best[i]) for i in rich}
    else:
        levels = [spanned_flats(S, j) for j in range(1, r)]
        inside = [contained_matrix(lv, hyp, n) for lv in levels]
        for i in rich:
            masks, dims = [], []
            for j, (lv, ins) in enumerate(zip(levels, inside), start=1):
                for t in np.flatnonzero(ins[:, i]):
                    masks.append(sum(1 << p for p in lv.members[t]))
                    dims.append(j)
            if len(masks) > MAX_SUBFLATS:
                raise GeometryError(
                    f"flat-collection search over {len(masks)} sub-flats exceeds {MAX_SUBFLATS}")
            covers[i] = max(_best_union(masks, dims, r), 1)
    entries = tuple(
        DegenerateEntry(hyp.flats[i], hyp.multiplicity[i], covers[i],
                        covers[i] <= alpha * hyp.multiplicity[i])
        for i in rich)
    return DegenerateCensus(entries, n, d, k, alpha, variant)

