"""Exact checks of the counting bounds on a concrete point set.

Each check yields a :class:`BoundEntry`. Entries whose constant is only known
to exist are report-only (``holds is None``); the others compare exact
integers or rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .enumeration import (fraction_ratio, hyperplane_count, pair_plane_census, pencil_counts,
                          spanned_flats)
from .geometry import GeometryError, PointSet, meet
from .structure import (DichotomyResult, FlatCollection, ThresholdConfig, decompose,
                        degenerate_hyperplane_census)

BOUND_IDS = (
    "cluster_upper",
    "pencil",
    "pair_double_count",
    "saturated_hyperplane_ratio",
    "max_hyperplane_coverage",
    "degenerate_census_ratio",
    "three_skew_lines",
    "dichotomy",
)
ASSERTABLE = frozenset({"cluster_upper", "pencil", "pair_double_count", "three_skew_lines",
                        "dichotomy"})
NEEDS_COLLECTION = frozenset({"cluster_upper", "three_skew_lines"})
VARIANTS = ("classic", "flat-collection")


class VerifyError(ValueError):
    """A bound was requested without the structural input it needs."""


def _num(v):
    if v is None or isinstance(v, (bool, int)):
        return v
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


@dataclass(frozen=True)
class BoundEntry:
    bound_id: str
    lhs: int | Fraction | None
    rhs: int | Fraction | None
    holds: bool | None
    inputs: dict = field(default_factory=dict)

    @property
    def ratio(self) -> Fraction | None:
        if self.lhs is None or self.rhs is None:
            return None
        return fraction_ratio(self.lhs, self.rhs)

    def to_json(self) -> dict:
        r = self.ratio
        return {"bound_id": self.bound_id, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
                "holds": self.holds, "ratio": None if r is None else str(r),
                "inputs": self.inputs}


@dataclass(frozen=True)
class BoundReport:
    entries: tuple[BoundEntry, ...]
    label: str
    n: int
    d: int
    config: ThresholdConfig

    @property
    def all_hold(self) -> bool:
        return all(e.holds is not False for e in self.entries)

    def get(self, bound_id: str) -> list[BoundEntry]:
        return [e for e in self.entries if e.bound_id == bound_id]

    def to_json(self) -> dict:
        return {
            "tool": "spanflats",
            "version": __version__,
            "points": {"label": self.label, "n": self.n, "d": self.d},
            "config": self.config.to_json(self.d),
            "bounds": [e.to_json() for e in self.entries],
            "all_hold": self.all_hold,
        }


def select_bounds(spec: str | Iterable[str], have_collection: bool) -> tuple[str, ...]:
    """Parse a selection such as ``"pencil,dichotomy"`` or ``"all"``.

    ``all`` leaves out the collection-dependent checks when no collection is
    given, and :func:`run_verify` further drops those the collection does not fit.
    """
    names = [s.strip() for s in (spec.split(",") if isinstance(spec, str) else spec) if s.strip()]
    if not names:
        raise VerifyError("no bounds selected")
    if names == ["all"]:
        return tuple(b for b in BOUND_IDS if have_collection or b not in NEEDS_COLLECTION)
    unknown = [b for b in names if b not in BOUND_IDS]
    if unknown:
        raise VerifyError(f"unknown bound(s) {unknown}; choose from {list(BOUND_IDS)} or 'all'")
    return tuple(dict.fromkeys(names))


def run_verify(S: PointSet, cfg: ThresholdConfig, bounds: Sequence[str],
               collection: FlatCollection | None = None, ks: Sequence[int] | None = None,
               alpha=None, variants: Sequence[str] = VARIANTS, workers: int = 1) -> BoundReport:
    cfg.validate()
    d, n = S.ambient_dim, len(S)
    if n < d + 1:
        raise VerifyError(f"need at least d+1 = {d + 1} points, got {n}")
    auto = (bounds.strip() == "all") if isinstance(bounds, str) else list(bounds) == ["all"]
    bounds = select_bounds(bounds, collection is not None)
    if auto and collection is not None:
        bounds = tuple(b for b in bounds if _applicable(b, collection))
    missing = [b for b in bounds if b in NEEDS_COLLECTION and collection is None]
    if missing:
        raise VerifyError(f"{missing} need a flat collection")
    if collection is not None and collection.ambient_dim != d:
        raise VerifyError("collection and point set live in different dimensions")
    hyp = spanned_flats(S, d - 1, workers)
    h_s = len(hyp)
    ctx = _Context(S, cfg, hyp, workers)
    out: list[BoundEntry] = []
    for b in bounds:
        if b == "cluster_upper":
            out.append(_cluster_upper(S, collection, h_s))
        elif b == "pencil":
            out.append(_pencil(S, workers))
        elif b == "pair_double_count":
            out.append(_pair_double_count(ctx))
        elif b == "saturated_hyperplane_ratio":
            out.append(_saturated_ratio(ctx))
        elif b == "max_hyperplane_coverage":
            out.append(_max_coverage(S, hyp))
        elif b == "degenerate_census_ratio":
            a = cfg.beta if alpha is None else alpha
            for k in (ks or (d,)):
                for v in variants:
                    out.append(_degenerate(S, k, a, v))
        elif b == "three_skew_lines":
            out.append(_three_skew(S, collection, h_s))
        elif b == "dichotomy":
            out.append(_dichotomy(S, cfg))
    return BoundReport(tuple(out), S.label, n, d, cfg)


def _applicable(bound_id: str, C: FlatCollection) -> bool:
    if bound_id == "cluster_upper":
        return C.dim_sum < C.ambient_dim
    if bound_id == "three_skew_lines":
        return _skew_triple_problem(C) is None
    return True


def _skew_triple_problem(C: FlatCollection) -> str | None:
    if C.ambient_dim != 3 or len(C) != 3 or any(f.proj_dim != 1 for f in C):
        return "three-skew-lines bound needs a collection of exactly 3 lines in RP^3"
    for a in range(3):
        for b in range(a + 1, 3):
            if not meet(C.flats[a], C.flats[b]).is_empty:
                return f"lines {a} and {b} are not skew"
    return None


@dataclass
class _Context:
    S: PointSet
    cfg: ThresholdConfig
    hyp: object
    workers: int
    _sat: object = None
    _sat_done: bool = False

    def saturated_rich_hyperplane(self):
        """Richest spanned hyperplane that is rich and saturated (canonical tie-break)."""
        if not self._sat_done:
            self._sat_done = True
            S, d, n = self.S, self.S.ambient_dim, len(self.S)
            mult = self.hyp.multiplicity
            order = sorted(range(len(mult)), key=lambda i: (-mult[i], i))
            gamma = self.cfg.sat_gamma_for(d - 1)
            for i in order:
                m = mult[i]
                if m < self.cfg.rich_c * n:
                    break
                P = self.hyp.flats[i]
                h = len(S.restrict(P)) if d == 2 else hyperplane_count(S, P)
                if h >= gamma * m ** (d - 1):
                    self._sat = (P, m, h)
                    break
        return self._sat


def _cluster_upper(S, C, h_s) -> BoundEntry:
    d, n = S.ambient_dim, len(S)
    if C.dim_sum >= d:
        raise VerifyError(f"cluster bound needs dimension sum < {d}, collection has {C.dim_sum}")
    covered = len(C.covered(S))
    x = n - covered
    rhs = (x + d) * n ** (d - 1)
    return BoundEntry("cluster_upper", h_s, rhs, h_s <= rhs,
                      {"x": x, "n": n, "d": d, "dims": list(C.dims), "covered": covered})


def _pencil(S, workers) -> BoundEntry:
    d, n = S.ambient_dim, len(S)
    hyp, counts = pencil_counts(S, workers)
    if len(hyp) == 0:
        return BoundEntry("pencil", 0, 0, True, {"hyperplanes": 0, "pairs": 0})
    mult = np.array(hyp.multiplicity, dtype=object)
    bound = mult ** (d - 2)
    on = hyp.incidence_matrix(n)
    worst, worst_at, pairs, violations = None, None, 0, 0
    max_count = 0
    for i, j in zip(*np.nonzero(on)):
        c, b = int(counts[i, j]), int(bound[i])
        pairs += 1
        max_count = max(max_count, c)
        if c > b:
            violations += 1
        r = Fraction(c, b)
        if worst is None or r > worst:
            worst, worst_at = r, (int(i), int(j), c, b)
    _, q, c, b = worst_at
    return BoundEntry("pencil", c, b, violations == 0,
                      {"hyperplanes": len(hyp), "pairs": pairs, "violations": violations,
                       "tightest_point": q, "tightest_points_on_hyperplane": int(mult[worst_at[0]]),
                       "max_count": max_count, "global_bound": n ** (d - 2),
                       "global_holds": max_count <= n ** (d - 2)})


def _anchor_hyperplane(ctx: _Context):
    sat = ctx.saturated_rich_hyperplane()
    if sat is not None:
        return sat[0], "saturated-rich"
    mult = ctx.hyp.multiplicity
    if not mult:
        return None, None
    best = max(range(len(mult)), key=lambda i: (mult[i], -i))
    return ctx.hyp.flats[best], "max-coverage"


def _pair_double_count(ctx: _Context) -> BoundEntry:
    P, how = _anchor_hyperplane(ctx)
    if P is None or ctx.S.count_in(P) == len(ctx.S):
        return BoundEntry("pair_double_count", None, None, None, {"applicable": False})
    census = pair_plane_census(ctx.S, P)
    return BoundEntry("pair_double_count", census.J, census.j_bound,
                      census.j_bound_holds and census.pairs_hold,
                      {"anchor": how, "applicable": True, **census.to_json()})


def _saturated_ratio(ctx: _Context) -> BoundEntry:
    S, d, n = ctx.S, ctx.S.ambient_dim, len(ctx.S)
    h_s = len(ctx.hyp)
    sat = ctx.saturated_rich_hyperplane()
    if sat is None:
        return BoundEntry("saturated_hyperplane_ratio", h_s, None, None,
                          {"applicable": False, "reason": "no rich saturated hyperplane"})
    P, m, h = sat
    x = n - m
    rhs = x * n ** (d - 1) if x else None
    return BoundEntry("saturated_hyperplane_ratio", h_s, rhs, None,
                      {"applicable": x > 0, "x": x, "points_on_hyperplane": m, "H_S_P": h,
                       "hyperplane": P.to_json()})


def _max_coverage(S, hyp) -> BoundEntry:
    d, n = S.ambient_dim, len(S)
    cover = max(hyp.multiplicity, default=0)
    rhs = Fraction(n, d - 1)
    return BoundEntry("max_hyperplane_coverage", cover, rhs, None,
                      {"n": n, "d": d, "exceeds": cover > rhs})


def _degenerate(S, k, alpha, variant) -> BoundEntry:
    try:
        census = degenerate_hyperplane_census(S, k, alpha, variant)
    except GeometryError as exc:
        return BoundEntry("degenerate_census_ratio", None, None, None,
                          {"k": k, "variant": variant, "error": str(exc)})
    js = census.to_json()
    js.pop("entries")
    return BoundEntry("degenerate_census_ratio", census.degenerate_count, census.scale, None, js)


def _three_skew(S, C, h_s) -> BoundEntry:
    problem = _skew_triple_problem(C)
    if problem:
        raise VerifyError(problem)
    m = [S.count_in(f) for f in C]
    rhs = max(0, m[0] * (m[1] - 1) * (m[2] - 2))
    return BoundEntry("three_skew_lines", h_s, rhs, h_s >= rhs, {"m": m})


def _dichotomy(S, cfg) -> BoundEntry:
    res: DichotomyResult = decompose(S, cfg)
    merges_ok = all(t["dim_sum_after"] < t["dim_sum_before"]
                    for t in res.trace if t["step"] == "merge")
    ok = res.verify(S) and merges_ok
    js = res.to_json()
    js.pop("config")
    if res.outcome == "cluster":
        return BoundEntry("dichotomy", res.covered, cfg.beta * len(S), ok, js)
    return BoundEntry("dichotomy", res.h_s, None, ok, js)
