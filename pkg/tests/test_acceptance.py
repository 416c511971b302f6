"""Acceptance criteria 1 to 10, one test each.

Every test records a single PASS/FAIL line; they are gathered in the
"acceptance criteria" section at the end of the pytest run (and printed
inline under ``-s``).
"""

import random
import time
from fractions import Fraction
from itertools import product
from math import comb, log

import numpy as np

from spanflats import enumeration as E
from spanflats.cli import main as cli_main
from spanflats.constructions import (ConfigSpec, generate, generate_with_truth,
                                     iter_nice_sequences)
from spanflats.geometry import PointSet, meet
from spanflats.pointfile import dumps, write_points
from spanflats.structure import ThresholdConfig, check_good_collection, decompose
from spanflats.verify import run_verify

import oracles

SKEW_NS = (6, 8, 10, 14, 20)


def gp_cases():
    for d in (2, 3, 4):
        for n in range(5, 13):
            if n > d and comb(n, d) <= 500:
                yield n, d


def cluster_specs(count=100):
    rng = random.Random(2024)
    out = []
    while len(out) < count:
        d = rng.choice((3, 4))
        dims = []
        while sum(dims) < d - 1 and (not dims or rng.random() < 0.5):
            dims.append(rng.randint(1, d - 1 - sum(dims)))
        x = rng.randint(0, 4)
        room = 16 - x
        counts = [a + 1 for a in dims]
        if sum(counts) > room:
            continue
        for i in range(len(counts)):
            counts[i] += rng.randint(0, (room - sum(counts)) // len(counts))
        if sum(counts) + x < d + 1:
            continue
        flats = [{"dim": a, "count": c} for a, c in zip(dims, counts)]
        out.append(ConfigSpec("flat_cluster", {"d": d, "flats": flats, "x": x}, seed=len(out)))
    return out


def coplanar_lines(seed):
    """Lines drawn in a common 2-plane plus a few outliers; the usual source of merges."""
    rng = random.Random(seed)
    d = rng.choice((3, 4))
    pts = set()
    for _ in range(rng.randint(2, 4)):
        base = [rng.randint(-3, 3) for _ in range(2)] + [0] * (d - 2)
        step = [rng.randint(-2, 2) for _ in range(2)] + [0] * (d - 2)
        if step[:2] == [0, 0]:
            continue
        for t in range(rng.randint(2, 9)):
            pts.add(tuple(b + t * v for b, v in zip(base, step)))
    for _ in range(rng.randint(0, 3)):
        pts.add(tuple(rng.randint(-9, 9) for _ in range(d)))
    S = PointSet.from_affine(sorted(pts))
    return S if d + 1 <= len(S) <= 22 else None


def grid(m, d):
    return PointSet.from_affine(list(product(range(m), repeat=d)))


def skew_family(m, **kw):
    return generate_with_truth(ConfigSpec("skew_line_family", {"m": m, **kw}))


def nice_ok(S, C, seq):
    return (seq.H.proj_dim == C.ambient_dim - 1 and S.restrict(seq.H).span == seq.H
            and all(meet(seq.H, F) == P for F, P in zip(C.flats, seq.parts)))


# ------------------------------------------------------------------ 1

def test_criterion_01_oracle_equivalence(criterion):
    rng = random.Random(1)
    t0 = time.perf_counter()
    bad, checked = [], 0
    for i in range(200):
        d = rng.choice((2, 3))
        n = rng.randint(d + 1, 10)
        span = rng.choice((2, 3, 4))
        pts = set()
        while len(pts) < n:
            pts.add(tuple(Fraction(rng.randint(-span, span), rng.choice((1, 1, 2))) for _ in range(d)))
        S = PointSet.from_affine(sorted(pts))
        lifts = [list(p.coords) for p in S]
        for k in range(d):
            got = E.spanned_flats(S, k)
            want = oracles.closure_flats(lifts, k)
            checked += 1
            if {m: f.basis for f, m in zip(got.flats, got.members)} != want:
                bad.append((i, k))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    criterion(1, ok, f"{checked} censuses vs closure oracle, mismatches={len(bad)}, {dt:.1f}s (< 60s)")
    assert ok, bad[:5]


# ------------------------------------------------------------------ 2

def test_criterion_02_skew_lines(criterion):
    rows = []
    for n in SKEW_NS:
        hyp = E.spanned_flats(generate(ConfigSpec("two_skew_lines", {"n": n})), 2)
        rows.append((n, len(hyp), max(hyp.multiplicity)))
    ok = all(h == n and c == n // 2 + 1 for n, h, c in rows)
    criterion(2, ok, "(n, H_S, max coverage) = " + ", ".join(map(str, rows)))
    assert ok


# ------------------------------------------------------------------ 3

def test_criterion_03_general_position(criterion):
    bad = []
    cases = list(gp_cases())
    for n, d in cases:
        S = generate(ConfigSpec("general_position", {"n": n, "d": d}, seed=n * 10 + d))
        if E.total_hyperplanes(S) != comb(n, d):
            bad.append((n, d))
    ok = not bad
    criterion(3, ok, f"{len(cases)} (n, d) cases with H_S = C(n, d); failures {bad}")
    assert ok


# ------------------------------------------------------------------ 4

def test_criterion_04_grids(criterion):
    lines = E.spanned_flats(grid(3, 2), 1)
    hist = {m: lines.multiplicity.count(m) for m in set(lines.multiplicity)}
    G = grid(3, 3)
    planes = E.spanned_flats(G, 2)
    want = oracles.closure_flats([list(p.coords) for p in G], 2)
    ok = (len(lines) == 20 and hist == {3: 8, 2: 12}
          and {m: f.basis for f, m in zip(planes.flats, planes.members)} == want)
    criterion(4, ok, f"3x3 lines={len(lines)} hist={hist}; 3x3x3 planes={len(planes)} "
                     f"oracle={len(want)}")
    assert ok


# ------------------------------------------------------------------ 5

def test_criterion_05_cluster_upper(criterion):
    cfg = ThresholdConfig()
    worst, fails = Fraction(0), []
    for spec in cluster_specs():
        S, C = generate_with_truth(spec)
        (e,) = run_verify(S, cfg, "cluster_upper", collection=C).entries
        worst = max(worst, e.ratio)
        if not e.holds:
            fails.append(spec.seed)
    ok = not fails
    criterion(5, ok, f"100 flat_cluster configs, violations={len(fails)}, "
                     f"max lhs/rhs = {worst} ~ {float(worst):.4f}")
    assert ok


# ------------------------------------------------------------------ 6

def pencil_violations(S):
    hyp, counts = E.pencil_counts(S)
    if len(hyp) == 0:
        return 0, 0
    d = S.ambient_dim
    bound = np.array([m ** (d - 2) for m in hyp.multiplicity], dtype=np.int64)[:, None]
    on = hyp.incidence_matrix(len(S))
    return int(np.count_nonzero(on & (counts > bound))), int(np.count_nonzero(on))


def test_criterion_06_pencil(criterion):
    sets = [generate(ConfigSpec("two_skew_lines", {"n": n})) for n in SKEW_NS]
    sets += [generate(ConfigSpec("general_position", {"n": n, "d": d}, seed=n * 10 + d))
             for n, d in gp_cases()]
    sets += [grid(3, 2), grid(3, 3)]
    sets += [generate(spec) for spec in cluster_specs()]
    viol = pairs = 0
    for S in sets:
        v, p = pencil_violations(S)
        viol, pairs = viol + v, pairs + p
    ok = viol == 0
    criterion(6, ok, f"{len(sets)} configs, {pairs} (hyperplane, point) pairs, violations={viol}")
    assert ok


# ------------------------------------------------------------------ 7

def test_criterion_07_three_skew_lines(criterion):
    counts, bad = {}, []
    for m in range(3, 9):
        S, C = skew_family(m)
        seqs = list(iter_nice_sequences(S, C))
        Hs = {s.H for s in seqs}
        if len(Hs) != len(seqs) or len(seqs) < m * (m - 1) * (m - 2) \
                or not all(nice_ok(S, C, s) for s in seqs):
            bad.append(m)
        counts[m] = E.total_hyperplanes(S)
    ms = range(4, 9)
    slope = np.polyfit([log(m) for m in ms], [log(counts[m]) for m in ms], 1)[0]
    ok = not bad and slope >= 2.7
    criterion(7, ok, f"nice counts >= m(m-1)(m-2) for m=3..8 (failures {bad}); "
                     f"H_S={counts}; log-log slope {slope:.3f} (>= 2.7)")
    assert ok


# ------------------------------------------------------------------ 8

def test_criterion_08_dichotomy(criterion):
    cfg = ThresholdConfig(beta=Fraction(4, 5))
    notes, ok, merges = [], True, 0
    planted = [
        ConfigSpec("flat_cluster", {"d": 3, "flats": [{"dim": 2, "count": 16}], "x": 4}, seed=1),
        ConfigSpec("flat_cluster", {"d": 3, "flats": [{"dim": 1, "count": 8}] * 2, "x": 4}, seed=2),
    ]
    traces = []
    for spec in planted:
        S = generate(spec)
        res = decompose(S, cfg)
        good = (res.outcome == "cluster" and res.covered >= cfg.beta * len(S)
                and res.collection.dim_sum < 3 and res.verify(S))
        ok &= good
        notes.append(f"planted dims={list(res.collection.dims)} covered={res.covered}/20")
        traces.append(res.trace)
    for n in range(6, 13):
        S = generate(ConfigSpec("general_position", {"n": n, "d": 3}, seed=n))
        res = decompose(S, ThresholdConfig())
        ok &= res.outcome == "saturated" and res.h_s == comb(n, 3) and res.verify(S)
        traces.append(res.trace)
    notes.append("general position n=6..12 saturated with H_S = C(n,3)")
    for spec in cluster_specs(30):
        S = generate(spec)
        res = decompose(S, cfg)
        ok &= res.verify(S)
        traces.append(res.trace)
    for seed in range(300):
        S = coplanar_lines(seed)
        if S is None:
            continue
        res = decompose(S, ThresholdConfig(beta=Fraction(19, 20)))
        ok &= res.verify(S)
        traces.append(res.trace)
    for tr in traces:
        for t in tr:
            if t["step"] == "merge":
                merges += 1
                ok &= t["dim_sum_after"] < t["dim_sum_before"]
    ok &= merges > 0
    notes.append(f"{len(traces)} traces, {merges} merge steps, each decreasing the dimension sum")
    criterion(8, ok, "; ".join(notes))
    assert ok


# ------------------------------------------------------------------ 9

def test_criterion_09_nice_postconditions(criterion):
    total, bad = 0, []
    for m in range(3, 9):
        S, C = skew_family(m)
        for s in iter_nice_sequences(S, C):
            total += 1
            if not nice_ok(S, C, s):
                bad.append(("skew", m))
    S4, C4 = generate_with_truth(ConfigSpec("flat_union", {"d": 4, "flats": [
        {"dim": 1, "count": 4}, {"dim": 2, "count": 5}, {"dim": 1, "count": 4}]}, seed=3))
    assert check_good_collection(C4).good
    n4 = 0
    for s in iter_nice_sequences(S4, C4):
        n4 += 1
        if not nice_ok(S4, C4, s):
            bad.append(("line+plane+line", n4))
    case2 = 0
    for d, a, seed in ((5, 2, 1), (8, 3, 2)):
        S, C = generate_with_truth(ConfigSpec("flat_union", {"d": d, "flats": [
            {"dim": a, "count": a + 2}] * 3}, seed=seed))
        for s in iter_nice_sequences(S, C):
            case2 += 1
            ex = s.excess
            if not (nice_ok(S, C, s) and ex is not None and s.parts[-1].contains(ex["Q"])
                    and meet(ex["target"], ex["Q"]).is_empty):
                bad.append(("case2", d))
            if case2 >= 40:
                break
    ok = not bad and n4 > 0 and case2 > 0
    criterion(9, ok, f"{total} skew-line sequences, {n4} line+plane+line (R^4), "
                     f"{case2} excess-case (R^5, R^8) sequences; failures {bad[:3]}")
    assert ok


# ------------------------------------------------------------------ 10

def _reports(tmp_path, workers):
    E._spanned_flats_cached.cache_clear()
    cfg = ThresholdConfig()
    out = []
    cases = [generate_with_truth(ConfigSpec("two_skew_lines", {"n": 10})),
             skew_family(5),
             (grid(3, 3), None),
             generate_with_truth(ConfigSpec("general_position", {"n": 9, "d": 3}, seed=4))]
    cases += [generate_with_truth(s) for s in cluster_specs(6)]
    for i, (S, C) in enumerate(cases):
        coll = C if C is not None and C.dim_sum < S.ambient_dim or (
            C is not None and len(C) == 3 and S.ambient_dim == 3) else None
        out.append(dumps(run_verify(S, cfg, "all", collection=coll, workers=workers).to_json()))
        out.append(dumps(E.spanned_flats(S, S.ambient_dim - 1, workers).to_json(include_flats=True)))
        pts = tmp_path / f"p{i}.txt"
        write_points(S, pts)
        for argv in (["count", pts, "--list"], ["decompose", pts],
                     ["verify", pts, "--bounds", "pencil,dichotomy"]):
            dest = tmp_path / f"r{i}_{argv[0]}_{workers}.json"
            cli_main([str(a) for a in argv] + ["--workers", str(workers), "-o", str(dest)])
            out.append(dest.read_text())
    return out


def test_criterion_10_determinism(criterion, tmp_path):
    one = _reports(tmp_path, 1)
    four = _reports(tmp_path, 4)
    same = sum(a == b for a, b in zip(one, four))
    ok = one == four
    criterion(10, ok, f"{same}/{len(one)} reports byte-identical with 1 and 4 workers")
    assert ok
