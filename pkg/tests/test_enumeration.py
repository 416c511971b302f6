from fractions import Fraction as Fr
from itertools import combinations, product
from math import comb
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spanflats import _kernels
from spanflats import enumeration as E
from spanflats.constructions import ConfigSpec, generate
from spanflats.geometry import (GeometryError, PointSet, ProjPoint, ambient_flat, canonical_flat,
                                embed_affine, join)

import oracles


def grid(m, d):
    return PointSet.from_affine(list(product(range(m), repeat=d)))


def skew(n=10):
    return generate(ConfigSpec("two_skew_lines", {"n": n}))


def check_against_oracle(S, k):
    got = E.spanned_flats(S, k)
    want = oracles.closure_flats([list(p.coords) for p in S], k)
    assert {m: f.basis for f, m in zip(got.flats, got.members)} == want
    assert list(got.flats) == sorted(got.flats)
    assert len(set(got.flats)) == len(got.flats)


# ---------------------------------------------------------------- spanned_flats

def test_collinear_points_span_one_line():
    S = PointSet.from_affine([(0, 0), (1, 1), (2, 2)])
    c = E.spanned_flats(S, 1)
    assert len(c) == 1 and c.multiplicity == (3,)


def test_grid_3x3_lines(backend):
    c = E.spanned_flats(grid(3, 2), 1)
    assert len(c) == 20
    assert c.histogram() == {2: 12, 3: 8}


def test_grid_3x3x3_planes(backend):
    # frozen from the closure oracle
    c = E.spanned_flats(grid(3, 3), 2)
    assert len(c) == 491
    assert c.histogram() == {3: 344, 4: 48, 5: 36, 6: 44, 7: 4, 9: 15}


def test_general_position_planes():
    S = generate(ConfigSpec("general_position", {"n": 5, "d": 3}, seed=2))
    assert len(E.spanned_flats(S, 2)) == 10


def test_k_zero_and_range():
    S = grid(2, 2)
    c = E.spanned_flats(S, 0)
    assert len(c) == 4 and all(m == 1 for m in c.multiplicity)
    with pytest.raises(GeometryError):
        E.spanned_flats(S, 2)
    with pytest.raises(GeometryError):
        E.spanned_flats(S, -1)


def test_too_few_points_gives_empty_census():
    S = PointSet.from_affine([(0, 0, 0), (1, 0, 0)])
    assert len(E.spanned_flats(S, 2)) == 0


def test_all_points_on_a_line_has_no_planes():
    S = PointSet.from_affine([(t, 0, 0) for t in range(5)])
    assert len(E.spanned_flats(S, 2)) == 0


def test_points_at_infinity():
    S = PointSet((ProjPoint((Fr(0), Fr(1), Fr(0))), ProjPoint((Fr(0), Fr(0), Fr(1))),
                  ProjPoint((Fr(0), Fr(1), Fr(1))), embed_affine((0, 0))), 2)
    c = E.spanned_flats(S, 1)
    # the line at infinity holds three points
    assert sorted(c.multiplicity) == [2, 2, 2, 3]
    check_against_oracle(S, 1)


@pytest.mark.parametrize("seed", range(12))
def test_oracle_random_small(seed, backend):
    rng = random.Random(seed)
    d = rng.choice([2, 3])
    n = rng.randint(d + 1, 9)
    pts = {tuple(rng.randint(0, 2) for _ in range(d)) for _ in range(n)}
    S = PointSet.from_affine(sorted(pts))
    for k in range(d):
        check_against_oracle(S, k)


points_st = st.integers(2, 3).flatmap(lambda d: st.lists(
    st.tuples(*[st.fractions(min_value=-2, max_value=2, max_denominator=2)] * d),
    min_size=d + 1, max_size=8, unique=True))


@settings(max_examples=40, deadline=None)
@given(points_st)
def test_oracle_property(pts):
    S = PointSet.from_affine(pts)
    for k in range(S.ambient_dim):
        check_against_oracle(S, k)


def test_sympy_keys_agree():
    S = grid(3, 2)
    for f, m in zip(*(lambda c: (c.flats, c.members))(E.spanned_flats(S, 1))):
        rows = [list(S[i].coords) for i in m[:2]]
        assert oracles.sympy_key(rows) == f.basis


def test_every_full_rank_d_subset_in_exactly_one_hyperplane():
    S = generate(ConfigSpec("flat_cluster", {"d": 3, "flats": [{"dim": 2, "count": 6}], "x": 3},
                            seed=1))
    c = E.spanned_flats(S, 2)
    inc = c.incidence_matrix(len(S))
    for T in combinations(range(len(S)), 3):
        if oracles.rank([list(S[i].coords) for i in T]) < 3:
            continue
        holders = [i for i in range(len(c)) if inc[i, list(T)].all()]
        assert len(holders) == 1


def test_monotone_under_adding_points():
    rng = random.Random(9)
    pts = [tuple(rng.randint(0, 3) for _ in range(3)) for _ in range(10)]
    pts = list(dict.fromkeys(pts))
    prev = 0
    for n in range(4, len(pts) + 1):
        h = E.total_hyperplanes(PointSet.from_affine(pts[:n]))
        assert h >= prev
        prev = h


# ---------------------------------------------------------------- backends / workers

def test_backends_agree_on_configs():
    specs = [ConfigSpec("grid", {"m": 3, "d": 3}),
             ConfigSpec("general_position", {"n": 9, "d": 3}, seed=4),
             ConfigSpec("flat_union", {"d": 4, "flats": [{"dim": 1, "count": 4}, {"dim": 2, "count": 5},
                                                          {"dim": 1, "count": 4}]}, seed=3)]
    old = _kernels.backend()
    try:
        for spec in specs:
            S = generate(spec)
            out = {}
            for b in ("numba", "numpy"):
                _kernels.set_backend(b)
                E._spanned_flats_cached.cache_clear()
                out[b] = E.spanned_flats(S, S.ambient_dim - 1)
            assert out["numba"] == out["numpy"]
    finally:
        _kernels.set_backend(old)
        E._spanned_flats_cached.cache_clear()


def test_object_path_for_large_coordinates(backend):
    big = 10 ** 12
    S = PointSet.from_affine([(0, 0, 0), (big, 0, 0), (0, big, 1), (3, 5, big), (big, big, big),
                              (2 * big, 0, 0)])
    P = _kernels.as_matrix([E.integer_lift(p) for p in S], 3)
    assert P.dtype == object
    check_against_oracle(S, 2)
    check_against_oracle(S, 1)


def test_int64_safe_bound():
    assert _kernels.int64_safe(10, 3)
    assert not _kernels.int64_safe(10 ** 9, 4)


def test_kernel_minors_match_direct_determinants(backend):
    rng = np.random.default_rng(0)
    P = rng.integers(-6, 7, size=(7, 4)).astype(np.int64)
    subsets = np.array(list(combinations(range(7), 3)), dtype=np.int64)
    cols = _kernels.column_sets(4, 3)
    got = _kernels.subset_minors(P, subsets, cols)
    for a, sub in enumerate(subsets):
        for b, cs in enumerate(cols):
            assert got[a, b] == round(np.linalg.det(P[np.ix_(sub, cs)].astype(float)))


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")


def test_workers_give_identical_output():
    S = generate(ConfigSpec("general_position", {"n": 14, "d": 3}, seed=7))
    one = E._enumerate(S, 2, 1)
    four = E.spanned_flats(S, 2, workers=4)
    assert one == four


# ---------------------------------------------------------------- H_S and pencils

def test_hyperplane_count_examples():
    S = skew(10)
    assert E.hyperplane_count(S, ambient_flat(3)) == 10
    G = generate(ConfigSpec("general_position", {"n": 4, "d": 3}, seed=1))
    assert E.hyperplane_count(G, ambient_flat(3)) == 4
    plane = canonical_flat([(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)])
    S4 = PointSet.from_affine([(t, t, 0) for t in range(4)] + [(0, 0, 5)])
    assert E.hyperplane_count(S4, plane) == 1
    line = join(S4[0], S4[1])
    assert E.hyperplane_count(S4, line) == 4
    with pytest.raises(GeometryError):
        E.hyperplane_count(S4, S4[0].as_flat())


def test_hyperplanes_through_point_examples():
    G = generate(ConfigSpec("general_position", {"n": 7, "d": 2}, seed=3))
    amb = ambient_flat(2)
    assert E.hyperplanes_through_point(G, amb, G[0]) == 6
    g = grid(3, 2)
    centre = embed_affine((1, 1))
    assert E.hyperplanes_through_point(g, amb, centre) == 4
    four = PointSet.from_affine([(0, 0), (4, 1), (1, 5), (7, 3)])
    off = embed_affine((Fr(1, 7), Fr(100, 3)))
    assert all(not f.contains(off) for f in E.spanned_flats(four, 1).flats)
    assert E.hyperplanes_through_point(four, amb, off) == 0
    with pytest.raises(GeometryError):
        E.hyperplanes_through_point(g, join(g[0], g[1]), g[0])


def test_pencil_bound_on_grid_and_skew():
    for S in (grid(3, 3), skew(8), grid(4, 2)):
        d = S.ambient_dim
        hyp, counts = E.pencil_counts(S)
        for i, m in enumerate(hyp.multiplicity):
            assert counts[i].max() <= m ** (d - 2)
            for q in hyp.members[i]:
                if d > 2:
                    assert counts[i, q] == E.hyperplanes_through_point(S, hyp.flats[i], S[q])
                else:
                    assert counts[i, q] == 1


def test_pencil_counts_zero_off_hyperplane():
    S = skew(6)
    hyp, counts = E.pencil_counts(S)
    inc = hyp.incidence_matrix(len(S))
    assert (counts[~inc] == 0).all()


def test_contained_matrix_matches_geometry():
    S = grid(3, 3)
    lines = E.spanned_flats(S, 1)
    planes = E.spanned_flats(S, 2)
    M = E.contained_matrix(lines, planes, len(S))
    rng = random.Random(1)
    for _ in range(200):
        i, j = rng.randrange(len(lines)), rng.randrange(len(planes))
        assert M[i, j] == planes.flats[j].contains(lines.flats[i])


# ---------------------------------------------------------------- pair census

def test_pair_census_single_outlier():
    S = PointSet.from_affine([(0, 0, 0), (1, 0, 0), (0, 1, 0), (3, 4, 7)])
    plane = join(S[0], S[1], S[2])
    c = E.pair_plane_census(S, plane)
    assert c.L == c.h_p == 3 and c.a == (1, 1, 1) and c.J == 0
    assert c.pairs_hold and c.j_bound_holds


def test_pair_census_skew_lines():
    S = skew(10)
    P = join(S[0], S[1], S[5])  # l_1 plus one point of l_2
    c = E.pair_plane_census(S, P)
    assert c.x == 4
    assert c.J <= c.x ** 2 * len(S)
    assert c.raw_pairs == c.x * c.h_p and c.sum_a >= c.raw_pairs
    js = c.to_json()
    assert js["J_bound"] == c.x ** 2 * len(S)


def test_pair_census_general_position_sum_equals_pairs():
    S = generate(ConfigSpec("general_position", {"n": 9, "d": 3}, seed=5))
    P = join(S[0], S[1], S[2])
    c = E.pair_plane_census(S, P)
    assert c.sum_a == c.raw_pairs == c.x * c.h_p
    assert c.J == sum(a * (a - 1) // 2 for a in c.a)


def test_pair_census_errors():
    S = PointSet.from_affine([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    plane = join(S[0], S[1], S[2])
    with pytest.raises(GeometryError):
        E.pair_plane_census(S, plane)
    with pytest.raises(GeometryError):
        E.pair_plane_census(S, join(S[0], S[1]))


def test_census_json():
    js = E.spanned_flats(grid(3, 2), 1).to_json(include_flats=True)
    assert js["flat_count"] == 20
    assert js["multiplicity_histogram"] == {"2": 12, "3": 8}
    assert len(js["flats"]) == 20 and js["flats"][0]["points"]


def test_fraction_ratio():
    assert E.fraction_ratio(3, 6) == Fr(1, 2)
    assert E.fraction_ratio(3, 0) is None
