import json
import warnings
from fractions import Fraction

import pytest

from spanflats.constructions import ConfigSpec, generate_with_truth
from spanflats.geometry import PointSet, embed_affine
from spanflats.pointfile import (DuplicatePointsWarning, ParseError, collection_from_json, dumps,
                                 format_points, load_collection, load_points, parse_points,
                                 read_points, write_collection, write_points)


def test_two_rows(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("d=3 n=2\n0 0 0\n1 0 0\n")
    S = load_points(f)
    assert len(S) == 2 and S.ambient_dim == 3


def test_equal_rationals_dedup_with_warning():
    with pytest.warns(DuplicatePointsWarning):
        got = parse_points("d=2 n=2\n1/2 1/3\n2/4 2/6\n")
    assert len(got.points) == 1 and got.dropped == 1 and got.rows == 2


def test_width_mismatch():
    with pytest.raises(ParseError, match="expected 3"):
        parse_points("d=3 n=1\n1 2\n")


@pytest.mark.parametrize("text", ["", "# only a comment\n\n", "d=2 n=1\n1 x\n", "d=2 n=3\n0 0\n1 1\n",
                                  "n=2\n0 0\n", "d=2 n=1 colour=red\n0 0\n", "d=1 n=1\n0\n",
                                  "d=two n=1\n0 0\n", "d=2 n=1\n1/0 2\n"])
def test_malformed(text):
    with pytest.raises(ParseError):
        parse_points(text)


def test_comments_and_homogeneous():
    got = parse_points("# demo\nd=2 n=3 homogeneous label='my set'\n1 0 0  # origin\n0 1 1\n2 4 6\n")
    S = got.points
    assert got.homogeneous and S.label == "my set" and len(S) == 3
    assert any(p.at_infinity for p in S)
    assert embed_affine([2, 3]) in S.points


def test_all_zero_homogeneous_row_rejected():
    with pytest.raises(ParseError):
        parse_points("d=2 n=1 homogeneous\n0 0 0\n")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        read_points(tmp_path / "nope.txt")


@pytest.mark.parametrize("homog", [False, True])
def test_round_trip(tmp_path, homog):
    pts = [embed_affine([Fraction(1, 3), 2]), embed_affine([-5, Fraction(7, 2)])]
    if homog:
        from spanflats.geometry import ProjPoint
        pts.append(ProjPoint((0, 1, 1)))
    S, _ = PointSet.dedup(pts, 2, "round trip")
    f = tmp_path / "s.txt"
    write_points(S, f)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = load_points(f)
    assert back == S and back.label == "round trip"
    assert ("homogeneous" in format_points(S).splitlines()[0]) == homog


def test_collection_json(tmp_path):
    S, C = generate_with_truth(ConfigSpec("skew_line_family", {"m": 3}))
    f = tmp_path / "c.json"
    write_collection(C, f)
    assert load_collection(f) == C
    alt = collection_from_json({"ambient_dim": 3, "flats": [
        {"affine_points": [[0, 0, 0], [1, 0, 0]]}, [[1, 0, 0, 0], [0, 1, 0, 0]],
        {"basis": [["1", "0", "0", "0"], ["0", "0", "1", "0"]]}]})
    assert alt.flats[0] == alt.flats[1] and alt.dims == (1, 1, 1)


@pytest.mark.parametrize("data", [[], {"flats": []}, {"ambient_dim": 1, "flats": []},
                                  {"ambient_dim": 3, "flats": [{"pts": []}]},
                                  {"ambient_dim": 3, "flats": [[[1, 0, 0]]]},
                                  {"ambient_dim": 3, "flats": [[[0, 0, 0, 0]]]},
                                  {"ambient_dim": 3, "flats": [7]}])
def test_bad_collection(data):
    with pytest.raises(ParseError):
        collection_from_json(data)


def test_bad_json(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{nope")
    with pytest.raises(ParseError):
        load_collection(f)


def test_dumps_is_stable():
    a = dumps({"b": 1, "a": [1, 2]})
    assert a == dumps({"a": [1, 2], "b": 1}) and a.endswith("\n")
    assert json.loads(a) == {"a": [1, 2], "b": 1}
