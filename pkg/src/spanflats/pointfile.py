"""Plain-text point files, flat-collection JSON and report serialization.

Point file layout::

    # comment
    d=3 n=4 label=demo
    0 0 0
    1 0 0
    0 1 1/2
    2/3 0 1

Add ``homogeneous`` to the header to give d+1 coordinates per row.
"""

from __future__ import annotations

import json
import shlex
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .geometry import (Flat, GeometryError, PointSet, ProjPoint, canonical_flat,
                       embed_affine, to_scalar)
from .structure import FlatCollection


class ParseError(ValueError):
    """Malformed input file."""


class DuplicatePointsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LoadedPoints:
    points: PointSet
    rows: int
    dropped: int
    homogeneous: bool


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_header(line: str, lineno: int) -> dict:
    out: dict[str, Any] = {"homogeneous": False, "label": ""}
    try:
        tokens = shlex.split(line)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: bad header: {exc}") from exc
    for tok in tokens:
        if tok == "homogeneous":
            out["homogeneous"] = True
            continue
        key, sep, val = tok.partition("=")
        if not sep:
            raise ParseError(f"line {lineno}: unexpected header token {tok!r}")
        if key in ("d", "n"):
            try:
                out[key] = int(val)
            except ValueError:
                raise ParseError(f"line {lineno}: {key} must be an integer, got {val!r}") from None
        elif key == "label":
            out["label"] = val
        else:
            raise ParseError(f"line {lineno}: unknown header key {key!r}")
    if "d" not in out or "n" not in out:
        raise ParseError(f"line {lineno}: header needs d=<D> and n=<N>")
    if out["d"] < 2:
        raise ParseError(f"line {lineno}: d must be >= 2")
    if out["n"] < 0:
        raise ParseError(f"line {lineno}: n must be >= 0")
    return out


def parse_points(text: str, source: str = "<string>") -> LoadedPoints:
    """Parse point-file text. Duplicate points (after canonicalization) are dropped."""
    header = None
    pts: list[ProjPoint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if header is None:
            header = _parse_header(line, lineno)
            width = header["d"] + (1 if header["homogeneous"] else 0)
            continue
        fields = line.split()
        if len(fields) != width:
            raise ParseError(f"{source}:{lineno}: expected {width} coordinates, got {len(fields)}")
        try:
            vals = [to_scalar(f) for f in fields]
        except GeometryError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
        try:
            pts.append(ProjPoint(tuple(vals)) if header["homogeneous"] else embed_affine(vals))
        except GeometryError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
    if header is None:
        raise ParseError(f"{source}: empty point file")
    if len(pts) != header["n"]:
        raise ParseError(f"{source}: header says n={header['n']} but {len(pts)} rows were read")
    S, dropped = PointSet.dedup(pts, header["d"], header["label"])
    if dropped:
        warnings.warn(f"{source}: dropped {dropped} duplicate point(s)", DuplicatePointsWarning,
                      stacklevel=3)
    return LoadedPoints(S, len(pts), dropped, header["homogeneous"])


def load_points(path) -> PointSet:
    return read_points(path).points


def read_points(path) -> LoadedPoints:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return parse_points(text, str(path))


def format_points(S: PointSet) -> str:
    homogeneous = any(p.at_infinity for p in S)
    head = f"d={S.ambient_dim} n={len(S)}"
    if homogeneous:
        head += " homogeneous"
    if S.label:
        head += " " + shlex.quote(f"label={S.label}")
    rows = [" ".join(str(c) for c in (p.coords if homogeneous else p.affine())) for p in S]
    return "\n".join([head] + rows) + "\n"


def write_points(S: PointSet, path) -> None:
    Path(path).write_text(format_points(S))


# ----------------------------------------------------------------- flat collections


def _flat_from_json(item, d: int) -> Flat:
    if isinstance(item, dict):
        if "affine_points" in item:
            gens = [embed_affine([to_scalar(v) for v in row]).coords for row in item["affine_points"]]
        elif "basis" in item:
            gens = [[to_scalar(v) for v in row] for row in item["basis"]]
        else:
            raise ParseError("flat entries need 'basis' or 'affine_points'")
    elif isinstance(item, list):
        gens = [[to_scalar(v) for v in row] for row in item]
    else:
        raise ParseError(f"cannot read a flat from {item!r}")
    if any(len(g) != d + 1 for g in gens):
        raise ParseError(f"flat generators must have {d + 1} homogeneous coordinates")
    F = canonical_flat(gens, d)
    if F.is_empty:
        raise ParseError("flat generators are all zero")
    return F


def collection_from_json(data) -> FlatCollection:
    if not isinstance(data, dict) or "flats" not in data or "ambient_dim" not in data:
        raise ParseError("collection JSON needs 'ambient_dim' and 'flats'")
    d = data["ambient_dim"]
    if not isinstance(d, int) or d < 2:
        raise ParseError("'ambient_dim' must be an integer >= 2")
    try:
        flats = tuple(_flat_from_json(item, d) for item in data["flats"])
        return FlatCollection(flats, d)
    except (GeometryError, TypeError) as exc:
        raise ParseError(str(exc)) from None


def load_collection(path) -> FlatCollection:
    return collection_from_json(load_json(path))


def write_collection(C: FlatCollection, path) -> None:
    Path(path).write_text(dumps(C.to_json()))


# ----------------------------------------------------------------- JSON


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None


def dumps(obj) -> str:
    """Stable JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
