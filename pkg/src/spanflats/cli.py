"""``spanflats`` command line: generate, count, decompose and verify."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from .constructions import (ConfigSpec, ConstructionError, enumerate_nice_hyperplanes,
                            generate_with_truth)
from .enumeration import spanned_flats
from .geometry import GeometryError, to_scalar
from .pointfile import (DuplicatePointsWarning, ParseError, dumps, load_collection, load_json,
                        read_points, write_collection, write_points)
from .structure import (ConfigError, ThresholdConfig, check_good_collection, decompose,
                        is_saturated)
from .verify import VerifyError, run_verify

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _rational(text: str):
    try:
        return to_scalar(text)
    except GeometryError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--workers", type=_positive_int, default=1,
                        help="processes for the spanned-flat enumeration")

    p = _Parser(prog="spanflats", description=__doc__)
    p.add_argument("--version", action="version", version=f"spanflats {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a configuration from a JSON spec")
    g.add_argument("spec")
    g.add_argument("--collection-out", help="also write the planted flats as JSON")
    g.add_argument("--report", help="write the generation report here (default stdout)")

    c = sub.add_parser("count", parents=[common], help="census of spanned k-flats")
    c.add_argument("points")
    c.add_argument("-k", type=int, help="flat dimension (default d-1)")
    c.add_argument("--list", action="store_true", help="include every flat and its points")

    f = sub.add_parser("flats", parents=[common], help="list rich flats and their saturation")
    f.add_argument("points")
    f.add_argument("--rich", type=_rational, required=True, help="richness fraction c")
    f.add_argument("--sat", type=_rational, required=True, help="saturation constant gamma")
    f.add_argument("-k", type=int, action="append", help="restrict to these dimensions")

    dc = sub.add_parser("decompose", parents=[common], help="run the cluster/saturated dichotomy")
    dc.add_argument("points")
    dc.add_argument("--beta", type=_rational, help="cluster threshold (overrides the config)")
    dc.add_argument("--config", help="threshold config JSON")
    dc.add_argument("--witness", action="store_true",
                    help="attach a nice sequence when the outcome is saturated")

    nc = sub.add_parser("nice", parents=[common], help="hyperplanes from nice sequences")
    nc.add_argument("points")
    nc.add_argument("--collection", required=True)
    nc.add_argument("--budget", type=_positive_int)
    nc.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", parents=[common], help="check the counting bounds")
    v.add_argument("points")
    v.add_argument("--bounds", required=True, help="comma-separated bound ids or 'all'")
    v.add_argument("--collection")
    v.add_argument("--config")
    v.add_argument("-k", type=int, action="append", help="richness for the degenerate census")
    v.add_argument("--alpha", type=_rational, help="degeneracy fraction (default: beta)")
    return p


def _config(path, beta=None) -> ThresholdConfig:
    data = dict(load_json(path)) if path else {}
    if beta is not None:
        data["beta"] = beta
    return ThresholdConfig.from_json(data)


def _load(path):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DuplicatePointsWarning)
        loaded = read_points(path)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return loaded


def _points_info(loaded) -> dict:
    S = loaded.points
    return {"label": S.label, "n": len(S), "d": S.ambient_dim, "rows": loaded.rows,
            "duplicates_dropped": loaded.dropped}


def _cmd_gen(args):
    spec = ConfigSpec.from_json(load_json(args.spec))
    S, truth = generate_with_truth(spec)
    if not args.output:
        raise UsageError("gen needs -o <points file>")
    write_points(S, args.output)
    if args.collection_out:
        if truth is None:
            raise UsageError(f"kind {spec.kind!r} has no planted flats")
        write_collection(truth, args.collection_out)
    census = spanned_flats(S, S.ambient_dim - 1, args.workers)
    report = {"command": "gen", "spec": spec.to_json(), "n": len(S), "d": S.ambient_dim,
              "label": S.label, "census": census.to_json(),
              "collection": truth.to_json() if truth is not None else None}
    return report, EXIT_OK, args.report


def _cmd_count(args):
    loaded = _load(args.points)
    S = loaded.points
    d = S.ambient_dim
    k = d - 1 if args.k is None else args.k
    census = spanned_flats(S, k, args.workers)
    report = {"command": "count", "points": _points_info(loaded), "total": len(census),
              **census.to_json(include_flats=args.list)}
    return report, EXIT_OK, args.output


def _cmd_flats(args):
    loaded = _load(args.points)
    S = loaded.points
    d, n = S.ambient_dim, len(S)
    ks = sorted(set(args.k)) if args.k else list(range(1, d))
    for k in ks:
        if not 1 <= k <= d - 1:
            raise UsageError(f"-k {k} out of range 1..{d - 1}")
    rows = []
    for k in ks:
        census = spanned_flats(S, k, args.workers)
        for F, mem in zip(census.flats, census.members):
            if len(mem) < args.rich * n:
                continue
            verdict = is_saturated(S, F, args.sat)
            rows.append({"dim": k, "points": list(mem), "count": len(mem), "basis": F.to_json(),
                         "H_S_F": verdict.h, "threshold": str(verdict.threshold),
                         "saturated": verdict.saturated})
    report = {"command": "flats", "points": _points_info(loaded), "rich": str(args.rich),
              "sat": str(args.sat), "flats": rows,
              "rich_saturated": sum(r["saturated"] for r in rows)}
    return report, EXIT_OK, args.output


def _cmd_decompose(args):
    loaded = _load(args.points)
    cfg = _config(args.config, args.beta)
    res = decompose(loaded.points, cfg, witness=args.witness)
    ok = res.verify(loaded.points)
    report = {"command": "decompose", "tool_version": __version__,
              "points": _points_info(loaded), "result": res.to_json(), "verified": ok}
    return report, EXIT_OK if ok else EXIT_FAILED, args.output


def _cmd_nice(args):
    loaded = _load(args.points)
    S = loaded.points
    C = load_collection(args.collection)
    verdict = check_good_collection(C)
    if not verdict.good:
        raise UsageError(f"collection is not good: {verdict}")
    stats: dict = {}
    H = enumerate_nice_hyperplanes(S, C, args.budget, args.seed, stats)
    report = {"command": "nice", "points": _points_info(loaded), "collection": C.to_json(),
              "budget": args.budget, "seed": args.seed, "count": len(H),
              "hyperplanes": [h.to_json() for h in H],
              "census_stats": {str(s): v for s, v in sorted(stats.items())}}
    return report, EXIT_OK, args.output


def _cmd_verify(args):
    loaded = _load(args.points)
    cfg = _config(args.config)
    C = load_collection(args.collection) if args.collection else None
    rep = run_verify(loaded.points, cfg, args.bounds, collection=C, ks=args.k,
                     alpha=args.alpha, workers=args.workers)
    report = {"command": "verify", **rep.to_json(), "points": _points_info(loaded)}
    return report, EXIT_OK if rep.all_hold else EXIT_FAILED, args.output


COMMANDS = {"gen": _cmd_gen, "count": _cmd_count, "flats": _cmd_flats,
            "decompose": _cmd_decompose, "nice": _cmd_nice, "verify": _cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report, status, dest = COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, VerifyError, ConfigError, ConstructionError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = dumps(report)
    if dest:
        Path(dest).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
