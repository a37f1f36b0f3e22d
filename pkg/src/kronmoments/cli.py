"""Command-line surface: features, expected, fit, generate, experiment.

Exit codes: 0 success, 1 user error (bad flags, unreadable or malformed
input), 2 internal error.  Every command is deterministic given its flags
and --seed; the KRONMOMENTS_WORKERS environment variable sets the worker
count (default 1) without affecting any output bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .estimator import (
    FitFailure,
    LeadingTermInfeasible,
    ObjectiveSpec,
    fit_best,
    fit_direct,
    fit_grid,
    fit_leading,
    fit_partial,
)
from .experiment import (
    ConfigError,
    fit_csv_row,
    parse_experiment_config,
    run_experiment,
    FIT_CSV_COLUMNS,
)
from .features import FeatureCounts, count_features
from .generator import generate_to_file
from .graph_io import GraphParseError, choose_r, load_edge_list
from .moments import (
    FEATURE_NAMES,
    KroneckerParams,
    dominance_exponent,
    expected_features,
)


class _UserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; user errors are exit code 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kronmoments",
                     description="Moment-based fitting and exact sampling "
                                 "of stochastic Kronecker graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="count features of an edge-list file")
    p.add_argument("graph", help="edge-list path ('#' comments, 'u v' lines)")

    p = sub.add_parser("expected", help="closed-form expected feature counts")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("fit", help="fit (a, b, c) to a graph or counts JSON")
    p.add_argument("source", help="edge-list path, or a JSON counts file "
                                  "as produced by the features command")
    p.add_argument("--objective", default="dsq-f2",
                   help="objective code: dsq-f2, dsq-f, dsq-e, dsq-e2, "
                        "dabs-f, dabs-e (default dsq-f2)")
    p.add_argument("--method", default="best",
                   choices=("best", "direct", "grid", "leading"))
    p.add_argument("--features", default=",".join(FEATURE_NAMES),
                   help="comma-separated feature subset (3 features -> "
                        "cross-validated partial fit)")
    p.add_argument("--r", type=int, default=None,
                   help="Kronecker power (default: smallest r with "
                        "2^r >= vertices)")
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="json", choices=("json", "csv", "both"))

    p = sub.add_parser("generate", help="sample a graph by exact coin flipping")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output edge-list path")

    p = sub.add_parser("experiment", help="run a batch experiment config")
    p.add_argument("config", help="sectioned key=value config file")
    p.add_argument("--out", default=None, help="output directory "
                   "(default: config 'output' key or ./experiment-out)")
    return parser


def _load_counts_source(source: str) -> FeatureCounts:
    """Feature counts from a path: an edge list or a counts JSON."""
    path = Path(source)
    if not path.exists():
        raise _UserError(f"no such file: {source}")
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise _UserError(f"{source}: invalid counts JSON: {exc}") from exc
        try:
            return FeatureCounts.from_dict(data)
        except KeyError as exc:
            raise _UserError(f"{source}: counts JSON missing key {exc}") from exc
    graph = load_edge_list(path)
    if graph.loops_dropped or graph.duplicates_dropped:
        print(
            f"note: dropped {graph.loops_dropped} loop(s) and merged "
            f"{graph.duplicates_dropped} duplicate pair(s)",
            file=sys.stderr,
        )
    if graph.num_isolated:
        print(
            f"note: retained {graph.num_isolated} isolated vertex(es); "
            "they count toward the vertex total",
            file=sys.stderr,
        )
    return count_features(graph)


def _cmd_features(args) -> int:
    counts = _load_counts_source(args.graph)
    print(json.dumps(counts.to_dict()))
    return 0


def _cmd_expected(args) -> int:
    params = KroneckerParams(args.a, args.b, args.c, args.r)
    exp = expected_features(params)
    dom = dominance_exponent(params)
    if not dom.lead_dominant:
        print(
            f"note: alpha = {dom.alpha:.4g} <= 1/2; lead closed-form terms "
            "are not safely dominant at this size",
            file=sys.stderr,
        )
    print(json.dumps({
        "a": params.a, "b": params.b, "c": params.c, "r": params.r,
        "E": exp.e_edges, "H": exp.e_hairpins, "T": exp.e_tripins,
        "Tri": exp.e_triangles, "alpha": dom.alpha,
    }))
    return 0


def _cmd_fit(args) -> int:
    counts = _load_counts_source(args.source)
    r = args.r if args.r is not None else choose_r(max(counts.vertices, 1))
    features = tuple(tok.strip() for tok in args.features.split(",") if tok.strip())
    spec = ObjectiveSpec.from_code(args.objective, features=features)

    if args.method == "direct":
        result = fit_direct(counts, r, spec, starts=args.starts, seed=args.seed)
    elif args.method == "grid":
        result = fit_grid(counts, r, spec, points_per_dim=args.grid_points)
    elif args.method == "leading":
        result = fit_leading(counts, r, spec)
    elif len(features) == 3:
        result = fit_partial(counts, r, spec, seed=args.seed,
                             starts=args.starts, grid_points=args.grid_points)
    else:
        result = fit_best(counts, r, spec, seed=args.seed,
                          starts=args.starts, grid_points=args.grid_points)

    payload = result.to_dict()
    payload["r"] = r
    payload["objective_spec"] = spec.code
    if args.format in ("json", "both"):
        print(json.dumps(payload))
    if args.format in ("csv", "both"):
        row = fit_csv_row(Path(args.source).name, "", result, 1 << r)
        print(",".join(str(c) for c in FIT_CSV_COLUMNS))
        print(",".join(str(row[c]) for c in FIT_CSV_COLUMNS))
    return 0


def _cmd_generate(args) -> int:
    params = KroneckerParams(args.a, args.b, args.c, args.r)
    if args.r > 15:
        print(
            f"note: r={args.r} sweeps {4 ** args.r:.2e} cells; expect a "
            "long run",
            file=sys.stderr,
        )
    out = generate_to_file(params, args.seed, args.out)
    print(str(out))
    return 0


def _cmd_experiment(args) -> int:
    config = parse_experiment_config(args.config)
    written = run_experiment(config, output_dir=args.out)
    for name in sorted(written):
        print(str(written[name]))
    return 0


_DISPATCH = {
    "features": _cmd_features,
    "expected": _cmd_expected,
    "fit": _cmd_fit,
    "generate": _cmd_generate,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _DISPATCH[args.command](args)
    except (_UserError, GraphParseError, ConfigError, FitFailure,
            LeadingTermInfeasible, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
