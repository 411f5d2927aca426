"""Command-line interface.

Subcommands: ``synth``, ``select-k``, ``evaluate``, ``bottlenecks``. Every
run writes its artifacts plus a ``manifest-<command>.json`` listing them.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric or
degenerate-data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from ._svg import line_chart
from .cluster import KMeansConfig, kmeans_fit, select_k
from .domain import build_matrix
from .evaluation import compare_classifiers, reports_to_json, write_roc_csv
from .exceptions import ConfigError, DataError, DegenerateDataError
from .ingest import read_cohort, read_curriculum, write_cohort, write_curriculum
from .insight import bottleneck_rank, cluster_profile, early_warning_features
from .synth import CohortSpec, default_department_spec, generate_cohort

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _at_least(minimum: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v

    return parse


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(data, path: Path) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class _Run:
    """Collects artifacts and writes the run manifest."""

    def __init__(self, command: str, args, inputs, config):
        self.command = command
        self.out = Path(args.out)
        self.seed = args.seed
        self.inputs = [Path(p) for p in inputs]
        self.config = config
        self.outputs: list[Path] = []
        self.start = time.perf_counter()
        if not self.out.is_dir():
            raise ConfigError(f"output directory {self.out} does not exist")

    def path(self, name: str) -> Path:
        return self.out / name

    def add(self, path: Path) -> Path:
        self.outputs.append(path)
        return path

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "seed": self.seed,
            "config": self.config,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.outputs],
            "duration_seconds": round(time.perf_counter() - self.start, 6),
        }
        return _dump_json(manifest, self.path(f"manifest-{self.command}.json"))


def _load(args):
    for p in (args.cohort, args.curriculum):
        if not Path(p).is_file():
            raise ConfigError(f"input file {p} not found")
    spec = read_curriculum(args.curriculum)
    records, report = read_cohort(args.cohort, spec)
    if not records:
        raise DataError("cohort file contains no valid rows")
    return records, spec, report


def cmd_synth(args) -> int:
    if args.spec:
        if not Path(args.spec).is_file():
            raise ConfigError(f"spec file {args.spec} not found")
        spec = CohortSpec.from_json(args.spec)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = default_department_spec(args.seed if args.seed is not None else 0)
    args.seed = spec.seed
    run = _Run("synth", args, [args.spec] if args.spec else [], {"default": not args.spec})
    records, curriculum, _ = generate_cohort(spec)
    run.add(write_cohort(records, curriculum, run.path("cohort.csv")))
    run.add(write_curriculum(curriculum, run.path("curriculum.csv")))
    spec_path = run.path("cohort_spec.json")
    spec_path.write_text(spec.to_json(), encoding="utf-8")
    run.add(spec_path)
    run.finish()
    if not args.quiet:
        grads = sum(r.graduated for r in records)
        print(f"wrote {len(records)} students x {len(curriculum)} courses "
              f"({grads} graduates) to {run.out}")
    return EXIT_OK


def cmd_select_k(args) -> int:
    if args.k_max < args.k_min:
        raise ConfigError("--k-max must be >= --k-min")
    config = {"k_min": args.k_min, "k_max": args.k_max, "folds": args.folds,
              "restarts": args.restarts, "score_on": args.score_on}
    run = _Run("select-k", args, [args.cohort, args.curriculum], config)
    records, spec, report = _load(args)
    m = build_matrix(records, spec)
    result = select_k(m, (args.k_min, args.k_max), args.folds, args.seed,
                      score_on=args.score_on, restarts=args.restarts)
    run.add(_dump_json(result.to_dict(), run.path("kselection.json")))
    curve = run.path("ch_curve.csv")
    with curve.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "mean_ch"])
        for k, v in result.per_k.items():
            w.writerow([k, repr(v)])
    run.add(curve)
    if args.svg:
        run.add(line_chart({"mean CH": list(result.per_k.items())}, run.path("ch_curve.svg"),
                           title="Calinski-Harabasz index", xlabel="k", ylabel="mean CH"))
    run.finish()
    if not args.quiet:
        for k, v in result.per_k.items():
            print(f"k={k}  mean CH={v:.4f}")
        print(f"chosen_k={result.chosen_k}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = {"k": args.k, "first_n": args.first_n, "folds": args.folds,
              "restarts": args.restarts, "l2_lambda": args.l2_lambda}
    run = _Run("evaluate", args, [args.cohort, args.curriculum], config)
    records, spec, report = _load(args)
    m = build_matrix(records, spec)
    reports = compare_classifiers(m, spec, k=args.k, first_n=args.first_n, folds=args.folds,
                                  seed=args.seed, restarts=args.restarts,
                                  l2_lambda=args.l2_lambda)
    metrics = run.path("metrics.json")
    metrics.write_text(reports_to_json(reports), encoding="utf-8")
    run.add(metrics)
    for (clf, fs), rep in reports.items():
        run.add(write_roc_csv(rep.roc, run.path(f"roc_{clf}_{fs}.csv")))
    if args.svg:
        for fs in dict.fromkeys(fs for _, fs in reports):
            series = {clf: list(rep.roc.points) for (clf, f), rep in reports.items() if f == fs}
            run.add(line_chart(series, run.path(f"roc_{fs}.svg"), title=f"ROC ({fs})",
                               xlabel="false positive rate", ylabel="true positive rate",
                               diagonal=True))
    run.finish()
    if not args.quiet:
        print(f"{'classifier':<10} {'features':<9} {'acc':>6} {'prec':>6} {'recall':>6} "
              f"{'f1':>6} {'auc':>6}")
        for (clf, fs), r in reports.items():
            print(f"{clf:<10} {fs:<9} {r.accuracy:6.3f} {r.precision:6.3f} {r.recall:6.3f} "
                  f"{r.f1:6.3f} {r.auc:6.3f}")
    return EXIT_OK


def cmd_bottlenecks(args) -> int:
    config = {"k": args.k, "division": args.division, "top": args.top, "restarts": args.restarts}
    run = _Run("bottlenecks", args, [args.cohort, args.curriculum], config)
    records, spec, report = _load(args)
    m = build_matrix(records, spec)
    model = kmeans_fit(m, KMeansConfig(args.k, restarts=args.restarts, seed=args.seed))
    ranking = bottleneck_rank(m, model, spec)
    profile = cluster_profile(records, model)
    top = early_warning_features(ranking, args.division, args.top)
    run.add(ranking.write_csv(run.path("bottlenecks.csv")))
    path = run.path("bottlenecks.json")
    path.write_text(ranking.to_json(), encoding="utf-8")
    run.add(path)
    run.add(profile.write_csv(run.path("cluster_profile.csv")))
    path = run.path("cluster_profile.json")
    path.write_text(profile.to_json(), encoding="utf-8")
    run.add(path)
    run.add(_dump_json({"division": args.division, "courses": top},
                       run.path("early_warning.json")))
    run.finish()
    if not args.quiet:
        for r in ranking.rows[: max(args.top, 5)]:
            print(f"{r.course_id:<12} {r.division:<6} separation={r.separation:.3f}")
        print(f"early-warning features ({args.division}): {', '.join(top)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="existing output directory")
    common.add_argument("--quiet", action="store_true", help="suppress the console summary")
    common.add_argument("--restarts", type=_at_least(1), default=10,
                        help="k-means++ restarts per fit")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("cohort", help="cohort CSV")
    data.add_argument("curriculum", help="curriculum file (course_id,division per line)")
    data.add_argument("--seed", type=_u64, default=0, help="master seed (unsigned 64-bit)")
    data.add_argument("--svg", action="store_true", help="also render SVG charts")

    parser = argparse.ArgumentParser(prog="attrition", description="Attrition analysis of grade records: cluster selection, "
                                     "classifier comparison and bottleneck courses.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="cohort spec JSON")
    src.add_argument("--default", action="store_true", help="built-in 113-course department")
    p.add_argument("--seed", type=_u64, default=None, help="overrides the seed in --spec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select-k", parents=[common, data], help="choose k by CH index")
    p.add_argument("--k-min", type=_at_least(2), default=2, help="smallest k tried")
    p.add_argument("--k-max", type=_at_least(2), default=6, help="largest k tried")
    p.add_argument("--folds", type=_at_least(2), default=5, help="cross-validation folds")
    p.add_argument("--score-on", choices=("train", "test"), default="train",
                   help="score CH on each training fold or its held-out fold")
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("evaluate", parents=[common, data], help="compare classifiers")
    p.add_argument("--k", type=_at_least(1), default=2, help="clusters for the cluster classifier")
    p.add_argument("--first-n", type=_at_least(1), default=3,
                   help="size of the early pathway feature set")
    p.add_argument("--folds", type=_at_least(2), default=5, help="cross-validation folds")
    p.add_argument("--l2-lambda", type=float, default=1e-4, help="logistic L2 penalty")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bottlenecks", parents=[common, data], help="rank bottleneck courses")
    p.add_argument("--k", type=_at_least(2), default=2, help="number of clusters")
    p.add_argument("--division", choices=("lower", "any"), default="lower")
    p.add_argument("--top", type=_at_least(1), default=3, help="early-warning courses to report")
    p.set_defaults(func=cmd_bottlenecks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
