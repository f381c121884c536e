"""Command-line interface for the forwarding-choice pipeline.

Subcommands: synth-graph, synth-cascades, synth-instances, exposure-stats,
extract, featurize, train, evaluate, ablate, pipeline. Every run writes a
JSON manifest (<out>.manifest.json, or run_manifest.json inside a pipeline
output directory) recording inputs, flags, seed, counts and wall time.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from fwchoice import __version__
from fwchoice.cascade import dump_cascades, load_cascades
from fwchoice.evaluation import (
    evaluate,
    format_report_pretty,
    format_report_tsv,
    run_ablation,
    temporal_split,
)
from fwchoice.exposure import (
    compute_exposures,
    exposure_distribution,
    extract_instances,
    write_exposure_stats_tsv,
    write_instances_tsv,
)
from fwchoice.features import (
    GROUPINGS,
    build_history_index,
    featurize_instances,
    read_features_tsv,
    write_features_tsv,
)
from fwchoice.graph import dump_edges, load_edges
from fwchoice.model import ChoiceModel, fit
from fwchoice.synth import SynthConfig, generate_graph, sample_instances, simulate_cascades

log = logging.getLogger(__name__)


def _load_toml(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _synth_config(args) -> SynthConfig:
    params = {}
    if getattr(args, "config", None):
        raw = _load_toml(args.config)
        raw = raw.get("synth", raw)
        known = set(SynthConfig.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        params.update(raw)
    for name in ("seed", "n_users", "graph_model", "edge_prob", "out_degree",
                 "n_cascades", "forward_prob", "max_events"):
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            params[name] = v
    if "beta" in params:
        params["beta"] = tuple(params["beta"])
    return SynthConfig(**params)


def _write_manifest(path, subcommand, args, counts, t0, seed=None):
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "tool": f"fwchoice {__version__}",
        "subcommand": subcommand,
        "flags": flags,
        "seed": seed,
        "counts": counts,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _manifest_path(out):
    return str(out) + ".manifest.json"


def cmd_synth_graph(args):
    t0 = time.perf_counter()
    cfg = _synth_config(args)
    g = generate_graph(cfg)
    dump_edges(g, args.out)
    _write_manifest(_manifest_path(args.out), "synth-graph", args,
                    {"users": g.num_users, "edges": g.num_edges}, t0, cfg.seed)
    print(f"wrote {args.out}: {g.num_users} users, {g.num_edges} edges")
    return 0


def cmd_synth_cascades(args):
    t0 = time.perf_counter()
    cfg = _synth_config(args)
    g = load_edges(args.edges)
    cascades = simulate_cascades(g, cfg)
    dump_cascades(cascades, args.out)
    n_events = sum(len(c.events) for c in cascades)
    _write_manifest(_manifest_path(args.out), "synth-cascades", args,
                    {"cascades": len(cascades), "events": n_events}, t0, cfg.seed)
    print(f"wrote {args.out}: {len(cascades)} cascades, {n_events} events")
    return 0


def cmd_synth_instances(args):
    t0 = time.perf_counter()
    cfg = _synth_config(args)
    X, y = sample_instances(cfg, args.n)
    write_features_tsv(X, y, args.out)
    _write_manifest(_manifest_path(args.out), "synth-instances", args,
                    {"instances": int(len(y)), "label_1": int(y.sum())}, t0, cfg.seed)
    print(f"wrote {args.out}: {len(y)} labeled instances")
    return 0


def cmd_exposure_stats(args):
    t0 = time.perf_counter()
    g = load_edges(args.edges)
    cascades = load_cascades(args.cascades)
    records = [r for c in cascades for r in compute_exposures(g, c)]
    dist = exposure_distribution(records)
    write_exposure_stats_tsv(dist, args.out)
    _write_manifest(_manifest_path(args.out), "exposure-stats", args,
                    {"records": len(records), "distinct_k": len(dist)}, t0)
    print(f"wrote {args.out}: {len(records)} exposure records")
    return 0


def cmd_extract(args):
    t0 = time.perf_counter()
    g = load_edges(args.edges)
    cascades = load_cascades(args.cascades)
    stats = {}
    instances = extract_instances(g, cascades, stats)
    write_instances_tsv(instances, args.out)
    _write_manifest(_manifest_path(args.out), "extract", args, stats, t0)
    print(f"wrote {args.out}: {len(instances)} choice instances "
          f"({stats['dropped_parent_mismatch']} dropped)")
    return 0


def cmd_featurize(args):
    t0 = time.perf_counter()
    g = load_edges(args.edges)
    cascades = load_cascades(args.cascades)
    instances = extract_instances(g, cascades)
    X, y = featurize_instances(instances, g, cascades, tz_offset=args.tz_offset)
    write_features_tsv(X, y, args.out)
    _write_manifest(_manifest_path(args.out), "featurize", args,
                    {"instances": len(instances)}, t0)
    print(f"wrote {args.out}: {len(instances)} featurized instances")
    return 0


def cmd_train(args):
    t0 = time.perf_counter()
    X, y = read_features_tsv(args.features)
    grouping = GROUPINGS[args.grouping]
    model, report = fit(X, y, l2=args.l2, tol=args.tol, max_iter=args.max_iter,
                        grouping=grouping)
    model.save(args.out)
    counts = {
        "n": int(len(y)),
        "final_log_likelihood": report.final_log_likelihood,
        "iterations": report.iterations,
        "converged": report.converged,
    }
    _write_manifest(_manifest_path(args.out), "train", args, counts, t0)
    print(f"wrote {args.out}: ln L = {report.final_log_likelihood:.4f}, "
          f"{report.iterations} iterations, converged={report.converged}")
    return 0


def cmd_evaluate(args):
    t0 = time.perf_counter()
    model = ChoiceModel.load(args.model)
    X, y = read_features_tsv(args.features)
    cols = [fid - 1 for fid in model.feature_ids]
    report = evaluate(model, X[:, cols], y, threshold=args.threshold)
    rows_tsv = (
        "tp\tfp\tfn\ttn\tn\tprecision\trecall\tf1\tthreshold\n"
        f"{report.tp}\t{report.fp}\t{report.fn}\t{report.tn}\t{report.n}\t"
        f"{_fmt_metric(report.precision)}\t{_fmt_metric(report.recall)}\t"
        f"{_fmt_metric(report.f1)}\t{report.threshold}\n"
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(rows_tsv)
    _write_manifest(_manifest_path(args.out), "evaluate", args, {"n": report.n}, t0)
    print(rows_tsv, end="")
    return 0


def _fmt_metric(v):
    return "undefined" if v is None else f"{v:.6f}"


def cmd_ablate(args):
    t0 = time.perf_counter()
    X_train, y_train = read_features_tsv(args.train_features)
    X_test, y_test = read_features_tsv(args.test_features)
    grouping = GROUPINGS[args.grouping]
    rows = run_ablation(
        (X_train, y_train), (X_test, y_test), grouping,
        l2=args.l2, tol=args.tol, max_iter=args.max_iter,
        threshold=args.threshold, seed=args.seed,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(format_report_tsv(rows))
    _write_manifest(_manifest_path(args.out), "ablate", args,
                    {"train_n": int(len(y_train)), "test_n": int(len(y_test))}, t0)
    print(format_report_pretty(rows), end="")
    return 0


def cmd_pipeline(args):
    t0 = time.perf_counter()
    os.makedirs(args.out, exist_ok=True)
    g = load_edges(args.edges)
    cascades = load_cascades(args.cascades)
    stats = {}
    instances = extract_instances(g, cascades, stats)
    write_instances_tsv(instances, os.path.join(args.out, "instances.tsv"))

    records = [r for c in cascades for r in compute_exposures(g, c)]
    write_exposure_stats_tsv(exposure_distribution(records),
                             os.path.join(args.out, "exposure_stats.tsv"))

    train_inst, test_inst = temporal_split(instances, args.boundary)
    history = build_history_index(cascades)
    X_train, y_train = featurize_instances(train_inst, g, cascades, history, args.tz_offset)
    X_test, y_test = featurize_instances(test_inst, g, cascades, history, args.tz_offset)
    write_features_tsv(X_train, y_train, os.path.join(args.out, "features_train.tsv"))
    write_features_tsv(X_test, y_test, os.path.join(args.out, "features_test.tsv"))

    grouping = GROUPINGS[args.grouping]
    model, train_report = fit(X_train, y_train, l2=args.l2, tol=args.tol,
                              max_iter=args.max_iter, grouping=grouping)
    model.save(os.path.join(args.out, "model.json"))

    report = evaluate(model, X_test, y_test, threshold=args.threshold)
    with open(os.path.join(args.out, "eval_report.tsv"), "w", encoding="utf-8") as fh:
        fh.write("metric\tvalue\n")
        for name in ("tp", "fp", "fn", "tn", "n"):
            fh.write(f"{name}\t{getattr(report, name)}\n")
        for name in ("precision", "recall", "f1"):
            fh.write(f"{name}\t{_fmt_metric(getattr(report, name))}\n")

    rows = run_ablation((X_train, y_train), (X_test, y_test), grouping,
                        l2=args.l2, tol=args.tol, max_iter=args.max_iter,
                        threshold=args.threshold, seed=args.seed)
    with open(os.path.join(args.out, "ablation.tsv"), "w", encoding="utf-8") as fh:
        fh.write(format_report_tsv(rows))

    counts = {
        "cascades": len(cascades),
        "instances": len(instances),
        "train_instances": len(train_inst),
        "test_instances": len(test_inst),
        "dropped_parent_mismatch": stats["dropped_parent_mismatch"],
        "train_log_likelihood": train_report.final_log_likelihood,
    }
    _write_manifest(os.path.join(args.out, "run_manifest.json"), "pipeline", args,
                    counts, t0, args.seed)
    print(format_report_pretty(rows), end="")
    print(f"pipeline outputs in {args.out}")
    return 0


def _add_synth_flags(p):
    p.add_argument("--config", help="TOML file with synth parameters")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-users", type=int, default=None)
    p.add_argument("--graph-model", choices=("uniform", "preferential"), default=None)
    p.add_argument("--edge-prob", type=float, default=None)
    p.add_argument("--out-degree", type=int, default=None)
    p.add_argument("--n-cascades", type=int, default=None)
    p.add_argument("--forward-prob", type=float, default=None)
    p.add_argument("--max-events", type=int, default=None)


def _add_fit_flags(p):
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--grouping", choices=sorted(GROUPINGS), default="table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwchoice",
        description="Forwarding-source choice prediction pipeline",
    )
    parser.add_argument("--version", action="version", version=f"fwchoice {__version__}")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for module-internal parallelism")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth-graph", help="generate a random follow graph")
    _add_synth_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_graph)

    p = sub.add_parser("synth-cascades", help="simulate forwarding cascades over a graph")
    _add_synth_flags(p)
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_cascades)

    p = sub.add_parser("synth-instances", help="sample labeled feature vectors directly")
    _add_synth_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_instances)

    p = sub.add_parser("exposure-stats", help="exposure-count histogram W(k)")
    p.add_argument("--edges", required=True)
    p.add_argument("--cascades", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exposure_stats)

    p = sub.add_parser("extract", help="extract two-exposure choice instances")
    p.add_argument("--edges", required=True)
    p.add_argument("--cascades", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("featurize", help="extract and featurize choice instances")
    p.add_argument("--edges", required=True)
    p.add_argument("--cascades", required=True)
    p.add_argument("--tz-offset", type=float, default=8.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit the choice model on a feature file")
    p.add_argument("--features", required=True)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="leave-one-group-out ablation")
    p.add_argument("--train-features", required=True)
    p.add_argument("--test-features", required=True)
    _add_fit_flags(p)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pipeline", help="extract, featurize, split, train, evaluate, ablate")
    p.add_argument("--edges", required=True)
    p.add_argument("--cascades", required=True)
    p.add_argument("--boundary", type=int, required=True,
                   help="epoch-seconds train/test split on cascade root time")
    p.add_argument("--tz-offset", type=float, default=8.0)
    p.add_argument("--threshold", type=float, default=0.5)
    _add_fit_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"fwchoice: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
