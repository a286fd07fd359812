"""Command line entry point: ``kice {gen-data,train,explain,experiment,report}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .datasets import DatasetError, make_half_moons
from .framework import CostSpec
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    budgeted,
    explain_instance,
    format_summary,
    prepare,
    run_experiment,
    write_outputs,
)
from .models import accuracy, extract_knowledge, load_model, save_model
from .search import SearchConfig

log = logging.getLogger("kice")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--dataset", default="half-moons",
                   help="'half-moons', a CSV file or a manifest JSON (default: half-moons)")
    g.add_argument("--label-col", help="label column of a CSV dataset")
    rule = g.add_mutually_exclusive_group()
    rule.add_argument("--threshold", type=float, help="label is 1 iff label value > THRESHOLD")
    rule.add_argument("--positive-class", help="label is 1 iff label value equals this string")
    g.add_argument("--drop", action="append", default=[], metavar="COL",
                   help="ignore a column (repeatable)")
    g.add_argument("--n-samples", type=int, default=1000, help="half-moons size")
    g.add_argument("--noise", type=float, default=0.1, help="half-moons noise std")
    g.add_argument("--seed", type=int, default=0, help="data, split and search seed")
    g.add_argument("--depth", type=int, help="knowledge tree depth (default: d // 2)")


def _add_search_args(p: argparse.ArgumentParser) -> None:
    d = SearchConfig()
    g = p.add_argument_group("search")
    g.add_argument("--lambda", dest="lam", type=float, default=4.0)
    g.add_argument("--n-per-layer", type=int, default=d.n_per_layer)
    g.add_argument("--eps", type=float, default=d.eps)
    g.add_argument("--nu-init", type=float, default=d.nu_init)
    g.add_argument("--max-layers", type=int, default=d.max_layers)
    g.add_argument("--refine-steps", type=int, default=d.refine_steps)
    g.add_argument("--zoom-steps", type=int, default=d.zoom_steps)
    g.add_argument("--max-level", type=float,
                   help="highest cost level searched (default: number of features)")


def _config(args) -> ExperimentConfig:
    rule = None
    if getattr(args, "threshold", None) is not None:
        rule = f"> {args.threshold}"
    elif getattr(args, "positive_class", None) is not None:
        rule = args.positive_class
    search = SearchConfig(
        n_per_layer=getattr(args, "n_per_layer", 1000),
        eps=getattr(args, "eps", 0.05),
        nu_init=getattr(args, "nu_init", 0.01),
        max_layers=getattr(args, "max_layers", 2000),
        refine_steps=getattr(args, "refine_steps", 8),
        zoom_steps=getattr(args, "zoom_steps", SearchConfig().zoom_steps),
        seed=args.seed,
    )
    return ExperimentConfig(
        dataset=args.dataset,
        label_column=args.label_col,
        positive_rule=rule,
        drop_columns=tuple(args.drop),
        n_samples=args.n_samples,
        noise=args.noise,
        data_seed=args.seed,
        split_seed=args.seed,
        depth=args.depth,
        lam=getattr(args, "lam", 4.0),
        search=search,
        max_level=getattr(args, "max_level", None),
        max_instances=getattr(args, "max_instances", None),
        workers=getattr(args, "workers", 1),
    )


def cmd_gen_data(args) -> int:
    ds = make_half_moons(args.n_samples, args.noise, args.seed)
    ds.to_csv(args.out, label_column="label")
    print(f"wrote {len(ds)} rows to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    prep = prepare(cfg)
    out = Path(args.out) / "models"
    out.mkdir(parents=True, exist_ok=True)
    save_model(prep.classifier, out / "classifier.json")
    save_model(prep.tree, out / "tree.json")
    (out / "normalization.json").write_text(json.dumps(prep.train.normalization.to_dict()))
    print(f"classifier: gamma={prep.classifier.gamma} reg={prep.classifier.regularization} "
          f"test accuracy {accuracy(prep.classifier, prep.test.X, prep.test.y):.3f}")
    print(f"tree: depth {prep.tree.max_depth}, test accuracy {accuracy(prep.tree, prep.test.X, prep.test.y):.3f}")
    print(f"E = {sorted(prep.knowledge.known)} "
          f"({', '.join(prep.train.feature_names[i] for i in sorted(prep.knowledge.known))})")
    print(f"models saved to {out}")
    return 0


def _fmt(v) -> str:
    return " ".join(f"{c:.4f}" for c in v)


def cmd_explain(args) -> int:
    cfg = _config(args)
    prep = prepare(cfg)
    if args.models:
        models = Path(args.models)
        if (models / "models").is_dir():
            models = models / "models"
        prep = replace(
            prep,
            classifier=load_model(models / "classifier.json"),
            tree=load_model(models / "tree.json"),
        )
        prep = replace(prep, knowledge=extract_knowledge(prep.tree))
    test = prep.test
    if not 0 <= args.index < len(test):
        raise IndexError(f"--index must be in [0, {len(test)})")
    x = test.instance(args.index)
    spec = CostSpec.kice(prep.knowledge, cfg.lam)
    level = cfg.max_level if cfg.max_level is not None else float(test.d)
    search = budgeted(cfg.search, level).with_seed(cfg.search.seed ^ args.index)
    results = explain_instance(x, prep.classifier, spec, search)
    print(f"x[{args.index}] = {_fmt(x.values)}  predicted {int(prep.classifier.predict(x.values[None])[0])}")
    print(f"E = {sorted(prep.knowledge.known)}, lambda = {cfg.lam}")
    for name, r in results.items():
        if r.found:
            print(f"{name:7s} {_fmt(r.point.values)}  penalty {r.penalty:.4f}  "
                  f"incompatibility {r.incompatibility:.4f}  cost {r.cost:.4f}  "
                  f"(layers {r.layers_explored}, samples {r.samples_drawn})")
        else:
            print(f"{name:7s} not found within budget (layers {r.layers_explored})")
    if args.plot_data or args.figure:
        if test.d != 2:
            raise ValueError("plot output is only available for 2-D data")
        points = {"x": x.values, **{m: (r.point.values if r.found else None) for m, r in results.items()}}
        if args.plot_data:
            write_plot_data(prep, points, args.plot_data)
            print(f"plot data written to {args.plot_data}")
        if args.figure:
            from .plotting import plot_examples

            plot_examples(prep.classifier, prep.train, [points], args.figure, prep.tree)
            print(f"figure written to {args.figure}")
    return 0


def write_plot_data(prep, points: dict, path, grid: int = 60) -> None:
    """Decision grid, training points, and x with its counterfactuals, as one long CSV."""
    X = prep.train.X
    lo, hi = X.min(axis=0) - 0.1, X.max(axis=0) + 0.1
    g0, g1 = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
    G = np.column_stack([g0.ravel(), g1.ravel()])
    labels = prep.classifier.predict(G)
    names = prep.train.feature_names
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", names[0], names[1], "label"])
        for p, lab in zip(G, labels):
            w.writerow(["grid", p[0], p[1], int(lab)])
        for p, lab in zip(X, prep.train.y):
            w.writerow(["train", p[0], p[1], int(lab)])
        for f, t in zip(prep.tree.feature, prep.tree.threshold):
            if f >= 0:
                w.writerow([f"rule_{names[f]}", t if f == 0 else "", t if f == 1 else "", ""])
        for kind, v in points.items():
            if v is not None:
                w.writerow([kind, v[0], v[1], int(prep.classifier.predict(np.asarray(v)[None])[0])])


def cmd_experiment(args) -> int:
    cfg = _config(args)
    report = run_experiment(cfg, out_dir=args.out, figures=not args.no_figures)
    print(format_summary(report, args.tol))
    print(f"outputs written to {args.out} ({report.elapsed_s:.1f}s)")
    return 0


def cmd_report(args) -> int:
    src = Path(args.source)
    path = src / "report.json" if src.is_dir() else src
    report = ExperimentReport.load(path)
    out = Path(args.out) if args.out else path.parent
    write_outputs(report, out, figures=not args.no_figures)
    print(format_summary(report, args.tol))
    print(f"outputs written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kice", description="Knowledge-integrated counterfactual explanations."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a half-moons dataset to CSV")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV file to write")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train classifier and knowledge tree, save models")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="output directory (models/ is created inside)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="explain one test instance with e_ref, e_user and e*")
    _add_data_args(p)
    _add_search_args(p)
    p.add_argument("--index", type=int, default=0, help="test-set row to explain")
    p.add_argument("--models", help="directory with classifier.json and tree.json to use")
    p.add_argument("--plot-data", help="CSV with decision grid and points (2-D data only)")
    p.add_argument("--figure", help="PNG of the decision regions and points (2-D data only)")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("experiment", help="run the full protocol over the test set")
    _add_data_args(p)
    _add_search_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-instances", type=int, help="explain only the first N test rows")
    p.add_argument("--workers", type=int, default=1, help="threads for per-instance searches")
    p.add_argument("--tol", type=float, default=0.02, help="relative slack for orderings/dominance")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="recompute statistics and outputs from a saved report.json")
    p.add_argument("--from", dest="source", required=True, help="report.json or its directory")
    p.add_argument("--out", help="output directory (default: next to report.json)")
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DatasetError, ValueError, FileNotFoundError, IndexError, KeyError) as exc:
        print(f"kice {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
