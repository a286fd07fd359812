"""End-to-end experiment: train the black box and the knowledge tree, explain the
test set with the three searches and summarize the results.

Outputs written by `write_outputs`::

    report.json   full report, per-instance records included
    metrics.csv   mean/std of penalty, incompatibility and cost per method
    scatter.csv   per-instance costs of the three counterfactuals
    models/       classifier.json and tree.json
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import CounterfactualResult, Instance, KnowledgeSet, Status
from .datasets import Dataset, Manifest, SplitSpec, load_csv, make_half_moons, normalize, split
from .framework import CostSpec, evaluate
from .models import (
    DecisionTree,
    KernelClassifier,
    accuracy,
    extract_knowledge,
    save_model,
    train_kernel_classifier,
    train_tree,
)
from .search import Query, SearchConfig, growing_spheres, kice, user_restricted_search

log = logging.getLogger(__name__)

METHODS = ("e_ref", "e_user", "e_star")
METRICS = ("penalty", "incompatibility", "cost")
GAMMA_GRID = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
REG_GRID = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class ExperimentConfig:
    """One run of the protocol.

    ``dataset`` is ``"half-moons"``, a CSV path or a manifest JSON path.
    ``depth=None`` uses half the number of features (at least 1). A manifest's
    ``seed`` replaces ``split_seed``.
    ``max_level`` caps the cost level the searches may reach; None means d,
    the squared diagonal of the normalized data cube.
    """

    dataset: str = "half-moons"
    label_column: Optional[str] = None
    positive_rule: Optional[str] = None
    drop_columns: tuple[str, ...] = ()
    n_samples: int = 1000
    noise: float = 0.1
    data_seed: int = 0
    split_seed: int = 0
    train_fraction: float = 0.8
    gamma_grid: tuple[float, ...] = GAMMA_GRID
    reg_grid: tuple[float, ...] = REG_GRID
    depth: Optional[int] = None
    lam: float = 4.0
    search: SearchConfig = field(default_factory=SearchConfig)
    max_level: Optional[float] = None
    max_instances: Optional[int] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be finite and >= 0")
        if self.dataset != "half-moons" and not Path(self.dataset).exists():
            raise FileNotFoundError(f"dataset file {self.dataset} does not exist")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["search"] = asdict(self.search)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data["search"] = SearchConfig(**data.get("search", {}))
        for key in ("drop_columns", "gamma_grid", "reg_grid"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset == "half-moons":
        return make_half_moons(cfg.n_samples, cfg.noise, cfg.data_seed)
    if cfg.dataset.endswith(".json"):
        return Manifest.read(cfg.dataset).load()
    if cfg.label_column is None or cfg.positive_rule is None:
        raise ValueError("CSV datasets need a label column and a positive-class rule")
    return load_csv(cfg.dataset, cfg.label_column, cfg.positive_rule, cfg.drop_columns)


def select_kernel_classifier(
    train: Dataset,
    gammas: Sequence[float] = GAMMA_GRID,
    regs: Sequence[float] = REG_GRID,
    seed: int = 0,
) -> tuple[KernelClassifier, dict]:
    """Grid search on an 80/20 validation split of ``train``, then refit on all of it.

    Points are ranked by validation accuracy, then by validation squared
    error of the decision value against the +/-1 targets; remaining ties keep
    the first grid point in (gamma, reg) order.
    """
    fit, val = split(train, SplitSpec(0.8, seed))
    if len(np.unique(fit.y)) < 2:
        raise ValueError("validation split left a single class in the fitting set")
    t = 2.0 * val.y - 1.0
    best, scores = None, {}
    for g in gammas:
        for r in regs:
            m = train_kernel_classifier(fit.X, fit.y, g, r)
            dec = m.decision_function(val.X)
            acc = float(np.mean((dec > 0).astype(int) == val.y))
            mse = float(np.mean((dec - t) ** 2))
            scores[f"gamma={g},reg={r}"] = {"accuracy": acc, "mse": mse}
            if best is None or (acc, -mse) > (best[0], -best[1]):
                best = (acc, mse, g, r)
    acc, mse, g, r = best
    model = train_kernel_classifier(train.X, train.y, g, r)
    return model, {
        "gamma": g, "regularization": r,
        "validation_accuracy": acc, "validation_mse": mse, "grid": scores,
    }


def default_depth(d: int) -> int:
    return max(1, d // 2)


def budgeted(search: SearchConfig, max_level: float) -> SearchConfig:
    """Lower ``max_layers`` so that no layer starts beyond ``max_level``."""
    layers = max(1, int(np.ceil((max_level - search.nu_init) / search.eps)))
    return replace(search, max_layers=min(search.max_layers, layers))


@dataclass
class InstanceRecord:
    instance_id: int
    x: Instance
    label: int
    seed: int
    results: dict[str, CounterfactualResult]

    def all_found(self, methods: Sequence[str] = METHODS) -> bool:
        return all(self.results[m].found for m in methods)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "x": self.x.to_dict(),
            "label": self.label,
            "seed": self.seed,
            "results": {m: r.to_dict() for m, r in self.results.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceRecord":
        return cls(
            instance_id=int(data["instance_id"]),
            x=Instance.from_dict(data["x"]),
            label=int(data["label"]),
            seed=int(data["seed"]),
            results={m: CounterfactualResult.from_dict(r) for m, r in data["results"].items()},
        )


def rescore(result: CounterfactualResult, spec: CostSpec, x: Instance) -> CounterfactualResult:
    """Re-express a result's metrics under another cost spec."""
    if not result.found:
        return result
    p, v, c = evaluate(spec, x.values, result.point.values)
    return replace(result, penalty=float(p), incompatibility=float(v), cost=float(c))


def explain_instance(
    x: Instance,
    classifier,
    spec: CostSpec,
    cfg: SearchConfig,
) -> dict[str, CounterfactualResult]:
    """Run the three searches with one seed; all metrics are under ``spec``."""
    q = Query(x, classifier, spec)
    ref = rescore(growing_spheres(q, cfg), spec, x)
    if len(spec.knowledge) > 0:
        user = user_restricted_search(q, cfg)
    else:
        user = CounterfactualResult(None, None, None, None, 0, 0, Status.NOT_FOUND)
    star = kice(q, cfg)
    return {"e_ref": ref, "e_user": user, "e_star": star}


def summarize(records: Sequence[InstanceRecord]) -> dict:
    """Mean/std per method and metric over instances where every method succeeded."""
    joint = [r for r in records if r.all_found()]
    stats: dict = {}
    for m in METHODS:
        stats[m] = {}
        for k in METRICS:
            vals = np.array([getattr(r.results[m], k) for r in joint], dtype=float)
            stats[m][k] = {
                "mean": float(vals.mean()) if vals.size else float("nan"),
                "std": float(vals.std()) if vals.size else float("nan"),
            }
    n = len(records)
    stats["n_instances"] = n
    stats["n_joint"] = len(joint)
    stats["user_failure_fraction"] = (
        sum(not r.results["e_user"].found for r in records) / n if n else 0.0
    )
    return stats


def ordering_checks(stats: dict, tol_rel: float = 0.02) -> dict[str, bool]:
    """Orderings of the three methods' mean metrics, each with relative slack."""

    def mean(m, k):
        return stats[m][k]["mean"]

    def le(a, b):
        return a <= b * (1.0 + tol_rel) + 1e-12

    return {
        "penalty: e_ref <= e_star": le(mean("e_ref", "penalty"), mean("e_star", "penalty")),
        "penalty: e_star <= e_user": le(mean("e_star", "penalty"), mean("e_user", "penalty")),
        "incompatibility: e_user == 0": mean("e_user", "incompatibility") == 0.0,
        "incompatibility: e_user <= e_star": le(
            mean("e_user", "incompatibility"), mean("e_star", "incompatibility")
        ),
        "incompatibility: e_star <= e_ref": le(
            mean("e_star", "incompatibility"), mean("e_ref", "incompatibility")
        ),
        "cost: e_star < e_ref": mean("e_star", "cost") < mean("e_ref", "cost"),
        "cost: e_star < e_user": mean("e_star", "cost") < mean("e_user", "cost"),
    }


@dataclass
class ExperimentReport:
    dataset: str
    config: dict
    feature_names: tuple[str, ...]
    knowledge: KnowledgeSet
    classifier_accuracy: float
    tree_accuracy: float
    classifier_params: dict
    tree_depth: int
    normalization: dict
    records: list[InstanceRecord]
    elapsed_s: float = 0.0

    @property
    def spec(self) -> CostSpec:
        return CostSpec.kice(self.knowledge, self.config["lam"])

    @property
    def stats(self) -> dict:
        return summarize(self.records)

    @property
    def user_failure_fraction(self) -> float:
        return self.stats["user_failure_fraction"]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "config": self.config,
            "feature_names": list(self.feature_names),
            "knowledge": self.knowledge.to_dict(),
            "classifier_accuracy": self.classifier_accuracy,
            "tree_accuracy": self.tree_accuracy,
            "classifier_params": self.classifier_params,
            "tree_depth": self.tree_depth,
            "normalization": self.normalization,
            "statistics": self.stats,
            "dominance": {
                "e_ref": dominance_check(self, 0.02, against=("e_ref",)),
                "e_user": dominance_check(self, 0.02, against=("e_user",)),
                "both": dominance_check(self, 0.02),
            },
            "elapsed_s": self.elapsed_s,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(
            dataset=data["dataset"],
            config=data["config"],
            feature_names=tuple(data["feature_names"]),
            knowledge=KnowledgeSet.from_dict(data["knowledge"]),
            classifier_accuracy=float(data["classifier_accuracy"]),
            tree_accuracy=float(data["tree_accuracy"]),
            classifier_params=data["classifier_params"],
            tree_depth=int(data["tree_depth"]),
            normalization=data["normalization"],
            records=[InstanceRecord.from_dict(r) for r in data["records"]],
            elapsed_s=float(data.get("elapsed_s", 0.0)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def dominance_check(
    report: ExperimentReport,
    tol_rel: float = 0.02,
    against: Sequence[str] = ("e_ref", "e_user"),
) -> float:
    """Fraction of jointly successful instances where e* costs no more than the others.

    An empty joint-success set gives 1.0.
    """
    joint = [r for r in report.records if r.all_found(("e_star", *against))]
    if not joint:
        return 1.0
    ok = 0
    for r in joint:
        c = r.results["e_star"].cost
        if all(c <= r.results[m].cost * (1.0 + tol_rel) for m in against):
            ok += 1
    return ok / len(joint)


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset
    classifier: KernelClassifier
    classifier_params: dict
    tree: DecisionTree
    knowledge: KnowledgeSet


def prepare(cfg: ExperimentConfig) -> PreparedData:
    """Load, split, normalize, and train the classifier and the knowledge tree."""
    data = load_dataset(cfg)
    split_seed = cfg.split_seed
    if cfg.dataset.endswith(".json"):
        split_seed = Manifest.read(cfg.dataset).seed
    train, test = split(data, SplitSpec(cfg.train_fraction, split_seed))
    train, test = normalize(train, test)
    clf, params = select_kernel_classifier(train, cfg.gamma_grid, cfg.reg_grid, split_seed + 1)
    depth = cfg.depth if cfg.depth is not None else default_depth(train.d)
    tree = train_tree(train.X, train.y, depth)
    return PreparedData(train, test, clf, params, tree, extract_knowledge(tree))


def run_experiment(cfg: ExperimentConfig, out_dir=None, figures: bool = True) -> ExperimentReport:
    """Run the full protocol; writes outputs when ``out_dir`` is given."""
    t0 = time.perf_counter()
    prep = prepare(cfg)
    test = prep.test
    spec = CostSpec.kice(prep.knowledge, cfg.lam)
    log.info(
        "%s: accuracy %.3f, E = %s", cfg.dataset,
        accuracy(prep.classifier, test.X, test.y), sorted(prep.knowledge.known),
    )
    n = len(test) if cfg.max_instances is None else min(cfg.max_instances, len(test))
    search = budgeted(cfg.search, cfg.max_level if cfg.max_level is not None else float(test.d))

    def one(i: int) -> InstanceRecord:
        seed = search.seed ^ i
        x = test.instance(i)
        res = explain_instance(x, prep.classifier, spec, search.with_seed(seed))
        return InstanceRecord(i, x, int(prep.classifier.predict(x.values[None, :])[0]), seed, res)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(one, range(n)))
    else:
        records = [one(i) for i in range(n)]

    norm = prep.train.normalization
    report = ExperimentReport(
        dataset=test.name,
        config={**cfg.to_dict(), "effective_search": asdict(search)},
        feature_names=test.feature_names,
        knowledge=prep.knowledge,
        classifier_accuracy=accuracy(prep.classifier, test.X, test.y),
        tree_accuracy=accuracy(prep.tree, test.X, test.y),
        classifier_params={k: v for k, v in prep.classifier_params.items()},
        tree_depth=prep.tree.max_depth,
        normalization={"method": "min-max", **(norm.to_dict() if norm else {})},
        records=records,
        elapsed_s=time.perf_counter() - t0,
    )
    if out_dir is not None:
        out = Path(out_dir)
        (out / "models").mkdir(parents=True, exist_ok=True)
        save_model(prep.classifier, out / "models" / "classifier.json")
        save_model(prep.tree, out / "models" / "tree.json")
        write_outputs(report, out, figures=figures, prepared=prep)
    return report


def write_metrics_csv(report: ExperimentReport, path) -> None:
    stats = report.stats
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["dataset", "method", "penalty_mean", "penalty_std", "incompat_mean",
             "incompat_std", "cost_mean", "cost_std"]
        )
        for m in METHODS:
            s = stats[m]
            w.writerow(
                [report.dataset, m,
                 s["penalty"]["mean"], s["penalty"]["std"],
                 s["incompatibility"]["mean"], s["incompatibility"]["std"],
                 s["cost"]["mean"], s["cost"]["std"]]
            )


def write_scatter_csv(report: ExperimentReport, path) -> None:
    """One row per instance where both e_ref and e* exist; cost_user empty when e_user failed."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance_id", "cost_ref", "cost_user", "cost_kice", "status_user"])
        for r in report.records:
            ref, user, star = (r.results[m] for m in METHODS)
            if not (ref.found and star.found):
                continue
            w.writerow(
                [r.instance_id, ref.cost, "" if user.cost is None else user.cost,
                 star.cost, user.status.value]
            )


def write_outputs(report: ExperimentReport, out_dir, figures: bool = True, prepared=None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1))
    write_metrics_csv(report, out / "metrics.csv")
    write_scatter_csv(report, out / "scatter.csv")
    written = [out / "report.json", out / "metrics.csv", out / "scatter.csv"]
    if figures:
        from . import plotting

        written += plotting.render_report(report, out, prepared)
    return written


def format_summary(report: ExperimentReport, tol_rel: float = 0.02) -> str:
    """Human-readable Table-1 style summary plus dominance and failure figures."""
    stats = report.stats
    lines = [
        f"dataset {report.dataset}: classifier accuracy {report.classifier_accuracy:.3f}, "
        f"E = {sorted(report.knowledge.known)} (tree depth {report.tree_depth}), "
        f"lambda = {report.config['lam']}",
        f"{'method':8s} {'penalty':>18s} {'incompatibility':>18s} {'cost':>18s}",
    ]
    for m in METHODS:
        s = stats[m]
        cells = [f"{s[k]['mean']:.3f} +/- {s[k]['std']:.3f}" for k in METRICS]
        lines.append(f"{m:8s} " + " ".join(f"{c:>18s}" for c in cells))
    lines.append(
        f"joint successes {stats['n_joint']}/{stats['n_instances']}, "
        f"e_user failure fraction {stats['user_failure_fraction']:.3f}"
    )
    lines.append(
        f"dominance (tol {tol_rel:g}): vs e_ref {dominance_check(report, tol_rel, ('e_ref',)):.3f}, "
        f"vs e_user {dominance_check(report, tol_rel, ('e_user',)):.3f}, "
        f"both {dominance_check(report, tol_rel):.3f}"
    )
    for name, ok in ordering_checks(stats, tol_rel).items():
        lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}")
    return "\n".join(lines)
