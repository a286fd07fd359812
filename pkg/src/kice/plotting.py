"""Figures written next to the CSV outputs of an experiment."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MARKERS = {
    "x": dict(marker="P", color="black", s=90, label="x"),
    "e_ref": dict(marker="^", color="tab:orange", s=70, label="e_ref"),
    "e_user": dict(marker="s", color="tab:purple", s=60, label="e_user"),
    "e_star": dict(marker="o", color="darkgreen", s=60, label="e*"),
}
DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_dominance(report, path) -> Path:
    """cost(e*) against cost(e_ref) and cost(e_user); points above y = x favour e*."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    for ax, other in zip(axes, ("e_ref", "e_user")):
        pts = np.array(
            [
                (r.results["e_star"].cost, r.results[other].cost)
                for r in report.records
                if r.results["e_star"].found and r.results[other].found
            ]
        ).reshape(-1, 2)
        ax.scatter(pts[:, 0], pts[:, 1], s=12, alpha=0.7)
        hi = float(pts.max()) * 1.05 if pts.size else 1.0
        ax.plot([0, hi], [0, hi], "k--", lw=1)
        ax.set_xlim(0, hi)
        ax.set_ylim(0, hi)
        ax.set_xlabel("cost(e*)")
        ax.set_ylabel(f"cost({other})")
        ax.set_title(f"e* vs {other} (n={len(pts)})")
    return _save(fig, Path(path))


def plot_metrics(report, path) -> Path:
    """Grouped bars of mean penalty, incompatibility and cost per method, std as error bars."""
    from .harness import METHODS, METRICS

    stats = report.stats
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.25
    xs = np.arange(len(METRICS))
    for k, m in enumerate(METHODS):
        means = [stats[m][q]["mean"] for q in METRICS]
        stds = [stats[m][q]["std"] for q in METRICS]
        ax.bar(xs + (k - 1) * width, means, width, yerr=stds, capsize=3,
               label=m, color=MARKERS[m]["color"])
    ax.set_xticks(xs)
    ax.set_xticklabels(METRICS)
    ax.set_title(f"{report.dataset}, lambda={report.config['lam']}")
    ax.legend()
    return _save(fig, Path(path))


def plot_examples(
    classifier,
    train,
    points: Sequence[dict],
    path,
    tree=None,
    grid: int = 200,
) -> Path:
    """Decision regions of a 2-D classifier with x and its counterfactuals, one panel per entry.

    Each entry of ``points`` maps "x", "e_ref", "e_user", "e_star" to a
    2-vector or None. Split thresholds of ``tree`` (the user's rule) are
    drawn as brown lines.
    """
    X = train.X
    lo, hi = X.min(axis=0) - 0.1, X.max(axis=0) + 0.1
    for p in points:
        for v in p.values():
            if v is not None:
                lo = np.minimum(lo, np.asarray(v) - 0.05)
                hi = np.maximum(hi, np.asarray(v) + 0.05)
    g0, g1 = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
    labels = classifier.predict(np.column_stack([g0.ravel(), g1.ravel()])).reshape(g0.shape)
    fig, axes = plt.subplots(1, len(points), figsize=(4.2 * len(points), 4), squeeze=False)
    for ax, p in zip(axes[0], points):
        ax.contourf(g0, g1, labels, levels=[-0.5, 0.5, 1.5], colors=["#9ecae1", "#fcbba1"], alpha=0.6)
        ax.contour(g0, g1, labels, levels=[0.5], colors="white", linewidths=1.5)
        ax.scatter(X[:, 0], X[:, 1], c=np.where(train.y == 1, "darkred", "navy"), s=4, alpha=0.4)
        if tree is not None:
            for f, t in zip(tree.feature, tree.threshold):
                if f == 0:
                    ax.axvline(t, color="saddlebrown", lw=1.2)
                elif f == 1:
                    ax.axhline(t, color="saddlebrown", lw=1.2)
        for key, style in MARKERS.items():
            v = p.get(key)
            if v is not None:
                ax.scatter([v[0]], [v[1]], edgecolors="white", linewidths=0.8, zorder=3, **style)
        ax.set_xlabel(train.feature_names[0])
        ax.set_ylabel(train.feature_names[1])
    axes[0][0].legend(loc="lower left", fontsize=8)
    return _save(fig, Path(path))


def _record_points(record) -> dict:
    out = {"x": record.x.values}
    for m, res in record.results.items():
        out[m] = None if res.point is None else res.point.values
    return out


def render_report(report, out_dir, prepared=None, n_examples: int = 3) -> list[Path]:
    """Write dominance.png and metrics.png; examples.png too for 2-D data with models at hand."""
    out = Path(out_dir)
    written = [plot_dominance(report, out / "dominance.png"), plot_metrics(report, out / "metrics.png")]
    if prepared is not None and prepared.train.d == 2 and report.records:
        # one instance with all three, one where e_user failed, when available
        chosen = [r for r in report.records if r.all_found()][: n_examples - 1]
        chosen += [r for r in report.records if not r.results["e_user"].found][:1]
        chosen = chosen[:n_examples] or report.records[:n_examples]
        written.append(
            plot_examples(
                prepared.classifier, prepared.train, [_record_points(r) for r in chosen],
                out / "examples.png", prepared.tree,
            )
        )
    return written
