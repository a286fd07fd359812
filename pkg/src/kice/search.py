"""Layer-growing counterfactual searches.

`kice` grows ellipsoidal layers of the weighted-sum cost around the query
until some sample falls in the opposite class, keeps the cheapest such
sample, then bisects the cost level between the last empty level and the
best hit. `growing_spheres` is the same procedure at lambda = 0, and
`user_restricted_search` runs it inside the affine subspace where only the
known features may move.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import CounterfactualResult, Instance, Status
from .framework import CostSpec, WeightedSum, evaluate
from .models import BlackBoxClassifier
from .sampler import make_rng, unit_layer_offsets


@dataclass(frozen=True)
class SearchConfig:
    """Search budget and resolution.

    ``zoom_steps > 0`` adds a local phase after the level bisection: balls
    of shrinking radius around the best hit (in the coordinates where the
    cost is a squared norm) are sampled with ``n_per_layer // 10`` points and
    any cheaper hit replaces the best one.
    """

    n_per_layer: int = 1000
    eps: float = 0.05
    nu_init: float = 0.01
    max_layers: int = 2000
    refine_steps: int = 8
    seed: int = 0
    zoom_steps: int = 30

    def __post_init__(self) -> None:
        if self.n_per_layer < 1 or self.max_layers < 1:
            raise ValueError("n_per_layer and max_layers must be >= 1")
        if self.refine_steps < 0 or self.zoom_steps < 0:
            raise ValueError("refine_steps and zoom_steps must be >= 0")
        if not (self.eps > 0 and self.nu_init > 0):
            raise ValueError("eps and nu_init must be positive")

    def with_seed(self, seed: int) -> "SearchConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Query:
    x: Instance
    classifier: BlackBoxClassifier
    spec: CostSpec

    def __post_init__(self) -> None:
        if not isinstance(self.x, Instance):
            object.__setattr__(self, "x", Instance(self.x))
        if self.spec.knowledge.dimension != self.x.d:
            raise ValueError("knowledge dimension does not match the query")
        if self.classifier.dim != self.x.d:
            raise ValueError("classifier dimension does not match the query")


def _layer_search(
    x: np.ndarray,
    classifier: BlackBoxClassifier,
    embed: Callable[[np.ndarray], np.ndarray],
    k: int,
    objective: Callable[[np.ndarray], np.ndarray],
    cfg: SearchConfig,
):
    """Core growth + bisection (+ zoom) loop.

    ``embed`` maps ``(n, k)`` offsets ``y`` to candidate points; the objective
    of a candidate must equal ``||y||^2``, so levels are radii squared.
    Returns ``(best point or None, layers, samples, levels)``.
    """
    rng = make_rng(cfg.seed)
    label = int(classifier.predict(x[None, :])[0])
    samples = 0
    levels: list[tuple[float, float]] = []

    def best_hit(y: np.ndarray):
        nonlocal samples
        pts = embed(y)
        samples += pts.shape[0]
        hit = np.flatnonzero(classifier.predict(pts) != label)
        if hit.size == 0:
            return None
        scores = objective(pts[hit])
        i = int(np.argmin(scores))
        return y[hit[i]], pts[hit[i]], float(scores[i])

    def probe(lo: float, hi: float):
        levels.append((lo, hi))
        return best_hit(unit_layer_offsets(k, np.sqrt(lo), np.sqrt(hi), cfg.n_per_layer, rng))

    lo, hi = 0.0, cfg.nu_init
    best = probe(lo, hi)
    layers = 0
    while best is None and layers < cfg.max_layers:
        lo, hi = hi, hi + cfg.eps
        layers += 1
        best = probe(lo, hi)
    if best is None:
        return None, layers, samples, tuple(levels)

    upper = best[2]
    for _ in range(cfg.refine_steps):
        mid = 0.5 * (lo + upper)
        if not np.sqrt(mid) > np.sqrt(lo):
            break
        hit = probe(lo, mid)
        if hit is None:
            lo = mid
        else:
            if hit[2] < best[2]:
                best = hit
            upper = min(best[2], mid)

    m = max(1, cfg.n_per_layer // 10)
    rho = 0.25 * np.sqrt(best[2])
    for _ in range(cfg.zoom_steps):
        if not rho > 0:
            break
        y = best[0] + unit_layer_offsets(k, 0.0, rho, m, rng)
        # only strictly cheaper candidates are worth a classifier call
        y = y[np.einsum("ij,ij->i", y, y) < best[2]]
        hit = best_hit(y) if y.shape[0] else None
        if hit is not None and hit[2] < best[2]:
            best = hit
        else:
            rho *= 0.5
    return best[1], layers, samples, tuple(levels)


def _result(q: Query, point, layers: int, samples: int, levels, spec: CostSpec) -> CounterfactualResult:
    qlabel = int(q.classifier.predict(q.x.values[None, :])[0])
    if point is None:
        return CounterfactualResult(
            None, None, None, None, layers, samples, Status.NOT_FOUND,
            query_label=qlabel, levels=levels,
        )
    p, v, c = evaluate(spec, q.x.values, point)
    e = Instance(point, q.x.feature_names)
    return CounterfactualResult(
        e, float(p), float(v), float(c), layers, samples, Status.FOUND,
        query_label=qlabel,
        point_label=int(q.classifier.predict(point[None, :])[0]),
        levels=levels,
    )


def kice(q: Query, cfg: SearchConfig) -> CounterfactualResult:
    """Minimize the weighted-sum cost over the opposite class by ellipsoidal layer growth."""
    if not isinstance(q.spec.aggregator, WeightedSum):
        raise ValueError(
            "kice needs a WeightedSum aggregator: its layers follow the weighted-sum contours"
        )
    x = q.x.values
    known = q.spec.knowledge.mask()
    scale = np.where(known, 1.0, 1.0 / np.sqrt(1.0 + q.spec.lam))
    spec = q.spec

    def embed(y: np.ndarray) -> np.ndarray:
        return x + y * scale

    def objective(pts: np.ndarray) -> np.ndarray:
        return evaluate(spec, x, pts)[2]

    point, layers, samples, levels = _layer_search(x, q.classifier, embed, x.size, objective, cfg)
    return _result(q, point, layers, samples, levels, spec)


def growing_spheres(q: Query, cfg: SearchConfig) -> CounterfactualResult:
    """Reference counterfactual: nearest opposite-class point in Euclidean distance.

    Metrics of the result are reported at lambda = 0.
    """
    return kice(replace(q, spec=q.spec.with_lambda(0.0)), cfg)


def user_restricted_search(q: Query, cfg: SearchConfig) -> CounterfactualResult:
    """Nearest opposite-class point moving only the known features.

    Metrics are reported under the query's own cost spec; the incompatibility
    is exactly zero since unknown coordinates are copied from the query.
    """
    known = np.flatnonzero(q.spec.knowledge.mask())
    if known.size == 0:
        raise ValueError("user-restricted search needs a non-empty knowledge set")
    x = q.x.values

    def embed(y: np.ndarray) -> np.ndarray:
        pts = np.repeat(x[None, :], y.shape[0], axis=0)
        pts[:, known] += y
        return pts

    def objective(pts: np.ndarray) -> np.ndarray:
        a = pts[:, known] - x[known]
        return np.sum(a * a, axis=1)

    point, layers, samples, levels = _layer_search(x, q.classifier, embed, known.size, objective, cfg)
    return _result(q, point, layers, samples, levels, q.spec)
