"""Penalty, incompatibility and aggregation functions and their composition into a cost.

All instance-level functions broadcast over leading axes, so a batch of
candidates of shape ``(n, d)`` can be scored against one query in one call.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    ActionabilityKnowledge,
    KnowledgeSet,
    DimensionError,
    as_vector,
    check_same_dim,
    displacement,
)


class Penalty(str, enum.Enum):
    SQUARED_EUCLIDEAN = "squared_euclidean"


class Incompatibility(str, enum.Enum):
    MASKED_SQUARED_EUCLIDEAN = "masked_squared_euclidean"
    FEATURE_OVERLAP_WITH_UNKNOWN = "feature_overlap_with_unknown"
    FEATURE_OVERLAP_WITH_KNOWN = "feature_overlap_with_known"
    ACTIONABILITY_INDICATOR = "actionability_indicator"


# --- aggregators -----------------------------------------------------------


@dataclass(frozen=True)
class WeightedSum:
    lam: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")

    def __call__(self, u, v):
        return u + self.lam * v


@dataclass(frozen=True)
class Minimum:
    def __call__(self, u, v):
        return np.minimum(u, v)


@dataclass(frozen=True)
class Maximum:
    def __call__(self, u, v):
        return np.maximum(u, v)


Aggregator = Union[WeightedSum, Minimum, Maximum]


def aggregate(agg: Aggregator, u, v):
    return agg(u, v)


# --- penalty / incompatibility ---------------------------------------------


def penalty_sq_euclid(x, e):
    """Squared Euclidean distance between the query and the candidate(s)."""
    a = displacement(x, e)
    return np.sum(a * a, axis=-1)


def _check_knowledge(E: KnowledgeSet, d: int) -> None:
    if E.dimension != d:
        raise DimensionError(f"knowledge set has dimension {E.dimension}, instance has {d}")


def incompat_masked(x, e, E: KnowledgeSet):
    """Squared displacement restricted to the features outside E."""
    a = displacement(x, e)
    _check_knowledge(E, a.shape[-1])
    a = a[..., ~E.mask()]
    return np.sum(a * a, axis=-1)


@dataclass(frozen=True)
class FeatureSetExplanation:
    """Features used by a surrogate explanation."""

    used_features: frozenset[int]

    def __init__(self, used_features: Sequence[int]):
        object.__setattr__(self, "used_features", frozenset(int(i) for i in used_features))


def incompat_feature_overlap(expl: FeatureSetExplanation, E: KnowledgeSet, mode: str) -> int:
    """Count explanation features outside E (``"with_unknown"``) or inside E (``"with_known"``)."""
    bad = [i for i in expl.used_features if not 0 <= i < E.dimension]
    if bad:
        raise ValueError(f"feature indices {sorted(bad)} outside [0, {E.dimension})")
    if mode in ("with_unknown", Incompatibility.FEATURE_OVERLAP_WITH_UNKNOWN):
        return len(expl.used_features & E.unknown)
    if mode in ("with_known", Incompatibility.FEATURE_OVERLAP_WITH_KNOWN):
        return len(expl.used_features & E.known)
    raise ValueError(f"unknown overlap mode {mode!r}")


def incompat_actionability(x, e, k: ActionabilityKnowledge):
    """0 when the displacement e - x is allowed, big_Z otherwise."""
    a = displacement(x, e)
    if a.ndim == 1:
        return 0.0 if k.allowed(a) else float(k.big_Z)
    flat = a.reshape(-1, a.shape[-1])
    out = np.array([0.0 if k.allowed(row) else float(k.big_Z) for row in flat])
    return out.reshape(a.shape[:-1])


# --- cost ------------------------------------------------------------------


@dataclass(frozen=True)
class CostSpec:
    """Penalty, incompatibility and aggregator bound to a knowledge set."""

    knowledge: KnowledgeSet
    aggregator: Aggregator = field(default_factory=WeightedSum)
    penalty: Penalty = Penalty.SQUARED_EUCLIDEAN
    incompatibility: Incompatibility = Incompatibility.MASKED_SQUARED_EUCLIDEAN
    actionability: Optional[ActionabilityKnowledge] = None

    def __post_init__(self) -> None:
        if (
            self.incompatibility is Incompatibility.ACTIONABILITY_INDICATOR
            and self.actionability is None
        ):
            raise ValueError("actionability incompatibility needs an ActionabilityKnowledge")

    @classmethod
    def kice(cls, knowledge: KnowledgeSet, lam: float) -> "CostSpec":
        return cls(knowledge=knowledge, aggregator=WeightedSum(lam))

    @property
    def lam(self) -> float:
        if not isinstance(self.aggregator, WeightedSum):
            raise TypeError("lambda is only defined for a weighted-sum aggregator")
        return self.aggregator.lam

    def with_lambda(self, lam: float) -> "CostSpec":
        return replace(self, aggregator=WeightedSum(lam))

    def to_dict(self) -> dict:
        agg = self.aggregator
        kind = {WeightedSum: "weighted_sum", Minimum: "min", Maximum: "max"}[type(agg)]
        return {
            "penalty": self.penalty.value,
            "incompatibility": self.incompatibility.value,
            "aggregator": kind,
            "lambda": agg.lam if isinstance(agg, WeightedSum) else None,
            "knowledge_indices": sorted(self.knowledge.known),
            "dimension": self.knowledge.dimension,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostSpec":
        kind = data.get("aggregator", "weighted_sum")
        if kind == "weighted_sum":
            agg: Aggregator = WeightedSum(float(data.get("lambda") or 0.0))
        elif kind == "min":
            agg = Minimum()
        elif kind == "max":
            agg = Maximum()
        else:
            raise ValueError(f"unknown aggregator {kind!r}")
        return cls(
            knowledge=KnowledgeSet(data["knowledge_indices"], data["dimension"]),
            aggregator=agg,
            penalty=Penalty(data.get("penalty", Penalty.SQUARED_EUCLIDEAN.value)),
            incompatibility=Incompatibility(
                data.get("incompatibility", Incompatibility.MASKED_SQUARED_EUCLIDEAN.value)
            ),
        )


def penalty(spec: CostSpec, x, e):
    if spec.penalty is Penalty.SQUARED_EUCLIDEAN:
        return penalty_sq_euclid(x, e)
    raise ValueError(f"unsupported penalty {spec.penalty}")


def incompatibility(spec: CostSpec, x, e):
    kind = spec.incompatibility
    if kind is Incompatibility.MASKED_SQUARED_EUCLIDEAN:
        return incompat_masked(x, e, spec.knowledge)
    if kind is Incompatibility.ACTIONABILITY_INDICATOR:
        check_same_dim(as_vector(x), as_vector(e))
        _check_knowledge(spec.knowledge, as_vector(x).shape[-1])
        return incompat_actionability(x, e, spec.actionability)
    # feature-overlap kinds score feature sets, not points
    raise TypeError(f"{kind.value} applies to FeatureSetExplanation, use incompat_feature_overlap")


def evaluate(spec: CostSpec, x, e) -> tuple:
    """Return ``(penalty, incompatibility, cost)`` for candidate(s) e."""
    p = penalty(spec, x, e)
    v = incompatibility(spec, x, e)
    return p, v, aggregate(spec.aggregator, p, v)


def cost(spec: CostSpec, x, e):
    return evaluate(spec, x, e)[2]
