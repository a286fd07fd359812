"""Counterfactual explanations that integrate the user's prior knowledge of features."""

from .core import (
    ActionabilityKnowledge,
    CounterfactualResult,
    Instance,
    KnowledgeSet,
    Status,
    displacement,
)
from .framework import (
    CostSpec,
    FeatureSetExplanation,
    Incompatibility,
    Maximum,
    Minimum,
    WeightedSum,
    aggregate,
    cost,
    evaluate,
    incompat_actionability,
    incompat_feature_overlap,
    incompat_masked,
    penalty_sq_euclid,
)
from .search import Query, SearchConfig, growing_spheres, kice, user_restricted_search

__version__ = "0.1.0"

__all__ = [
    "ActionabilityKnowledge",
    "CostSpec",
    "CounterfactualResult",
    "FeatureSetExplanation",
    "Incompatibility",
    "Instance",
    "KnowledgeSet",
    "Maximum",
    "Minimum",
    "Query",
    "SearchConfig",
    "Status",
    "WeightedSum",
    "aggregate",
    "cost",
    "displacement",
    "evaluate",
    "growing_spheres",
    "incompat_actionability",
    "incompat_feature_overlap",
    "incompat_masked",
    "kice",
    "penalty_sq_euclid",
    "user_restricted_search",
]
