"""Shared value types: instances, knowledge sets and search results."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

BIG_Z = 1e12


class DimensionError(ValueError):
    """Raised when two vectors (or a vector and a knowledge set) disagree in size."""


def as_vector(p: Any) -> np.ndarray:
    """Return the float vector behind an `Instance` or array-like."""
    if isinstance(p, Instance):
        return p.values
    return np.asarray(p, dtype=float)


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch: {a.shape[-1]} != {b.shape[-1]}")


@dataclass(frozen=True, eq=False)
class Instance:
    """A point of the (normalized) input space."""

    values: np.ndarray
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ValueError("an instance needs at least one feature")
        if not np.all(np.isfinite(v)):
            raise ValueError("instance values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != v.size:
                raise ValueError(f"{len(names)} feature names for {v.size} values")
            if len(set(names)) != len(names):
                raise ValueError("feature names must be unique")
            object.__setattr__(self, "feature_names", names)

    @property
    def d(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and self.feature_names == other.feature_names
        )

    def __hash__(self) -> int:
        return hash((self.values.tobytes(), self.feature_names))

    def to_dict(self) -> dict:
        out: dict = {"values": self.values.tolist()}
        if self.feature_names is not None:
            out["feature_names"] = list(self.feature_names)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(np.asarray(data["values"], dtype=float), data.get("feature_names"))


@dataclass(frozen=True)
class KnowledgeSet:
    """Indices of the features the user knows (E) among `dimension` features."""

    known: frozenset[int]
    dimension: int

    def __init__(self, known: Sequence[int] | frozenset[int], dimension: int):
        known = frozenset(int(i) for i in known)
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        bad = [i for i in known if not 0 <= i < dimension]
        if bad:
            raise ValueError(f"feature indices {sorted(bad)} outside [0, {dimension})")
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "dimension", int(dimension))

    @classmethod
    def empty(cls, dimension: int) -> "KnowledgeSet":
        return cls((), dimension)

    @classmethod
    def full(cls, dimension: int) -> "KnowledgeSet":
        return cls(range(dimension), dimension)

    @property
    def unknown(self) -> frozenset[int]:
        return frozenset(range(self.dimension)) - self.known

    def mask(self) -> np.ndarray:
        """Boolean mask, True on known features."""
        m = np.zeros(self.dimension, dtype=bool)
        m[sorted(self.known)] = True
        return m

    def __len__(self) -> int:
        return len(self.known)

    def to_dict(self) -> dict:
        return {"known": sorted(self.known), "dimension": self.dimension}

    @classmethod
    def from_dict(cls, data: dict) -> "KnowledgeSet":
        return cls(data["known"], data["dimension"])


def check_label(y: Any) -> int:
    y = int(y)
    if y not in (0, 1):
        raise ValueError(f"labels must be 0 or 1, got {y}")
    return y


@dataclass(frozen=True)
class ActionabilityKnowledge:
    """Allowed displacements a = e - x, as a predicate over the displacement vector."""

    allowed: Callable[[np.ndarray], bool]
    big_Z: float = BIG_Z

    @classmethod
    def anything(cls) -> "ActionabilityKnowledge":
        return cls(lambda a: True)

    @classmethod
    def non_negative(cls, features: Sequence[int]) -> "ActionabilityKnowledge":
        """Only increases are allowed on `features`."""
        idx = list(features)
        return cls(lambda a: bool(np.all(np.asarray(a)[idx] >= 0)))

    @classmethod
    def frozen(cls, features: Sequence[int]) -> "ActionabilityKnowledge":
        """`features` cannot be changed at all."""
        idx = list(features)
        return cls(lambda a: bool(np.all(np.asarray(a)[idx] == 0)))


class Status(str, enum.Enum):
    FOUND = "Found"
    NOT_FOUND = "NotFoundWithinBudget"


@dataclass(frozen=True)
class CounterfactualResult:
    """Outcome of one counterfactual search.

    For `NOT_FOUND` results `point` and the three metrics are None.
    When both labels are given, a `FOUND` result must have them differ.
    """

    point: Optional[Instance]
    penalty: Optional[float]
    incompatibility: Optional[float]
    cost: Optional[float]
    layers_explored: int
    samples_drawn: int
    status: Status
    query_label: Optional[int] = None
    point_label: Optional[int] = None
    levels: tuple[tuple[float, float], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.layers_explored < 0 or self.samples_drawn < 0:
            raise ValueError("diagnostic counters must be non-negative")
        if self.status is Status.FOUND:
            if self.point is None:
                raise ValueError("a Found result needs a point")
            for v in (self.penalty, self.incompatibility, self.cost):
                if v is None or v < 0:
                    raise ValueError("metrics of a Found result must be >= 0")
            if (
                self.query_label is not None
                and self.point_label is not None
                and self.query_label == self.point_label
            ):
                raise ValueError("counterfactual has the same label as the query")

    @property
    def found(self) -> bool:
        return self.status is Status.FOUND

    def to_dict(self) -> dict:
        return {
            "point": None if self.point is None else self.point.to_dict(),
            "penalty": self.penalty,
            "incompatibility": self.incompatibility,
            "cost": self.cost,
            "layers_explored": self.layers_explored,
            "samples_drawn": self.samples_drawn,
            "status": self.status.value,
            "query_label": self.query_label,
            "point_label": self.point_label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CounterfactualResult":
        point = data.get("point")
        return cls(
            point=None if point is None else Instance.from_dict(point),
            penalty=data.get("penalty"),
            incompatibility=data.get("incompatibility"),
            cost=data.get("cost"),
            layers_explored=int(data["layers_explored"]),
            samples_drawn=int(data["samples_drawn"]),
            status=Status(data["status"]),
            query_label=data.get("query_label"),
            point_label=data.get("point_label"),
        )


def displacement(x: Instance | Sequence[float], e: Instance | Sequence[float]) -> np.ndarray:
    """Component-wise e - x."""
    xv, ev = as_vector(x), as_vector(e)
    check_same_dim(xv, ev)
    return ev - xv
