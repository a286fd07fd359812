"""Dataset synthesis, CSV ingestion, min-max normalization and train/test splitting."""
from __future__ import annotations

import csv
import json
import operator
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import Instance
from .sampler import make_rng


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Normalization:
    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (X - self.mins) / safe
        out[:, span <= 0] = 0.0
        return out

    def invert(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) * (self.maxs - self.mins) + self.mins

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    normalization: Optional[Normalization] = None
    name: str = "dataset"

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y).astype(int).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DatasetError(f"{X.shape[0] if X.ndim == 2 else '?'} rows for {y.size} labels")
        if len(self.feature_names) != X.shape[1]:
            raise DatasetError("one feature name per column required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.y.size

    def instance(self, i: int) -> Instance:
        return Instance(self.X[i], self.feature_names)

    @property
    def rows(self) -> list[Instance]:
        return [self.instance(i) for i in range(len(self))]

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx])

    def to_csv(self, path, label_column: str = "label") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([*self.feature_names, label_column])
            for row, label in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in row] + [int(label)])


def make_half_moons(n: int, noise: float = 0.0, seed: int = 0) -> Dataset:
    """Two interleaving arcs: class 0 on the upper arc, class 1 on the lower one."""
    if n < 2:
        raise DatasetError("half-moons needs n >= 2")
    if noise < 0:
        raise DatasetError("noise must be >= 0")
    rng = make_rng(seed)
    n0 = n // 2
    n1 = n - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    X = np.vstack([upper, lower])
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    if noise > 0:
        X = X + rng.normal(scale=noise, size=X.shape)
    return Dataset(X, y, ("X0", "X1"), name="half-moons")


# --- CSV ingestion ---------------------------------------------------------

_OPS = {">": operator.gt, ">=": operator.ge, "<": operator.lt, "<=": operator.le}
_THRESHOLD = re.compile(r"^\s*(>=|<=|>|<)\s*([-+0-9.eE]+)\s*$")

PositiveRule = Union[str, float, Callable[[str], bool]]


def parse_rule(rule: PositiveRule) -> Callable[[str], bool]:
    """Turn a positive-class rule into a predicate over the raw label cell.

    ``"> 21.0"`` style strings are threshold rules, a bare number means
    ``> number``, anything else is a class value compared as a string.
    """
    if callable(rule):
        return rule
    if isinstance(rule, (int, float)):
        rule = f"> {rule}"
    m = _THRESHOLD.match(rule)
    if m:
        op, bound = _OPS[m.group(1)], float(m.group(2))

        def threshold(cell: str) -> bool:
            try:
                return op(float(cell), bound)
            except ValueError:
                raise DatasetError(f"label cell {cell!r} is not numeric") from None

        return threshold
    target = rule.strip()
    return lambda cell: cell.strip() == target


def load_csv(
    path,
    label_column: str,
    positive_rule: PositiveRule,
    drop_columns: Sequence[str] = (),
) -> Dataset:
    """Read a header-first numeric CSV; the label column is binarized by ``positive_rule``."""
    rule = parse_rule(positive_rule)
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if label_column not in header:
            raise DatasetError(f"{path}: no column {label_column!r} (have {header})")
        missing = [c for c in drop_columns if c not in header]
        if missing:
            raise DatasetError(f"{path}: cannot drop missing columns {missing}")
        li = header.index(label_column)
        keep = [i for i, h in enumerate(header) if i != li and h not in drop_columns]
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            vals = []
            for i in keep:
                try:
                    vals.append(float(rec[i]))
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: column {header[i]!r} has non-numeric value {rec[i]!r}"
                    ) from None
            rows.append(vals)
            labels.append(int(bool(rule(rec[li]))))
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    X = np.array(rows, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DatasetError(f"{path}: non-finite values")
    return Dataset(X, np.array(labels), tuple(header[i] for i in keep), name=path.stem)


@dataclass(frozen=True)
class Manifest:
    """Where a CSV dataset lives and how to binarize it."""

    file: str
    label_column: str
    rule: str
    seed: int = 0
    drop_columns: tuple[str, ...] = ()
    name: Optional[str] = None

    @classmethod
    def read(cls, path) -> "Manifest":
        data = json.loads(Path(path).read_text())
        base = Path(path).parent
        file = Path(data["file"])
        if not file.is_absolute():
            file = base / file
        return cls(
            file=str(file),
            label_column=data["label_column"],
            rule=str(data["rule"]),
            seed=int(data.get("seed", 0)),
            drop_columns=tuple(data.get("drop_columns", ())),
            name=data.get("name"),
        )

    def load(self) -> Dataset:
        ds = load_csv(self.file, self.label_column, self.rule, self.drop_columns)
        return replace(ds, name=self.name) if self.name else ds


# --- preprocessing ---------------------------------------------------------


def fit_normalization(X: np.ndarray) -> Normalization:
    return Normalization(X.min(axis=0), X.max(axis=0))


def normalize(train: Dataset, other: Dataset) -> tuple[Dataset, Dataset]:
    """Min-max scale both sets with parameters fitted on ``train``; constant features become 0."""
    if train.feature_names != other.feature_names:
        raise DatasetError("train and other datasets have different schemas")
    norm = fit_normalization(train.X)
    return (
        replace(train, X=norm.apply(train.X), normalization=norm),
        replace(other, X=norm.apply(other.X), normalization=norm),
    )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    if n < 5:
        raise DatasetError(f"need at least 5 rows to split, got {n}")
    n_train = int(round(spec.train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    perm = make_rng(spec.seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def split(data: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``train_fraction`` of rows go to train."""
    tr, te = split_indices(len(data), spec)
    return data.subset(tr), data.subset(te)
