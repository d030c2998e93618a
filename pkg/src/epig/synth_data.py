"""Datasets: the 2D synthetic benchmark, class-proportion splits and CSV input."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import SchemaError


@dataclass
class LabeledSet:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim == 1:
            self.inputs = self.inputs[:, None]
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, index) -> "LabeledSet":
        index = np.asarray(index, dtype=np.int64)
        return LabeledSet(self.inputs[index], self.labels[index], self.num_classes)

    def append(self, x, y) -> "LabeledSet":
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        return LabeledSet(np.vstack([self.inputs, x]), np.append(self.labels, int(y)), self.num_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    @classmethod
    def empty(cls, dim: int, num_classes: int) -> "LabeledSet":
        return cls(np.empty((0, dim)), np.empty(0, dtype=np.int64), num_classes)


# ------------------------------------------------------------ 2D synthetic task


@dataclass(frozen=True)
class StudentTInput:
    """Multivariate Student's t with ``df`` degrees of freedom."""

    df: float = 5.0
    loc: tuple[float, ...] = (0.0, 0.0)
    scale: tuple[tuple[float, ...], ...] = ((0.8, 0.0), (0.0, 0.8))

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError("degrees of freedom must be positive")
        s = np.asarray(self.scale, dtype=np.float64)
        if s.shape != (len(self.loc), len(self.loc)) or not np.allclose(s, s.T):
            raise ValueError("scale matrix must be square, symmetric and match loc")
        if np.linalg.eigvalsh(s).min() <= 0:
            raise ValueError("scale matrix must be positive definite")


# the two input distributions of the 2D benchmark; the second only serves
# illustrations of how EPIG depends on the target distribution
P1 = StudentTInput(5.0, (0.0, 0.0), ((0.8, 0.0), (0.0, 0.8)))
P2 = StudentTInput(5.0, (0.8, 0.9), ((0.4, 0.0), (0.0, 0.4)))


def sample_student_t(dist: StudentTInput, n: int, seed) -> np.ndarray:
    """Draw ``n`` points as ``loc + z / sqrt(w / df)``, ``z ~ N(0, scale)``, ``w ~ chi2(df)``."""
    rng = np.random.default_rng(seed)
    loc = np.asarray(dist.loc, dtype=np.float64)
    chol = np.linalg.cholesky(np.asarray(dist.scale, dtype=np.float64))
    z = rng.standard_normal((n, loc.size)) @ chol.T
    w = rng.chisquare(dist.df, size=n)
    return loc + z / np.sqrt(w / dist.df)[:, None]


def true_label_prob(x) -> np.ndarray | float:
    """``p(y=1 | x) = Phi(20 (tanh(2 x1) - x2))`` for the 2D benchmark."""
    x = np.asarray(x, dtype=np.float64)
    out = ndtr(20.0 * (np.tanh(2.0 * x[..., 0]) - x[..., 1]))
    return float(out) if out.ndim == 0 else out


def sample_labels(inputs, seed) -> LabeledSet:
    inputs = np.asarray(inputs, dtype=np.float64).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    labels = (rng.random(inputs.shape[0]) < true_label_prob(inputs)).astype(np.int64)
    return LabeledSet(inputs, labels, 2)


def sample_initial_per_class(dist: StudentTInput, per_class: int, seed, batch: int = 64) -> LabeledSet:
    """Draw labelled points from ``dist`` until every class has ``per_class`` of them.

    Points are kept in the order drawn; surplus points of a full class are skipped.
    """
    rng = np.random.default_rng(seed)
    need = np.full(2, per_class)
    xs, ys = [], []
    while need.sum() > 0:
        x = sample_student_t(dist, batch, rng)
        y = (rng.random(batch) < true_label_prob(x)).astype(np.int64)
        for xi, yi in zip(x, y):
            if need[yi] > 0:
                need[yi] -= 1
                xs.append(xi)
                ys.append(yi)
    return LabeledSet(np.array(xs).reshape(-1, 2), np.array(ys, dtype=np.int64), 2)


def make_gaussian_classes(num_classes: int, per_class: int, dim: int, spread: float, seed) -> LabeledSet:
    """Isotropic Gaussian class clusters with random centres, ``spread`` apart on average."""
    rng = np.random.default_rng(seed)
    centres = rng.normal(scale=spread, size=(num_classes, dim))
    labels = np.repeat(np.arange(num_classes), per_class)
    inputs = centres[labels] + rng.standard_normal((labels.size, dim))
    perm = rng.permutation(labels.size)
    return LabeledSet(inputs[perm], labels[perm], num_classes)


# --------------------------------------------------------------------- splits


def proportional_counts(total: int, proportions: Sequence[float]) -> np.ndarray:
    """Split ``total`` into integer counts following ``proportions`` (largest remainder)."""
    p = np.asarray(proportions, dtype=np.float64)
    if np.any(p < 0) or p.sum() <= 0:
        raise ValueError("proportions must be non-negative and not all zero")
    exact = total * p / p.sum()
    counts = np.floor(exact).astype(np.int64)
    short = total - counts.sum()
    if short:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def unbalanced_proportions(num_classes: int = 10, minority=range(5), ratio: float = 10.0) -> np.ndarray:
    """Class proportions where the listed minority classes are ``ratio`` times rarer.

    The defaults give 1/55 for classes 0-4 and 10/55 for classes 5-9.
    """
    w = np.full(num_classes, ratio)
    w[list(minority)] = 1.0
    return w / w.sum()


@dataclass
class SplitRecipe:
    """Per-class counts for each subset drawn from the base data.

    Every mapping is ``class -> count``.  ``test`` may be ``None`` when the test
    set comes from elsewhere.  Classes not listed get zero.
    """

    pool: Mapping[int, int]
    init_train: Mapping[int, int] = field(default_factory=dict)
    validation: Mapping[int, int] = field(default_factory=dict)
    target: Mapping[int, int] = field(default_factory=dict)
    test: Mapping[int, int] | None = None

    def __post_init__(self):
        for name in ("pool", "init_train", "validation", "target", "test"):
            counts = getattr(self, name)
            if counts is None:
                continue
            clean = {int(k): int(v) for k, v in dict(counts).items()}
            if any(v < 0 for v in clean.values()):
                raise ValueError(f"{name} has a negative class count")
            setattr(self, name, clean)

    @classmethod
    def from_proportions(
        cls,
        num_classes: int,
        pool_size: int,
        pool_proportions=None,
        init_per_class: int = 2,
        validation_size: int = 0,
        target_size: int = 0,
        target_proportions=None,
        test_size: int | None = None,
        test_proportions=None,
    ) -> "SplitRecipe":
        uniform = np.full(num_classes, 1.0 / num_classes)
        pool_p = uniform if pool_proportions is None else pool_proportions
        test_p = uniform if test_proportions is None else test_proportions
        target_p = test_p if target_proportions is None else target_proportions

        def as_map(total, p):
            return {c: int(v) for c, v in enumerate(proportional_counts(total, p))}

        return cls(
            pool=as_map(pool_size, pool_p),
            init_train={c: init_per_class for c in range(num_classes)},
            validation=as_map(validation_size, pool_p) if validation_size else {},
            target=as_map(target_size, target_p) if target_size else {},
            test=as_map(test_size, test_p) if test_size is not None else None,
        )


_SPLIT_ORDER = ("test", "pool", "validation", "init_train", "target")


def build_splits(base: LabeledSet, recipe: SplitRecipe, seed) -> dict[str, np.ndarray]:
    """Draw disjoint index sets from ``base`` with exactly the requested class counts.

    Returns a dict of index arrays keyed by subset name (``pool``, ``init_train``,
    ``validation``, ``target``, ``test``); absent subsets map to empty arrays.
    """
    rng = np.random.default_rng(seed)
    by_class = {c: rng.permutation(np.nonzero(base.labels == c)[0]) for c in range(base.num_classes)}
    used = {c: 0 for c in by_class}
    requested: dict[int, int] = {}
    for name in _SPLIT_ORDER:
        counts = getattr(recipe, name)
        for c, v in (counts or {}).items():
            requested[c] = requested.get(c, 0) + v
    problems = [
        f"class {c}: need {v}, have {by_class.get(c, np.empty(0)).size}"
        for c, v in sorted(requested.items())
        if v > by_class.get(c, np.empty(0)).size
    ]
    if problems:
        raise ValueError("insufficient class counts: " + ", ".join(problems))
    out = {}
    for name in _SPLIT_ORDER:
        counts = getattr(recipe, name) or {}
        parts = []
        for c in sorted(counts):
            v = counts[c]
            parts.append(by_class[c][used[c]:used[c] + v])
            used[c] += v
        idx = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        out[name] = np.sort(idx).astype(np.int64)
    return out


def resample_to_proportions(labels: np.ndarray, proportions, seed) -> np.ndarray:
    """Largest subset of ``labels`` (by index) whose class shares match ``proportions``.

    This is how a held-out set is thinned until, say, class 1 makes up 75% of it.
    """
    labels = np.asarray(labels)
    p = np.asarray(proportions, dtype=np.float64)
    p = p / p.sum()
    have = np.bincount(labels, minlength=p.size)
    with np.errstate(divide="ignore"):
        limits = np.where(p > 0, have / np.where(p > 0, p, 1.0), np.inf)
    total = int(math.floor(limits.min() + 1e-9))
    counts = proportional_counts(total, p)
    rng = np.random.default_rng(seed)
    keep = [rng.permutation(np.nonzero(labels == c)[0])[:counts[c]] for c in range(p.size)]
    return np.sort(np.concatenate(keep)).astype(np.int64)


# ------------------------------------------------------------------------ CSV


@dataclass(frozen=True)
class CsvSchema:
    features: tuple[str, ...]
    label: str
    num_classes: int


def load_csv(path, schema: CsvSchema) -> LabeledSet:
    """Read a comma-separated file with one header row.

    Feature columns must parse as floats and the label column as an integer in
    ``[0, num_classes)``.  Errors name the offending (1-based, header = 1) row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty (no header row)") from None
        header = [h.strip() for h in header]
        missing = [c for c in (*schema.features, schema.label) if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        f_idx = [header.index(c) for c in schema.features]
        y_idx = header.index(schema.label)
        xs, ys = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            try:
                xs.append([float(row[i]) for i in f_idx])
            except ValueError:
                raise SchemaError(f"{path}: row {row_no} has a non-numeric feature") from None
            try:
                y = int(row[y_idx].strip())
            except ValueError:
                raise SchemaError(f"{path}: row {row_no} label {row[y_idx]!r} is not an integer") from None
            if not 0 <= y < schema.num_classes:
                raise SchemaError(f"{path}: row {row_no} label {y} outside [0, {schema.num_classes})")
            ys.append(y)
    inputs = np.array(xs, dtype=np.float64).reshape(-1, len(schema.features))
    return LabeledSet(inputs, np.array(ys, dtype=np.int64), schema.num_classes)


def write_csv(path, data: LabeledSet, feature_names: Sequence[str] | None = None, label: str = "label") -> None:
    names = list(feature_names or [f"x{i}" for i in range(data.dim)])
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label])
        for x, y in zip(data.inputs, data.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
