"""Domain types shared by the predictors: examples, datasets, label spaces,
p-value tables and prediction sets.

A :class:`Dataset` keeps its objects as a read-only ``(n, p)`` float64 array.
Classification labels are stored as integer codes into the declared
alphabet, regression labels as floats; :attr:`Dataset.labels` maps them back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Any, Hashable, Iterator, Mapping, Sequence, Union

import numpy as np


class ConformalError(Exception):
    """Base class for errors raised by this package."""


class DataError(ConformalError, ValueError):
    """Malformed input data: wrong dimension, unknown label, non-finite value."""


class NumericalError(ConformalError, ArithmeticError):
    """A linear system was singular or too badly conditioned to trust."""


# label spaces ------------------------------------------------------------


@dataclass(frozen=True)
class ClassAlphabet:
    """Finite, explicitly declared set of class symbols (order matters)."""

    symbols: tuple

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise DataError("a class alphabet needs at least two labels")
        if len(set(symbols)) != len(symbols):
            raise DataError(f"duplicate symbols in alphabet {symbols!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.symbols)

    def __contains__(self, label) -> bool:
        return label in self._index

    @cached_property
    def _index(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    def code(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DataError(
                f"label {label!r} is not in the alphabet {self.symbols!r}"
            ) from None


@dataclass(frozen=True)
class RealLine:
    """The regression label space."""


LabelSpace = Union[ClassAlphabet, RealLine]


def is_classification(space: LabelSpace) -> bool:
    return isinstance(space, ClassAlphabet)


# examples and datasets -----------------------------------------------------


def as_object(x, dim: int | None = None) -> np.ndarray:
    """Validate a single feature vector and return it as a read-only array."""
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DataError(f"object has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise DataError("object features must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Example:
    object: np.ndarray
    label: Any


class Dataset:
    """Ordered (multi)set of labeled examples sharing a dimension and label space.

    Parameters
    ----------
    X : array-like of shape (n, dim)
        Objects.
    y : array-like of shape (n,)
        Labels, as symbols (classification) or reals (regression).
    label_space : ClassAlphabet or RealLine
    dim : int, optional
        Required when ``X`` is empty.
    """

    __slots__ = ("X", "y", "label_space", "dim")

    def __init__(self, X, y, label_space: LabelSpace, dim: int | None = None):
        X = np.array(X, dtype=np.float64)
        if X.size == 0:
            if dim is None:
                dim = X.shape[1] if X.ndim == 2 else None
            if dim is None:
                raise DataError("dim must be given for an empty dataset")
            X = X.reshape(0, dim)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if dim in (None, 1) else X.reshape(-1, dim)
        if X.ndim != 2:
            raise DataError("objects must form a 2-D array")
        if dim is not None and X.shape[1] != dim:
            raise DataError(f"objects have dimension {X.shape[1]}, expected {dim}")
        if dim is not None and dim < 1:
            raise DataError("dimension must be positive")
        if not np.all(np.isfinite(X)):
            raise DataError("object features must be finite")

        labels = list(y) if not isinstance(y, np.ndarray) else y
        if len(labels) != X.shape[0]:
            raise DataError(f"{X.shape[0]} objects but {len(labels)} labels")
        if isinstance(label_space, ClassAlphabet):
            codes = np.array([label_space.code(v) for v in labels], dtype=np.int64)
        elif isinstance(label_space, RealLine):
            try:
                codes = np.array(labels, dtype=np.float64).reshape(-1)
            except (TypeError, ValueError):
                raise DataError("regression labels must be real numbers") from None
            if not np.all(np.isfinite(codes)):
                raise DataError("regression labels must be finite")
        else:
            raise TypeError(f"unknown label space {label_space!r}")

        X.setflags(write=False)
        codes.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", codes)
        object.__setattr__(self, "label_space", label_space)
        object.__setattr__(self, "dim", X.shape[1])

    @classmethod
    def _from_arrays(cls, X: np.ndarray, codes: np.ndarray, space: LabelSpace):
        # trusted constructor: arrays already validated and encoded
        self = object.__new__(cls)
        X.setflags(write=False)
        codes.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", codes)
        object.__setattr__(self, "label_space", space)
        object.__setattr__(self, "dim", X.shape[1])
        return self

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> Example:
        return Example(self.X[i], self.label_of(self.y[i]))

    def __iter__(self) -> Iterator[Example]:
        for i in range(len(self)):
            yield self[i]

    @property
    def is_classification(self) -> bool:
        return is_classification(self.label_space)

    def label_of(self, code):
        if self.is_classification:
            return self.label_space.symbols[int(code)]
        return float(code)

    @property
    def labels(self) -> list:
        return [self.label_of(c) for c in self.y]

    def encode(self, label):
        """Internal representation of ``label`` (alphabet index or float)."""
        if self.is_classification:
            return self.label_space.code(label)
        if isinstance(label, (bool, str)) or not isinstance(label, (int, float, np.number)):
            raise DataError(f"regression label must be a real number, got {label!r}")
        value = float(label)
        if not math.isfinite(value):
            raise DataError("regression labels must be finite")
        return value

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset._from_arrays(self.X[idx].copy(), self.y[idx].copy(), self.label_space)

    def head(self, m: int) -> "Dataset":
        return self.subset(np.arange(m))

    def tail(self, m: int) -> "Dataset":
        return self.subset(np.arange(m, len(self)))

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, dim={self.dim}, label_space={self.label_space!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.label_space == other.label_space
            and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


def empty_dataset(dim: int, label_space: LabelSpace) -> Dataset:
    return Dataset(np.empty((0, dim)), [], label_space, dim=dim)


def concat(first: Dataset, second: Dataset) -> Dataset:
    if first.dim != second.dim or first.label_space != second.label_space:
        raise DataError("datasets differ in dimension or label space")
    return Dataset._from_arrays(
        np.vstack([first.X, second.X]),
        np.concatenate([first.y, second.y]),
        first.label_space,
    )


def complete(training: Dataset, object, candidate) -> Dataset:
    """Append ``(object, candidate)`` to ``training`` as the last example."""
    x = as_object(object, training.dim)
    code = training.encode(candidate)
    X = np.vstack([training.X, x[None, :]])
    y = np.append(training.y, np.array([code], dtype=training.y.dtype))
    return Dataset._from_arrays(X, y, training.label_space)


# p-values and prediction sets ------------------------------------------------


@dataclass(frozen=True)
class PValueTable:
    """p-value of every candidate label for one test object, in alphabet order."""

    entries: Mapping

    def __post_init__(self):
        entries = dict(self.entries)
        for label, p in entries.items():
            if not 0 <= p <= 1:
                raise ValueError(f"p-value for {label!r} outside [0, 1]: {p}")
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __getitem__(self, label):
        return self.entries[label]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    @property
    def labels(self) -> tuple:
        return tuple(self.entries)


@dataclass(frozen=True)
class LabelSet:
    """Finite prediction set for classification, kept in alphabet order."""

    labels: tuple

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def cardinality(self) -> float:
        return len(self.labels)

    def issuperset(self, other: "LabelSet") -> bool:
        return set(self.labels) >= set(other.labels)


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals on the real line.

    Endpoints may be infinite; a degenerate ``(c, c)`` is the single point c.
    """

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in ivs:
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"bad interval ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
            if not hi < lo:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    def __contains__(self, y) -> bool:
        return any(lo <= y <= hi for lo, hi in self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def cardinality(self) -> float:
        """Number of labels in the set: 0, 1 (a single point) or infinity."""
        if not self.intervals:
            return 0
        if len(self.intervals) == 1 and self.intervals[0][0] == self.intervals[0][1]:
            return 1
        if all(lo == hi for lo, hi in self.intervals):
            return len(self.intervals)
        return math.inf

    def hull(self) -> tuple[float, float] | None:
        if not self.intervals:
            return None
        return (self.intervals[0][0], self.intervals[-1][1])

    def issuperset(self, other: "IntervalUnion") -> bool:
        return all(
            any(lo <= olo and ohi <= hi for lo, hi in self.intervals)
            for olo, ohi in other.intervals
        )


PredictionSet = Union[LabelSet, IntervalUnion]


@dataclass(frozen=True)
class ConfidenceCredibility:
    prediction: Any
    confidence: Any
    credibility: Any


def check_epsilon(eps) -> float:
    """Return ``eps`` as a float, or raise if it is not in the open interval (0, 1)."""
    value = float(eps)
    if not 0.0 < value < 1.0:
        raise ValueError(f"significance level must lie in (0, 1), got {eps!r}")
    return value


def check_epsilons(eps_list: Sequence) -> tuple[float, ...]:
    return tuple(check_epsilon(e) for e in eps_list)
