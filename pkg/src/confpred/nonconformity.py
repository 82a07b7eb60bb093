"""Nonconformity measures.

A measure maps a data sequence to one score per example, and permuting the
examples permutes the scores the same way. Larger scores mean stranger
examples. Scores are float64 and may be ``+inf`` (see :func:`knn_scores`).
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .core import DataError, Dataset
from .kernels import (
    KernelSpec,
    Linear,
    distances,
    kernel_ridge_dual,
    ridge_weights,
)

Measure = Callable[[Dataset], np.ndarray]


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1
    kernel: KernelSpec = field(default_factory=Linear)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")


@dataclass(frozen=True)
class RidgeConfig:
    a: float = 1.0
    kernel: KernelSpec | None = None

    def __post_init__(self):
        if not self.a >= 0:
            raise ValueError(f"ridge parameter must be nonnegative, got {self.a}")
        if self.kernel is not None and not self.a > 0:
            raise ValueError("kernel ridge regression needs a positive ridge parameter")


# k nearest neighbours ---------------------------------------------------------


def knn_ratio(
    sum_same: np.ndarray, sum_diff: np.ndarray, n_same: np.ndarray, n_diff: np.ndarray
) -> np.ndarray:
    """Combine truncated neighbour-distance sums into scores.

    ``n_same``/``n_diff`` count the examples available on each side. With no
    differently labelled example the score is 0; with no same-labelled one
    (but some differently labelled) it is +inf. ``0/0`` (duplicates on both
    sides) counts as equidistant, score 1.
    """
    sum_same = np.asarray(sum_same, dtype=np.float64)
    sum_diff = np.asarray(sum_diff, dtype=np.float64)
    out = np.empty(np.broadcast(sum_same, sum_diff).shape)
    no_diff = np.asarray(n_diff) == 0
    no_same = (np.asarray(n_same) == 0) & ~no_diff
    normal = ~(no_diff | no_same)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = sum_same / sum_diff
    ratio = np.where((sum_diff == 0) & (sum_same == 0), 1.0, ratio)
    ratio = np.where((sum_diff == 0) & (sum_same > 0), np.inf, ratio)
    out[normal] = np.broadcast_to(ratio, out.shape)[normal]
    out[no_diff] = 0.0
    out[no_same] = np.inf
    return out


def truncated_sums(sorted_same: np.ndarray, sorted_diff: np.ndarray, m: np.ndarray):
    """Sums of the first ``m[i]`` entries of each row (rows sorted ascending)."""
    rows = np.arange(sorted_same.shape[0])
    idx = np.maximum(m - 1, 0)
    cs_same = np.cumsum(sorted_same, axis=1)[rows, idx]
    cs_diff = np.cumsum(sorted_diff, axis=1)[rows, idx]
    zero = m == 0
    return np.where(zero, 0.0, cs_same), np.where(zero, 0.0, cs_diff)


def knn_scores(seq: Dataset, cfg: KnnConfig) -> np.ndarray:
    """Nearest-neighbour distance ratio for every example of ``seq``.

    For example i the score is the sum of its j nearest same-label distances
    divided by the sum of its j nearest other-label distances, with
    ``j = min(k, #same-label others, #other-label examples)``.
    """
    if not seq.is_classification:
        raise DataError("knn_scores needs a classification dataset")
    n = len(seq)
    if n < 2:
        raise DataError("knn_scores needs at least two examples")
    k = cfg.k
    D = distances(cfg.kernel, seq.X, seq.X)
    y = seq.y
    same = y[:, None] == y[None, :]
    np.fill_diagonal(same, False)
    diff = y[:, None] != y[None, :]

    width = min(k, n)
    # stable sort so equal distances keep index order
    s_same = np.sort(np.where(same, D, np.inf), axis=1, kind="stable")[:, :width]
    s_diff = np.sort(np.where(diff, D, np.inf), axis=1, kind="stable")[:, :width]
    n_same = same.sum(axis=1)
    n_diff = diff.sum(axis=1)
    m = np.minimum(np.minimum(n_same, n_diff), k)
    sum_same, sum_diff = truncated_sums(s_same, s_diff, m)
    return knn_ratio(sum_same, sum_diff, n_same, n_diff)


# ridge residuals --------------------------------------------------------------


def ridge_fit_predict(X: np.ndarray, y: np.ndarray, cfg: RidgeConfig, X_new: np.ndarray):
    """Fit (kernel) ridge regression on (X, y) and predict at X_new."""
    if cfg.kernel is None:
        return X_new @ ridge_weights(X, y, cfg.a)
    c = kernel_ridge_dual(cfg.kernel(X, X), y, cfg.a)
    return cfg.kernel(X_new, X) @ c


def residual_scores(seq: Dataset, cfg: RidgeConfig) -> np.ndarray:
    """Absolute residuals ``|y_i - f(x_i)|`` of a ridge fit to the whole sequence."""
    if seq.is_classification:
        raise DataError("residual_scores needs a regression dataset")
    if len(seq) < 1:
        raise DataError("residual_scores needs at least one example")
    fitted = ridge_fit_predict(seq.X, seq.y, cfg, seq.X)
    return np.abs(seq.y - fitted)


# discrepancy between a label and a frozen prediction --------------------------


def _is_real(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


def absolute_error(y, y_hat) -> float:
    if not (_is_real(y) and _is_real(y_hat)):
        raise DataError(f"absolute error needs real labels, got {y!r} and {y_hat!r}")
    return abs(float(y) - float(y_hat))


def zero_one(y, y_hat) -> float:
    if _is_real(y) != _is_real(y_hat):
        raise DataError(f"label kinds differ: {y!r} vs {y_hat!r}")
    return 0.0 if y == y_hat else 1.0


DISCREPANCIES: dict[str, Callable] = {
    "absolute": absolute_error,
    "zero_one": zero_one,
}


def discrepancy(name: str) -> Callable:
    try:
        return DISCREPANCIES[name]
    except KeyError:
        raise ValueError(
            f"unknown discrepancy {name!r}; choose from {sorted(DISCREPANCIES)}"
        ) from None


def delta_scores(pairs: Iterable[tuple], delta: str) -> np.ndarray:
    """Scores ``Delta(y_i, y_hat_i)`` for (label, predicted label) pairs."""
    fn = discrepancy(delta)
    return np.array([fn(y, y_hat) for y, y_hat in pairs], dtype=np.float64)
