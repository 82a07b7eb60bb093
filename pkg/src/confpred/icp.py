"""Inductive conformal prediction.

The training set is split once: a rule is fitted on the first ``m`` examples
(the proper training set) and the remaining ones (the calibration set) are
scored against it. A test object then needs one rule evaluation and one binary
search over the sorted calibration scores.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    ClassAlphabet,
    DataError,
    Dataset,
    IntervalUnion,
    LabelSet,
    PValueTable,
    as_object,
    check_epsilon,
)
from .kernels import KernelSpec, Linear, distances, kernel_ridge_dual, ridge_weights
from .nonconformity import RidgeConfig, discrepancy

Rule = Callable[[np.ndarray], list]
Learner = Callable[[Dataset], Rule]


def kernel_ridge_learner(cfg: RidgeConfig) -> Learner:
    """Learner producing a (kernel) ridge regression rule."""

    def learn(proper: Dataset) -> Rule:
        if proper.is_classification:
            raise DataError("ridge regression needs real labels")
        X, y = proper.X.copy(), proper.y.copy()
        # fit once; later calls only evaluate
        if cfg.kernel is None:
            w = ridge_weights(X, y, cfg.a)

            def rule(objects):
                return (np.atleast_2d(objects) @ w).tolist()

        else:
            c = kernel_ridge_dual(cfg.kernel(X, X), y, cfg.a)

            def rule(objects):
                return (cfg.kernel(np.atleast_2d(objects), X) @ c).tolist()

        return rule

    return learn


def nearest_neighbour_learner(kernel: KernelSpec | None = None) -> Learner:
    """Learner producing a 1-nearest-neighbour classification rule.

    Distance ties go to the earliest training example.
    """
    kernel = kernel or Linear()

    def learn(proper: Dataset) -> Rule:
        if len(proper) == 0:
            raise DataError("nearest neighbour rule needs at least one example")
        X, labels = proper.X.copy(), proper.labels

        def rule(objects):
            d = distances(kernel, np.atleast_2d(objects), X)
            return [labels[j] for j in np.argmin(d, axis=1)]

        return rule

    return learn


def constant_learner(value) -> Learner:
    def learn(proper: Dataset) -> Rule:
        return lambda objects: [value] * np.atleast_2d(objects).shape[0]

    return learn


def default_split(l: int) -> int:
    """Proper training set size used when the caller gives none: ceil(2l/3)."""
    return min(max(1, math.ceil(2 * l / 3)), l - 1)


@dataclass(frozen=True)
class IcpModel:
    rule: Rule
    calibration_scores: tuple
    delta: str
    m: int
    label_space: object
    dim: int

    @property
    def n_calibration(self) -> int:
        return len(self.calibration_scores)

    def predict_label(self, object):
        return self.rule(as_object(object, self.dim)[None, :])[0]


def icp_fit(training: Dataset, split_m: int | None, learner: Learner, delta: str) -> IcpModel:
    """Fit the rule on examples ``1..m`` and score examples ``m+1..l``."""
    l = len(training)
    m = default_split(l) if split_m is None else split_m
    if int(m) != m or not 1 <= m < l:
        raise ValueError(f"split must satisfy 1 <= m < l = {l}, got {m}")
    fn = discrepancy(delta)
    rule = learner(training.head(m))
    calib = training.tail(m)
    predicted = rule(calib.X)
    scores = sorted(fn(y, y_hat) for y, y_hat in zip(calib.labels, predicted))
    return IcpModel(rule, tuple(scores), delta, m, training.label_space, training.dim)


def icp_p_value_from_score(model: IcpModel, score: float) -> float:
    """(#calibration scores >= score, plus the test itself) / (c + 1), by bisection."""
    scores = model.calibration_scores
    at_least = len(scores) - bisect.bisect_left(scores, score)
    return (at_least + 1) / (len(scores) + 1)


def icp_p_value(model: IcpModel, object, candidate) -> float:
    score = discrepancy(model.delta)(candidate, model.predict_label(object))
    return icp_p_value_from_score(model, score)


def icp_p_table(model: IcpModel, object) -> PValueTable:
    if not isinstance(model.label_space, ClassAlphabet):
        raise DataError("p-value tables need a class alphabet")
    fn = discrepancy(model.delta)
    y_hat = model.predict_label(object)
    return PValueTable(
        {Y: icp_p_value_from_score(model, fn(Y, y_hat)) for Y in model.label_space}
    )


def icp_radius(model: IcpModel, eps: float) -> float:
    """Largest score whose p-value still exceeds ``eps``.

    With sorted calibration scores s_1 <= ... <= s_c and n = c + 1,
    ``p(alpha) > eps`` iff at least ``r = floor(eps * n)`` calibration scores
    are >= alpha, i.e. ``alpha <= s_{c - r + 1}``; r = 0 means every score.
    """
    eps = check_epsilon(eps)
    c = model.n_calibration
    r = math.floor(eps * (c + 1))
    if r == 0:
        return math.inf
    return model.calibration_scores[c - r]


def icp_predict(model: IcpModel, object, eps: float):
    """Prediction set: labels with p > eps, or an interval for absolute-error regression."""
    eps = check_epsilon(eps)
    if isinstance(model.label_space, ClassAlphabet):
        table = icp_p_table(model, object)
        return LabelSet(tuple(Y for Y, p in table.items() if p > eps))
    if model.delta != "absolute":
        raise DataError("closed-form regression intervals need the absolute discrepancy")
    centre = float(model.predict_label(object))
    q = icp_radius(model, eps)
    return IntervalUnion(((centre - q, centre + q),))


class InductiveConformalPredictor:
    """Batch-protocol wrapper: ``learn`` collects training data, the model is
    fitted lazily on the first prediction and frozen afterwards."""

    def __init__(self, learner: Learner, delta: str, label_space, dim: int, split_m: int | None = None):
        self.learner = learner
        self.delta = delta
        self.label_space = label_space
        self.dim = dim
        self.split_m = split_m
        self._X: list[np.ndarray] = []
        self._y: list = []
        self.model: IcpModel | None = None

    def learn(self, x, label) -> None:
        if self.model is not None:
            raise RuntimeError("inductive model is frozen after the first prediction")
        self._X.append(as_object(x, self.dim))
        self._y.append(label)

    def predict(self, x, eps_list, index: int = 0):
        if self.model is None:
            training = Dataset(np.array(self._X).reshape(-1, self.dim), self._y, self.label_space, dim=self.dim)
            self.model = icp_fit(training, self.split_m, self.learner, self.delta)
        return [icp_predict(self.model, x, eps) for eps in eps_list]
