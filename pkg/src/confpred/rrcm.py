"""Ridge regression confidence machine.

Completing the training set with a candidate label ``y`` and refitting ridge
regression makes every residual an affine function of ``y``:
``|a_i + b_i y|``. Example i is at least as strange as the test example on a
set bounded by the roots of two linear equations, so the conformal p-value is
a step function of ``y`` with finitely many breakpoints and the prediction set
can be computed exactly, without a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    IntervalUnion,
    RealLine,
    as_object,
    check_epsilon,
    check_epsilons,
)
from .kernels import hat_matrix
from .nonconformity import RidgeConfig

# |slope| or |intercept difference| below this is treated as exactly zero
ZERO_TOL = 1e-12
# critical points closer than this are merged
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class ResidualLines:
    """Residual of example i of the completed set is ``|a[i] + b[i] * y|``.

    The last line belongs to the test example.
    """

    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return self.a.shape[0]

    def residuals(self, y) -> np.ndarray:
        """Residuals at candidate label(s) ``y``; shape ``(..., n)``."""
        y = np.asarray(y, dtype=np.float64)[..., None]
        return np.abs(self.a + self.b * y)

    def p_value(self, y) -> np.ndarray:
        """p-value of candidate label(s) ``y`` by direct comparison."""
        r = self.residuals(y)
        return np.count_nonzero(r >= r[..., -1:], axis=-1) / len(self)


def residual_lines(training: Dataset, object, cfg: RidgeConfig) -> ResidualLines:
    """Intercepts and slopes of the completed-set residuals as functions of y."""
    if training.is_classification:
        raise DataError("residual_lines needs a regression dataset")
    if len(training) < 1:
        raise DataError("residual_lines needs at least one training example")
    x = as_object(object, training.dim)
    X = np.vstack([training.X, x[None, :]])
    n = X.shape[0]
    resid = np.eye(n) - hat_matrix(X, cfg.a, cfg.kernel)
    a = resid[:, :-1] @ training.y
    b = resid[:, -1].copy()
    return ResidualLines(a, b)


@dataclass(frozen=True)
class PValueProfile:
    """The step function y -> p(y).

    ``points`` are the sorted breakpoints c_1 < ... < c_m; ``at_points[j]`` is
    p(c_j) and ``between[j]`` is p on the open piece between c_{j-1} and c_j
    (with c_0 = -inf, c_{m+1} = +inf).
    """

    points: np.ndarray
    at_points: np.ndarray
    between: np.ndarray

    def pieces(self):
        """Bounds and p-values of the 2m+1 pieces in left-to-right order.

        Even positions are open pieces, odd positions single points.
        """
        m = self.points.size
        ext = np.concatenate([[-np.inf], self.points, [np.inf]])
        left = np.empty(2 * m + 1)
        right = np.empty(2 * m + 1)
        p = np.empty(2 * m + 1)
        left[0::2], right[0::2], p[0::2] = ext[:-1], ext[1:], self.between
        left[1::2] = right[1::2] = self.points
        p[1::2] = self.at_points
        return left, right, p


def _comparison_sets(lines: ResidualLines):
    """For each i, {y : |a_i + b_i y| >= |a_n + b_n y|} as two closed intervals.

    ``(a_i + b_i y)^2 - (a_n + b_n y)^2 = (u1 + v1 y)(u2 + v2 y)`` with
    u1 = a_i - a_n, v1 = b_i - b_n, u2 = a_i + a_n, v2 = b_i + b_n.
    Returns arrays L1, U1, L2, U2; an empty interval has L = +inf, U = -inf.
    """
    a, b = lines.a, lines.b
    an, bn = a[-1], b[-1]
    u1, v1, u2, v2 = a - an, b - bn, a + an, b + bn
    a_scale = max(1.0, float(np.max(np.abs(a))))
    u1z = np.abs(u1) <= ZERO_TOL * a_scale
    u2z = np.abs(u2) <= ZERO_TOL * a_scale
    v1z = np.abs(v1) <= ZERO_TOL
    v2z = np.abs(v2) <= ZERO_TOL
    u1 = np.where(u1z, 0.0, u1)
    u2 = np.where(u2z, 0.0, u2)

    n = len(lines)
    inf = np.inf
    L1, U1 = np.full(n, inf), np.full(n, -inf)
    L2, U2 = np.full(n, inf), np.full(n, -inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = -u1 / v1
        r2 = -u2 / v2

    def put(mask, l1, h1, l2=None, h2=None):
        L1[mask], U1[mask] = np.broadcast_to(l1, n)[mask], np.broadcast_to(h1, n)[mask]
        if l2 is not None:
            L2[mask], U2[mask] = np.broadcast_to(l2, n)[mask], np.broadcast_to(h2, n)[mask]

    # quadratic: two finite roots
    quad = ~v1z & ~v2z
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
    up = np.sign(v1) * np.sign(v2) > 0
    put(quad & up, -inf, lo, hi, inf)
    put(quad & ~up, lo, hi)

    # one factor constant: a half-line, or everything when that constant is 0
    lin2 = v1z & ~v2z
    put(lin2 & u1z, -inf, inf)
    right2 = lin2 & ~u1z & (np.sign(u1) * np.sign(v2) > 0)
    put(right2, r2, inf)
    put(lin2 & ~u1z & ~right2, -inf, r2)

    lin1 = v2z & ~v1z
    put(lin1 & u2z, -inf, inf)
    right1 = lin1 & ~u2z & (np.sign(u2) * np.sign(v1) > 0)
    put(right1, r1, inf)
    put(lin1 & ~u2z & ~right1, -inf, r1)

    # both factors constant
    const = v1z & v2z
    put(const & ((u1 * u2 >= 0) | u1z | u2z), -inf, inf)
    return L1, U1, L2, U2


def _count(L1, U1, L2, U2, ys: np.ndarray, tol: float) -> np.ndarray:
    y = ys[:, None]
    inside = ((y >= L1 - tol) & (y <= U1 + tol)) | ((y >= L2 - tol) & (y <= U2 + tol))
    return np.count_nonzero(inside, axis=1)


def p_value_profile(lines: ResidualLines) -> PValueProfile:
    """Exact p-value step function of the candidate label."""
    n = len(lines)
    L1, U1, L2, U2 = _comparison_sets(lines)
    ends = np.concatenate([L1, U1, L2, U2])
    ends = np.sort(ends[np.isfinite(ends)])
    if ends.size:
        keep = np.concatenate([[True], np.diff(ends) > DEDUP_TOL])
        points = ends[keep]
    else:
        points = ends
    if points.size:
        mids = np.concatenate(
            [
                [points[0] - max(1.0, abs(points[0]))],
                (points[:-1] + points[1:]) / 2.0,
                [points[-1] + max(1.0, abs(points[-1]))],
            ]
        )
    else:
        mids = np.zeros(1)
    at_points = _count(L1, U1, L2, U2, points, DEDUP_TOL) / n
    between = _count(L1, U1, L2, U2, mids, 0.0) / n
    return PValueProfile(points, at_points, between)


@dataclass(frozen=True)
class RegressionPrediction:
    """Prediction set for one significance level and its convex hull.

    ``hull`` is None when the set is empty; infinite endpoints mean the set is
    unbounded on that side.
    """

    eps: float
    gamma: IntervalUnion
    hull: tuple[float, float] | None

    @property
    def unbounded(self) -> bool:
        return self.hull is not None and not (
            math.isfinite(self.hull[0]) and math.isfinite(self.hull[1])
        )

    @property
    def width(self) -> float:
        if self.hull is None:
            return 0.0
        return self.hull[1] - self.hull[0]

    def __contains__(self, y) -> bool:
        return y in self.gamma


def interval_from_profile(profile: PValueProfile, eps: float) -> RegressionPrediction:
    """{y : p(y) > eps} as maximal closed intervals, plus the convex hull."""
    eps = check_epsilon(eps)
    left, right, p = profile.pieces()
    keep = (p > eps).astype(np.int8)
    edges = np.diff(np.concatenate([[0], keep, [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    intervals = tuple(zip(left[starts].tolist(), right[stops].tolist()))
    gamma = IntervalUnion(intervals)
    return RegressionPrediction(eps, gamma, gamma.hull())


def exact_interval(lines: ResidualLines, eps: float) -> RegressionPrediction:
    return interval_from_profile(p_value_profile(lines), eps)


def rrcm_predict(
    training: Dataset, object, cfg: RidgeConfig, eps_list: Sequence[float]
) -> list[RegressionPrediction]:
    """Prediction sets for several levels from one solve and one profile."""
    eps_list = check_epsilons(eps_list)
    profile = p_value_profile(residual_lines(training, object, cfg))
    return [interval_from_profile(profile, eps) for eps in eps_list]


class RidgeConfidenceMachine:
    """On-line/batch wrapper around :func:`rrcm_predict` (see conformal predictors)."""

    def __init__(self, cfg: RidgeConfig, dim: int):
        self.cfg = cfg
        self.dim = dim
        self._X: list[np.ndarray] = []
        self._y: list[float] = []

    @property
    def training(self) -> Dataset:
        return Dataset(np.array(self._X).reshape(-1, self.dim), self._y, RealLine(), dim=self.dim)

    def learn(self, x, label) -> None:
        self._X.append(as_object(x, self.dim))
        self._y.append(float(label))

    def predict(self, x, eps_list, index: int = 0) -> list[IntervalUnion]:
        if not self._X:
            # no data: every label is as typical as any other
            return [IntervalUnion(((-np.inf, np.inf),)) for _ in eps_list]
        return [pred.gamma for pred in rrcm_predict(self.training, x, self.cfg, eps_list)]
