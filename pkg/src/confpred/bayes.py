"""Gaussian linear model, its Bayes-optimal prediction intervals, and the
ridge-machine vs. Bayes comparison on data drawn from that model.

Data: ``w ~ N(0, I/a_true)``, objects uniform on a box, ``y = w.x + noise``.
Under this model ridge regression with parameter ``a`` is the posterior mean,
so the ridge confidence machine and the Bayes predictor can be compared with
both correct and misspecified ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .core import DataError, Dataset, RealLine, as_object, check_epsilon
from .kernels import solve_regularized
from .nonconformity import RidgeConfig
from .rrcm import p_value_profile, residual_lines


@dataclass(frozen=True)
class LinearModelSpec:
    p: int = 5
    a_true: float = 1.0
    x_low: float = -10.0
    x_high: float = 10.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("dimension must be a positive integer")
        if not self.a_true > 0:
            raise ValueError("a_true must be positive")
        if not self.x_low < self.x_high:
            raise ValueError("need x_low < x_high")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")


def generate_with_weights(spec: LinearModelSpec, l: int, k: int, seed):
    """Training set of size l, test set of size k, and the weight vector used."""
    if l < 0 or k < 0:
        raise ValueError("sizes must be nonnegative")
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 1.0 / np.sqrt(spec.a_true), size=spec.p)

    def draw(size):
        X = rng.uniform(spec.x_low, spec.x_high, size=(size, spec.p))
        y = X @ w + spec.noise_sd * rng.standard_normal(size)
        return Dataset(X, y, RealLine(), dim=spec.p)

    return draw(l), draw(k), w


def generate(spec: LinearModelSpec, l: int, k: int, seed) -> tuple[Dataset, Dataset]:
    train, test, _ = generate_with_weights(spec, l, k, seed)
    return train, test


def normal_quantile(q):
    return ndtri(q)


def bayes_predictive(training: Dataset, objects, a_assumed: float, noise_var: float = 1.0):
    """Posterior predictive mean and standard deviation at each row of ``objects``.

    Noise variance is ``noise_var`` and the prior is ``w ~ N(0, noise_var/a I)``;
    with unit noise that is the generating model with ``a = a_assumed``.
    """
    if training.is_classification:
        raise DataError("bayes_predictive needs a regression dataset")
    if not a_assumed >= 0:
        raise ValueError("a_assumed must be nonnegative")
    X0 = np.atleast_2d(np.asarray(objects, dtype=np.float64))
    if X0.shape[1] != training.dim:
        raise DataError(f"objects have dimension {X0.shape[1]}, expected {training.dim}")
    X, y = training.X, training.y
    G = X.T @ X
    rhs = np.column_stack([X.T @ y, X0.T])
    sol = solve_regularized(G, a_assumed, rhs)
    mean = X0 @ sol[:, 0]
    quad = np.einsum("ij,ji->i", X0, sol[:, 1:])
    sd = np.sqrt(noise_var * (1.0 + quad))
    return mean, sd


def bayes_interval(
    training: Dataset, object, a_assumed: float, eps: float, noise_var: float = 1.0
) -> tuple[float, float]:
    """Shortest interval of posterior predictive probability ``1 - eps``."""
    eps = check_epsilon(eps)
    x = as_object(object, training.dim)
    mean, sd = bayes_predictive(training, x[None, :], a_assumed, noise_var)
    half = normal_quantile(1.0 - eps / 2.0) * sd[0]
    return float(mean[0] - half), float(mean[0] + half)


# the comparison experiment ----------------------------------------------------------


def default_levels() -> np.ndarray:
    return np.linspace(0.5, 0.995, 50)


@dataclass(frozen=True)
class ExperimentGrid:
    levels: tuple = field(default_factory=lambda: tuple(default_levels()))
    trials: int = 10
    train_size: int = 100
    test_size: int = 100
    a_values: tuple = (1.0, 1000.0, 10000.0)

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        if not levels or any(not 0.0 < v < 1.0 for v in levels):
            raise ValueError("confidence levels must be a nonempty subset of (0, 1)")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "a_values", tuple(float(a) for a in self.a_values))
        if self.trials < 1 or self.train_size < 1 or self.test_size < 1:
            raise ValueError("trials and set sizes must be positive")


@dataclass(frozen=True)
class MethodCurves:
    """Miss rate (fraction of labels outside the interval) and mean width per level."""

    miss: np.ndarray
    width: np.ndarray


@dataclass(frozen=True)
class ComparisonResult:
    levels: np.ndarray
    rrcm: dict  # a_assumed -> MethodCurves
    bayes: dict  # a_assumed -> MethodCurves
    n_predictions: int

    def curve_tables(self) -> dict[str, dict[str, np.ndarray]]:
        """Four plot-ready tables keyed by file stem, x column first."""
        tables = {}
        for method, curves in (("rrcm", self.rrcm), ("bayes", self.bayes)):
            for kind in ("validity", "efficiency"):
                cols = {"confidence_level": self.levels}
                for a, c in curves.items():
                    values = c.miss if kind == "validity" else c.width
                    name = "miss_rate" if kind == "validity" else "mean_width"
                    cols[f"{name}_a={a:g}"] = values
                tables[f"{method}_{kind}"] = cols
        return tables


def hulls_from_profile(profile, eps: np.ndarray):
    """Convex hull of {y : p(y) > eps} for an array of levels; NaN when empty."""
    left, right, p = profile.pieces()
    keep = p[None, :] > np.asarray(eps)[:, None]
    any_kept = keep.any(axis=1)
    first = np.argmax(keep, axis=1)
    last = keep.shape[1] - 1 - np.argmax(keep[:, ::-1], axis=1)
    lo = np.where(any_kept, left[first], np.nan)
    hi = np.where(any_kept, right[last], np.nan)
    return lo, hi


def _miss_and_width(lo, hi, y):
    empty = np.isnan(lo)
    miss = empty | (y < lo) | (y > hi)
    width = np.where(empty, 0.0, hi - lo)
    return miss, width


def run_comparison(grid: ExperimentGrid, spec: LinearModelSpec, seed) -> ComparisonResult:
    """Validity and efficiency curves of the ridge machine and the Bayes predictor.

    Each trial draws a new weight vector and fresh training/test sets from a
    substream keyed by ``(seed, trial)``; every ``a`` in the grid is evaluated
    on the same data. Rates and mean widths pool all test predictions.
    """
    levels = np.asarray(grid.levels)
    eps = 1.0 - levels
    z = normal_quantile(1.0 - eps / 2.0)
    acc = {
        (method, a): ([], [])
        for method in ("rrcm", "bayes")
        for a in grid.a_values
    }
    for trial in range(grid.trials):
        train, test, _ = generate_with_weights(
            spec, grid.train_size, grid.test_size, [int(seed), trial]
        )
        for a in grid.a_values:
            cfg = RidgeConfig(a)
            misses, widths = acc[("rrcm", a)]
            for x, y in zip(test.X, test.y):
                profile = p_value_profile(residual_lines(train, x, cfg))
                miss, width = _miss_and_width(*hulls_from_profile(profile, eps), y)
                misses.append(miss)
                widths.append(width)

            mean, sd = bayes_predictive(train, test.X, a)
            lo = mean[:, None] - z[None, :] * sd[:, None]
            hi = mean[:, None] + z[None, :] * sd[:, None]
            miss, width = _miss_and_width(lo, hi, test.y[:, None])
            acc[("bayes", a)][0].extend(miss)
            acc[("bayes", a)][1].extend(width)

    def curves(method, a):
        misses, widths = acc[(method, a)]
        return MethodCurves(
            np.mean(np.array(misses), axis=0), np.mean(np.array(widths), axis=0)
        )

    return ComparisonResult(
        levels=levels,
        rrcm={a: curves("rrcm", a) for a in grid.a_values},
        bayes={a: curves("bayes", a) for a in grid.a_values},
        n_predictions=grid.trials * grid.test_size,
    )
