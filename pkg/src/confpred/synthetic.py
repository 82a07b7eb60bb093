"""Seeded synthetic data for the Monte-Carlo checks and the CLI demos."""

from __future__ import annotations

import numpy as np

from .core import ClassAlphabet, Dataset


def gaussian_classes(
    n: int,
    seed,
    dim: int = 2,
    separation: float = 2.0,
    labels: tuple = ("A", "B"),
) -> Dataset:
    """i.i.d. examples: label uniform over ``labels``, object ~ N(mean_label, I).

    Class means sit on the first axis, ``separation`` apart.
    """
    rng = np.random.default_rng(seed)
    codes = rng.integers(len(labels), size=n)
    X = rng.standard_normal((n, dim))
    X[:, 0] += separation * codes
    return Dataset(X, [labels[c] for c in codes], ClassAlphabet(labels), dim=dim)
