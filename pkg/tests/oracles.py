"""Independent brute-force references used by several test modules."""

import numpy as np

from confpred.conformal import p_value
from confpred.core import Dataset, RealLine, complete
from confpred.nonconformity import residual_scores

GRID_STEP = 1e-3
GRID_BOUND = 1e3


def random_regression_problem(rng, max_l=20, max_p=3, a_values=(0.1, 1.0, 10.0)):
    l = int(rng.integers(1, max_l + 1))
    p = int(rng.integers(1, max_p + 1))
    w = rng.normal(size=p) * 2
    X = rng.normal(size=(l, p))
    y = X @ w + rng.normal(size=l)
    x = rng.normal(size=p)
    a = float(rng.choice(a_values))
    return Dataset(X, y, RealLine(), dim=p), x, a


def refit_p_value(training, x, y, cfg):
    """p-value of candidate y by completing, refitting and ranking residuals."""
    return p_value(residual_scores(complete(training, x, float(y)), cfg))


def grid():
    k = int(round(GRID_BOUND / GRID_STEP))
    return np.arange(-k, k + 1) * GRID_STEP


def grid_mismatches(lines, gamma, eps, ys=None, chunk=200_000):
    """Grid points where exact membership differs from the scanned p(y) > eps.

    Points within one grid step of an endpoint of ``gamma`` are skipped, so a
    result of zero means every boundary agrees with the scan to one step and
    every interior membership agrees exactly.
    """
    ys = grid() if ys is None else ys
    ends = np.array([e for iv in gamma for e in iv if np.isfinite(e)])
    bad = 0
    for start in range(0, ys.size, chunk):
        y = ys[start:start + chunk]
        scanned = lines.p_value(y) > eps
        exact = np.zeros(y.size, dtype=bool)
        for lo, hi in gamma:
            exact |= (y >= lo) & (y <= hi)
        near = np.zeros(y.size, dtype=bool)
        if ends.size:
            idx = np.searchsorted(np.sort(ends), y)
            srt = np.sort(ends)
            left = np.abs(y - srt[np.clip(idx - 1, 0, srt.size - 1)])
            right = np.abs(y - srt[np.clip(idx, 0, srt.size - 1)])
            near = np.minimum(left, right) <= GRID_STEP
        bad += int(np.count_nonzero((scanned != exact) & ~near))
    return bad


def scanned_hull(lines, eps, ys=None):
    """Convex hull of the grid points with p(y) > eps (None if none)."""
    ys = grid() if ys is None else ys
    keep = np.concatenate([lines.p_value(ys[i:i + 200_000]) > eps for i in range(0, ys.size, 200_000)])
    if not keep.any():
        return None
    idx = np.flatnonzero(keep)
    return ys[idx[0]], ys[idx[-1]]
