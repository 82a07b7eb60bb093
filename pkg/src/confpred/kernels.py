"""Kernels, kernel-induced distances and the regularized linear solves used by
the ridge machinery."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .core import NumericalError


@dataclass(frozen=True)
class Linear:
    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return A @ B.T


@dataclass(frozen=True)
class Polynomial:
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree}")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return (A @ B.T + self.offset) ** int(self.degree)


@dataclass(frozen=True)
class RBF:
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"RBF gamma must be positive, got {self.gamma}")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return np.exp(-self.gamma * sq_euclidean(A, B))


KernelSpec = Union[Linear, Polynomial, RBF]


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``linear``, ``poly:DEGREE[:OFFSET]`` or ``rbf:GAMMA``."""
    name, *args = text.strip().lower().split(":")
    try:
        if name == "linear" and not args:
            return Linear()
        if name in ("poly", "polynomial") and 1 <= len(args) <= 2:
            return Polynomial(int(args[0]), float(args[1]) if len(args) > 1 else 1.0)
        if name == "rbf" and len(args) == 1:
            return RBF(float(args[0]))
    except ValueError as exc:
        raise ValueError(f"bad kernel spec {text!r}: {exc}") from None
    raise ValueError(f"bad kernel spec {text!r}")


def sq_euclidean(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_diag(kernel: KernelSpec, A: np.ndarray) -> np.ndarray:
    if isinstance(kernel, RBF):
        return np.ones(A.shape[0])
    if isinstance(kernel, Linear):
        return np.einsum("ij,ij->i", A, A)
    return np.array([kernel(a[None, :], a[None, :])[0, 0] for a in A])


def distances(kernel: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Feature-space distances ``||F(a) - F(b)||`` between rows of A and B.

    The linear kernel uses plain Euclidean differences (no cancellation);
    other kernels go through ``K(a,a) - 2K(a,b) + K(b,b)``, clamped at zero.
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if isinstance(kernel, Linear):
        return np.sqrt(sq_euclidean(A, B))
    sq = kernel_diag(kernel, A)[:, None] - 2.0 * kernel(A, B) + kernel_diag(kernel, B)[None, :]
    return np.sqrt(np.maximum(sq, 0.0))


def solve_regularized(M: np.ndarray, a: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(M + a I) z = rhs`` for symmetric positive semi-definite M.

    Raises NumericalError when the system is singular or ill-conditioned
    instead of returning garbage.
    """
    A = M + a * np.eye(M.shape[0])
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(A, rhs, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise NumericalError(
                f"regularized system (a={a}) is singular or ill-conditioned: {exc}"
            ) from None


def hat_matrix(X: np.ndarray, a: float, kernel: KernelSpec | None = None) -> np.ndarray:
    """Hat matrix of (kernel) ridge regression on the rows of X.

    ``X (X'X + aI)^-1 X'`` for the primal problem, ``K (K + aI)^-1`` with a kernel.
    """
    if kernel is None:
        return X @ solve_regularized(X.T @ X, a, X.T)
    K = kernel(X, X)
    # K (K + aI)^-1 is symmetric, so it equals (K + aI)^-1 K
    H = solve_regularized(K, a, K)
    return (H + H.T) / 2.0


def ridge_weights(X: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    return solve_regularized(X.T @ X, a, X.T @ y)


def kernel_ridge_dual(K: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    return solve_regularized(K, a, y)
