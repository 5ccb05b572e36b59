"""Reproducing kernels, Gram matrices and double-centering."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateInputError, InputError

__all__ = [
    "KernelSpec",
    "GramMatrix",
    "kernel_eval",
    "gram",
    "cross_gram",
    "center_gram",
    "median_heuristic_sigma",
]


@dataclass(frozen=True)
class KernelSpec:
    """Reproducing kernel description.

    Parameters
    ----------
    family : {"gaussian", "polynomial"}
    sigma : float
        Length-scale of the gaussian kernel.
    degree : int
        Degree of the polynomial kernel.
    offset : float
        Additive constant of the polynomial kernel.
    """

    family: Literal["gaussian", "polynomial"] = "gaussian"
    sigma: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "polynomial"):
            raise InputError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InputError("sigma must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise InputError("degree must be a positive integer")


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix together with the kernel that built it."""

    entries: np.ndarray
    centered: bool
    kernel: KernelSpec

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError("expected a 2-D array of row vectors")
    return X


def _pairwise(A: np.ndarray, B: np.ndarray, k: KernelSpec) -> np.ndarray:
    if A.shape[1] != B.shape[1]:
        raise InputError(
            f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} columns")
    if k.family == "gaussian":
        return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * k.sigma ** 2))
    return (A @ B.T + k.offset) ** k.degree


def kernel_eval(k: KernelSpec, s, t) -> float:
    """Evaluate ``k(s, t)`` for two vectors of equal length."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if s.shape != t.shape or s.ndim != 1:
        raise InputError("s and t must be vectors of equal length")
    return float(_pairwise(s[None, :], t[None, :], k)[0, 0])


def gram(X, k: KernelSpec) -> GramMatrix:
    """Gram matrix ``R[i, j] = k(x_i, x_j)`` of the rows of `X`."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InputError("gram needs at least two rows")
    R = _pairwise(X, X, k)
    R = 0.5 * (R + R.T)
    return GramMatrix(R, False, k)


def cross_gram(X_train, X_new, k: KernelSpec) -> np.ndarray:
    """Kernel matrix with rows indexed by `X_train` and columns by `X_new`."""
    return _pairwise(_as_matrix(X_train), _as_matrix(X_new), k)


def center_gram(R: GramMatrix) -> GramMatrix:
    """Double-center a Gram matrix, ``H R H`` with ``H = I - J/n``.

    Raises
    ------
    InputError
        If `R` is already centered.
    """
    if R.centered:
        raise InputError("Gram matrix is already centered")
    E = R.entries
    Rc = E - E.mean(axis=0, keepdims=True)
    Rc = Rc - Rc.mean(axis=1, keepdims=True)
    Rc = 0.5 * (Rc + Rc.T)
    return GramMatrix(Rc, True, R.kernel)


def median_heuristic_sigma(X) -> float:
    """Median of the pairwise Euclidean distances between rows of `X`."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InputError("need at least two rows")
    d = pdist(X)
    if not np.any(d > 0):
        raise DegenerateInputError("all rows are identical")
    return float(np.median(d))
