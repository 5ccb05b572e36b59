"""Accuracy metrics, cross-validation for the penalty and kernel ridge."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import linalg

from .data import DataSet
from .errors import DegenerateInputError, InputError, NumericError
from .estimators import FitConfig, fit
from .kernels import KernelSpec, cross_gram, gram, median_heuristic_sigma

__all__ = [
    "multiple_correlation",
    "kcca_score",
    "CvReport",
    "stratified_folds",
    "cv_select_lambda",
    "KernelRidgeModel",
    "kernel_ridge_fit",
    "kernel_ridge_predict",
    "pmae",
    "PredictionReport",
    "cv_prediction",
]


def _rows(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[None, :]
    if U.ndim != 2:
        raise InputError("expected a k x n matrix")
    return U


def _row_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis (n x r) of the span of the centered rows of A."""
    Q, sv, _ = linalg.svd(A.T, full_matrices=False)
    if sv.size == 0 or not sv[0] > 0:
        return Q[:, :0]
    return Q[:, sv > max(A.shape) * np.finfo(float).eps * sv[0]]


def multiple_correlation(U, V) -> float:
    """Average squared canonical correlation between the rows of U and V.

    Returns the mean of the nonzero eigenvalues of
    ``Suu^{-1/2} Suv Svv^{-1} Svu Suu^{-1/2}``; eigenvalues at or below
    ``1e-10`` times the largest are treated as zero.  The eigenvalues are
    obtained as squared singular values of ``Qu' Qv`` where ``Qu``, ``Qv``
    are orthonormal bases of the centered rows, which equals the displayed
    matrix with pseudo-inverses in place of inverses.
    """
    U, V = _rows(U), _rows(V)
    if U.shape[1] != V.shape[1]:
        raise InputError("U and V must have the same number of columns")
    Qu = _row_basis(U - U.mean(axis=1, keepdims=True))
    Qv = _row_basis(V - V.mean(axis=1, keepdims=True))
    if Qu.shape[1] == 0 or Qv.shape[1] == 0:
        warnings.warn("rank-zero argument; correlation set to 0", RuntimeWarning)
        return 0.0
    ev = linalg.svdvals(Qu.T @ Qv) ** 2
    top = ev.max()
    if not top > 0:
        return 0.0
    ev = ev[ev > 1e-10 * top]
    return float(np.clip(ev.mean(), 0.0, 1.0))


def _centered_gauss(U: np.ndarray) -> np.ndarray:
    """Centered gaussian Gram of the columns of U after z-scoring rows."""
    sd = U.std(axis=1, keepdims=True)
    Z = ((U - U.mean(axis=1, keepdims=True)) / np.where(sd > 0, sd, 1.0)).T
    try:
        sigma = median_heuristic_sigma(Z)
    except DegenerateInputError:
        return np.zeros((Z.shape[0], Z.shape[0]))
    G = gram(Z, KernelSpec("gaussian", sigma)).entries
    G = G - G.mean(axis=0)
    G = G - G.mean(axis=1, keepdims=True)
    return 0.5 * (G + G.T)


def _shrunk(G: np.ndarray, kappa: float) -> np.ndarray:
    d, Q = linalg.eigh(G)
    d = np.maximum(d, 0.0)
    return (Q * (d / np.sqrt(d * d + kappa))) @ Q.T


def kcca_score(U, y, reg: float = 0.1) -> float:
    """First regularised kernel canonical correlation between U and y.

    With centered gaussian Grams ``Gu``, ``Gy`` and ``kappa = reg * m``, the
    score is the largest ``rho`` solving
    ``Gu Gy b = rho (Gu^2 + kappa I) a``, ``Gy Gu a = rho (Gy^2 + kappa I) b``,
    i.e. the top singular value of
    ``(Gu^2 + kappa I)^{-1/2} Gu Gy (Gy^2 + kappa I)^{-1/2}``.
    """
    U = _rows(U)
    y = np.asarray(y, dtype=float).ravel()
    m = len(y)
    if U.shape[1] != m:
        raise InputError("U and y sizes differ")
    if m < 5:
        raise InputError("kcca_score needs at least 5 points")
    if not reg > 0:
        raise InputError("reg must be positive")
    kappa = reg * m
    try:
        A = _shrunk(_centered_gauss(U), kappa)
        B = _shrunk(_centered_gauss(y[None, :]), kappa)
        rho = linalg.svdvals(A @ B)[0]
    except linalg.LinAlgError as exc:
        raise NumericError(f"KCCA eigenproblem failed: {exc}") from exc
    return float(np.clip(rho, 0.0, 1.0))


@dataclass(frozen=True)
class KernelRidgeModel:
    U_train: np.ndarray
    u_mean: np.ndarray
    u_scale: np.ndarray
    kernel: KernelSpec
    alpha: np.ndarray
    y_mean: float


def _scale_rows(U: np.ndarray):
    mu = U.mean(axis=1, keepdims=True)
    sd = U.std(axis=1, keepdims=True)
    return mu, np.where(sd > 0, sd, 1.0)


def kernel_ridge_fit(U, y, reg: float = 1e-3) -> KernelRidgeModel:
    """Gaussian kernel ridge regression of y on the columns of U.

    Rows of U are z-scored, the response is centered, and
    ``(G + reg n I) alpha = y - mean(y)`` is solved.
    """
    U = _rows(U)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if U.shape[1] != n:
        raise InputError("U and y sizes differ")
    if not reg > 0:
        raise InputError("reg must be positive")
    mu, sd = _scale_rows(U)
    Z = ((U - mu) / sd).T
    try:
        sigma = median_heuristic_sigma(Z)
    except DegenerateInputError:
        sigma = 1.0
    k = KernelSpec("gaussian", sigma)
    G = gram(Z, k).entries
    ym = float(y.mean())
    try:
        alpha = linalg.solve(G + reg * n * np.eye(n), y - ym, assume_a="pos")
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"kernel ridge solve failed: {exc}") from exc
    if not np.all(np.isfinite(alpha)):
        raise NumericError("kernel ridge produced non-finite coefficients")
    return KernelRidgeModel(Z, mu, sd, k, alpha, ym)


def kernel_ridge_predict(model: KernelRidgeModel, U_new) -> np.ndarray:
    U_new = _rows(U_new)
    Z = ((U_new - model.u_mean) / model.u_scale).T
    return cross_gram(Z, model.U_train, model.kernel) @ model.alpha + model.y_mean


def pmae(y_true, y_pred) -> float:
    """Mean absolute prediction error."""
    a = np.asarray(y_true, dtype=float).ravel()
    b = np.asarray(y_pred, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError("y_true and y_pred lengths differ")
    return float(np.mean(np.abs(a - b)))


@dataclass(frozen=True)
class CvReport:
    lambda_grid: np.ndarray
    scores: np.ndarray
    best_lambda: float
    fold_count: int
    criterion: str = "kcca"


def stratified_folds(y, k: int, seed: int) -> np.ndarray:
    """Fold label per observation, balanced across response quantiles.

    Observations are sorted by y and cut into consecutive blocks of `k`;
    each block's members receive a random permutation of the labels.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if k < 2 or k > n:
        raise InputError("number of folds must be in [2, n]")
    rng = np.random.Generator(np.random.Philox(seed))
    order = np.argsort(y, kind="stable")
    labels = np.empty(n, dtype=int)
    for start in range(0, n, k):
        block = order[start:start + k]
        labels[block] = rng.permutation(k)[:len(block)]
    return labels


def _fold_score(ds: DataSet, cfg: FitConfig, train: np.ndarray, test: np.ndarray,
                criterion: str, reg: float) -> float:
    res = fit(ds.subset(train), cfg)
    U_test = res.project(ds.X[test])
    if criterion == "kcca":
        return kcca_score(U_test, ds.y[test], reg)
    model = kernel_ridge_fit(res.U_train, ds.y[train])
    err = ds.y[test] - kernel_ridge_predict(model, U_test)
    return -float(np.mean(err * err))


def cv_select_lambda(ds: DataSet, cfg: FitConfig, grid: Sequence[float],
                     k: int = 5,
                     criterion: Literal["kcca", "prediction"] = "kcca",
                     kcca_reg: float = 0.1) -> CvReport:
    """Choose the penalty weight by k-fold cross-validation.

    Each candidate is scored by the mean held-out KCCA between projected
    features and response (``"kcca"``) or by minus the mean squared error
    of a kernel ridge fit on the projected features (``"prediction"``).
    The smallest penalty among tied best scores wins.
    """
    grid_arr = np.asarray(list(grid), dtype=float)
    if grid_arr.size == 0:
        raise InputError("lambda grid is empty")
    if np.any(grid_arr < 0) or not np.all(np.isfinite(grid_arr)):
        raise InputError("lambda grid values must be finite and nonnegative")
    if criterion not in ("kcca", "prediction"):
        raise InputError(f"unknown criterion {criterion!r}")
    labels = stratified_folds(ds.y, k, cfg.seed)
    sizes = np.bincount(labels, minlength=k)
    if sizes.min() < cfg.q + 2:
        raise InputError("fold too small for the requested q")
    scores = np.empty(grid_arr.size)
    for g, lam in enumerate(grid_arr):
        c = cfg.with_(lam=float(lam))
        vals = [_fold_score(ds, c, np.flatnonzero(labels != f),
                            np.flatnonzero(labels == f), criterion, kcca_reg)
                for f in range(k)]
        scores[g] = float(np.mean(vals))
    best = scores.max()
    tied = grid_arr[scores == best]
    return CvReport(grid_arr, scores, float(tied.min()), k, criterion)


@dataclass(frozen=True)
class PredictionReport:
    fold_pmae: np.ndarray
    fold_baseline: np.ndarray
    fold_sizes: np.ndarray

    @property
    def mean_pmae(self) -> float:
        return float(np.average(self.fold_pmae, weights=self.fold_sizes))

    @property
    def mean_baseline(self) -> float:
        return float(np.average(self.fold_baseline, weights=self.fold_sizes))


def cv_prediction(ds: DataSet, cfg: FitConfig, k: int = 5,
                  reg: float = 1e-3) -> PredictionReport:
    """k-fold PMAE of kernel ridge on the estimated reduced predictors.

    Each fold also records the PMAE of predicting the training-fold mean,
    as a baseline.
    """
    labels = stratified_folds(ds.y, k, cfg.seed)
    out, base, sizes = [], [], []
    for f in range(k):
        test, train = np.flatnonzero(labels == f), np.flatnonzero(labels != f)
        if len(test) == 0:
            continue
        res = fit(ds.subset(train), cfg)
        model = kernel_ridge_fit(res.U_train, ds.y[train], reg)
        pred = kernel_ridge_predict(model, res.project(ds.X[test]))
        out.append(pmae(ds.y[test], pred))
        base.append(pmae(ds.y[test], np.full(len(test), ds.y[train].mean())))
        sizes.append(len(test))
    return PredictionReport(np.array(out), np.array(base), np.array(sizes))
