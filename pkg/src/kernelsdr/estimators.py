"""GS-KSIR-I/II and GS-KSAVE objectives, KSIR initialisation and fitting."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import linalg
from scipy.stats import rankdata

from .data import DataSet
from .errors import DegenerateInputError, InputError, NumericError
from .kernels import (GramMatrix, KernelSpec, center_gram, cross_gram, gram,
                      median_heuristic_sigma)
from .optimize import minimize
from .smoothing import (EPANECHNIKOV_SD_FACTOR, BandwidthSpec, SmootherMatrix,
                        default_bandwidth, nw_weights)

__all__ = [
    "METHODS",
    "FitConfig",
    "FitResult",
    "projected_features",
    "gsksir1_objective",
    "gsksir2_objective",
    "gsksave_objective",
    "Objective",
    "ksir_init",
    "fit",
    "transform",
]

log = logging.getLogger(__name__)

METHODS = ("gsksir1", "gsksir2", "gsksave", "ksir")
Method = Literal["gsksir1", "gsksir2", "gsksave", "ksir"]


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit`.

    Parameters
    ----------
    q : int
        Number of reduced predictors.
    lam : float
        Weight of the ``tr(C'C)`` penalty.
    h1, h2, h3, h4 : BandwidthSpec
        Smoothing bandwidths: `h1` and `h3` act on the response, `h2` and
        `h4` on the projected features.  ``auto`` picks them from the data.
    method : {"gsksir1", "gsksir2", "gsksave", "ksir"}
    max_iters, tol : int, float
        Optimiser budget and relative-decrease stopping threshold.
    seed : int
        Seed for anything randomised downstream (fold assignment).
    n_slices, ridge : int, float
        Slicing and Tikhonov settings of the KSIR initialiser.
    sigma : float, optional
        Gaussian kernel scale; median heuristic when omitted.
    standardize : bool
        Z-score the predictors before building the Gram matrix.
    bandwidth_scale : {"robust", "sd"}
        Spread estimate fed to the automatic bandwidth rule.
    support_factor : float
        Multiplier turning the rule-of-thumb bandwidth into the kernel's
        support half-width.  The default corresponds to a unit-variance
        Epanechnikov kernel.
    precondition : bool
        Search along Gram eigenvectors scaled by inverse eigenvalues, so a
        unit step moves the projected features by a unit amount.
    rank_tol : float
        Gram eigenvectors with eigenvalue below ``rank_tol * max`` are left
        out of the search space.
    normalize : bool
        Hold each column's ``c' R~ c`` at its starting value.
    first_step : float
        Length of the first step relative to the spread of the starting
        projected features.
    """

    q: int = 2
    lam: float = 0.0
    h1: BandwidthSpec = field(default_factory=BandwidthSpec)
    h2: BandwidthSpec = field(default_factory=BandwidthSpec)
    h3: BandwidthSpec = field(default_factory=BandwidthSpec)
    h4: BandwidthSpec = field(default_factory=BandwidthSpec)
    method: Method = "gsksir1"
    max_iters: int = 30
    tol: float = 1e-6
    seed: int = 0
    n_slices: int = 10
    ridge: float = 1e-4
    sigma: float | None = None
    standardize: bool = True
    bandwidth_scale: Literal["robust", "sd"] = "robust"
    support_factor: float = EPANECHNIKOV_SD_FACTOR
    precondition: bool = True
    rank_tol: float = 1e-3
    normalize: bool = True
    first_step: float = 0.01

    def __post_init__(self) -> None:
        if int(self.q) != self.q or self.q < 1:
            raise InputError("q must be a positive integer")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InputError("lambda must be nonnegative")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.n_slices < 2:
            raise InputError("n_slices must be at least 2")
        if not self.ridge > 0:
            raise InputError("ridge must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise InputError("sigma must be positive")
        if not self.support_factor > 0 or not self.first_step > 0:
            raise InputError("support_factor and first_step must be positive")
        for name in ("h1", "h2", "h3", "h4"):
            if not isinstance(getattr(self, name), BandwidthSpec):
                raise InputError(f"{name} must be a BandwidthSpec")

    def with_(self, **kw) -> "FitConfig":
        return replace(self, **kw)


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``bandwidths_used`` holds ``(h1, h2, h3, h4)``.  ``objective_init`` is
    the objective at the KSIR starting point and equals
    ``objective_trace[0]`` for the iterative methods.
    """

    C: np.ndarray
    objective_trace: list[float]
    lambda_used: float
    bandwidths_used: tuple[float, float, float, float]
    converged: bool
    iterations: int
    method: str
    kernel: KernelSpec
    X_train: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    C0: np.ndarray
    objective_init: float

    def _prep(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.X_train.shape[1]:
            raise InputError("new data has the wrong number of columns")
        return (X - self.x_mean) / self.x_scale

    def cross_kernel(self, X_new) -> np.ndarray:
        """Kernel matrix between training points (rows) and `X_new`."""
        return cross_gram(self.X_train, self._prep(X_new), self.kernel)

    def project(self, X_new) -> np.ndarray:
        """Reduced predictors ``C' R(X_train, X_new)``, shape ``(q, m)``."""
        return transform(self, self.cross_kernel(X_new))

    @property
    def U_train(self) -> np.ndarray:
        return transform(self, cross_gram(self.X_train, self.X_train, self.kernel))


def _entries(R) -> np.ndarray:
    return R.entries if isinstance(R, GramMatrix) else np.asarray(R, dtype=float)


def _weights(K) -> np.ndarray:
    return K.weights if isinstance(K, SmootherMatrix) else np.asarray(K, dtype=float)


def projected_features(C, R) -> np.ndarray:
    """Matrix whose column ``i`` is ``C' R[:, i]``, shape ``(q, n)``."""
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    E = _entries(R)
    if E.shape[0] != C.shape[0]:
        raise InputError(f"C has {C.shape[0]} rows, Gram matrix has {E.shape[0]}")
    return C.T @ E


def _penalty(C: np.ndarray, lam: float) -> float:
    return lam * float(np.sum(C * C))


def _k2(C, Rraw, h2, K2):
    if K2 is not None:
        return _weights(K2)
    return nw_weights(projected_features(C, Rraw).T, h2).weights


def gsksir1_objective(C, Rc, Rraw, K1, h2: float, lam: float = 0.0,
                      K2=None) -> float:
    """``|R~ K1 (I - K2)(I - K2)' R~|_F^2 + lam tr(C'C)``.

    `K2` is rebuilt from the projected features ``C' R`` with bandwidth
    `h2` unless passed explicitly.
    """
    C = np.asarray(C, dtype=float).reshape(_entries(Rraw).shape[0], -1)
    Rc_, K1_ = _entries(Rc), _weights(K1)
    M = np.eye(len(Rc_)) - _k2(C, Rraw, h2, K2)
    T = Rc_ @ K1_ @ M @ M.T @ Rc_
    return float(np.sum(T * T)) + _penalty(C, lam)


def gsksir2_objective(C, Rc, Rraw, K1, K3, h2: float, lam: float = 0.0,
                      K2=None) -> float:
    """``|R~ (K1 - K2 K3)(K1 - K2 K3)' R~|_F^2 + lam tr(C'C)``."""
    C = np.asarray(C, dtype=float).reshape(_entries(Rraw).shape[0], -1)
    Rc_ = _entries(Rc)
    L = _weights(K1) - _k2(C, Rraw, h2, K2) @ _weights(K3)
    T = Rc_ @ L @ L.T @ Rc_
    return float(np.sum(T * T)) + _penalty(C, lam)


def _ksave_residual(Rraw: np.ndarray, K1: np.ndarray, K3: np.ndarray,
                    K2: np.ndarray, K4: np.ndarray) -> np.ndarray:
    dR = np.diag(Rraw)
    RK1, RK2 = Rraw @ K1, Rraw @ K2
    q11 = np.einsum("ij,ij->j", K1, RK1)
    q22 = np.einsum("ij,ij->j", K2, RK2)
    D1 = 1.0 + q11
    D2 = dR - np.diag(RK1) - np.diag(RK2) + q11 + q22
    M1 = np.diag(D1) - dR[:, None] * K3
    M2 = np.diag(D2) - dR[:, None] * K4
    return M1.T @ M2


def gsksave_objective(C, Rraw, K1, K3, h2: float, h4: float,
                      lam: float = 0.0, K2=None, K4=None) -> float:
    """Sliced-average-variance analogue built from raw Gram entries.

    The residual is ``(D1 - diag(R) K3)' (D2 - diag(R) K4)`` with
    ``D1 = diag(I + K1' R K1)`` and
    ``D2 = diag(R - R K1 - R K2 + K1' R K1 + K2' R K2)``;
    `K1`, `K3` smooth the response and `K2`, `K4` the projected features.
    """
    R = _entries(Rraw)
    C = np.asarray(C, dtype=float).reshape(R.shape[0], -1)
    if K2 is None or K4 is None:
        P = projected_features(C, R).T
        K2 = nw_weights(P, h2).weights if K2 is None else _weights(K2)
        K4 = nw_weights(P, h4).weights if K4 is None else _weights(K4)
    T = _ksave_residual(R, _weights(K1), _weights(K3), _weights(K2), _weights(K4))
    return float(np.sum(T * T)) + _penalty(C, lam)


class Objective:
    """Fast evaluator for the penalised objectives at fixed data.

    ``R~ = V diag(w) V'`` so ``|R~ X R~|_F = |(V w)' X (V w)|_F``, which
    replaces two ``n x n`` products by thin ones.
    """

    def __init__(self, method: str, Rc: np.ndarray, Rraw: np.ndarray,
                 K1: np.ndarray, K3: np.ndarray | None, h2: float,
                 h4: float | None = None, lam: float = 0.0):
        if method not in ("gsksir1", "gsksir2", "gsksave"):
            raise InputError(f"no objective for method {method!r}")
        self.method, self.Rraw, self.K1, self.K3 = method, Rraw, K1, K3
        self.h2, self.h4, self.lam = h2, (h2 if h4 is None else h4), lam
        self.n = Rraw.shape[0]
        if method != "gsksave":
            w, V = linalg.eigh(Rc)
            keep = w > 1e-12 * max(w.max(), 1e-300)
            self.Vd = np.ascontiguousarray(V[:, keep] * w[keep])
            self.A = self.Vd.T @ K1
        self.evaluations = 0

    def data(self, C: np.ndarray) -> float:
        self.evaluations += 1
        P = (C.T @ self.Rraw).T
        K2 = nw_weights(P, self.h2).weights
        if self.method == "gsksir1":
            M = np.eye(self.n) - K2
            T = (self.A @ M) @ (M.T @ self.Vd)
        elif self.method == "gsksir2":
            L = self.A - (self.Vd.T @ K2) @ self.K3
            T = L @ L.T
        else:
            K4 = K2 if self.h4 == self.h2 else nw_weights(P, self.h4).weights
            T = _ksave_residual(self.Rraw, self.K1, self.K3, K2, K4)
        return float(np.sum(T * T))

    def __call__(self, C: np.ndarray) -> float:
        return self.data(C) + _penalty(C, self.lam)


def _slices(y: np.ndarray, n_slices: int) -> np.ndarray:
    n = len(y)
    ranks = rankdata(y, method="ordinal") - 1
    return np.floor(ranks * n_slices / n).astype(int)


def ksir_init(Rc, y, q: int, n_slices: int = 10, ridge: float = 1e-4) -> np.ndarray:
    """Kernel sliced inverse regression directions.

    Solves ``R~ W R~ c = mu (R~ R~ + n ridge I) c`` where ``W`` is the
    between-slice covariance of the slice-mean weight vectors, and returns
    the leading `q` eigenvectors scaled so that ``c' R~ c = 1``.

    Raises
    ------
    DegenerateInputError
        If the response is constant or the slices carry no signal.
    """
    R = _entries(Rc)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if R.shape != (n, n):
        raise InputError("Gram matrix and response sizes differ")
    if not 1 <= q < n:
        raise InputError("q must satisfy 1 <= q < n")
    if np.ptp(y) == 0:
        raise DegenerateInputError("constant response: no directional signal")
    H = min(n_slices, n)
    sl = _slices(y, H)
    counts = np.bincount(sl, minlength=H)
    if np.any(counts == 0):
        H = max(2, H // 2)
        sl = _slices(y, H)
        counts = np.bincount(sl, minlength=H)
        if np.any(counts == 0):
            raise InputError("empty slice after reducing the slice count")
    M = np.zeros((n, H))
    M[np.arange(n), sl] = 1.0 / counts[sl]
    D = M - 1.0 / n
    Om = (D * (counts / n)) @ D.T
    A = R @ Om @ R
    B = R @ R + n * ridge * np.eye(n)
    try:
        mu, V = linalg.eigh(0.5 * (A + A.T), 0.5 * (B + B.T))
    except linalg.LinAlgError as exc:
        raise NumericError(f"KSIR eigenproblem failed: {exc}") from exc
    if mu[-1] <= 1e-12 * max(np.abs(mu).max(), 1e-300) or mu[-1] <= 0:
        raise DegenerateInputError("no directional signal in the slices")
    C = V[:, ::-1][:, :q]
    nrm = np.sqrt(np.einsum("ij,ik,kj->j", C, R, C))
    if not np.all(nrm > 0):
        raise NumericError("KSIR direction with zero RKHS norm")
    return np.ascontiguousarray(C / nrm)


def _standardize(X: np.ndarray, enabled: bool):
    if not enabled:
        return X, np.zeros(X.shape[1]), np.ones(X.shape[1])
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd, mu, sd


def _auto_h(spec: BandwidthSpec, values, cfg: FitConfig) -> float:
    if spec.mode == "fixed":
        return float(spec.value)
    return cfg.support_factor * default_bandwidth(values, cfg.bandwidth_scale)


def fit(ds: DataSet, cfg: FitConfig) -> FitResult:
    """Estimate the reduced-predictor coefficients for `ds`.

    The Gram matrix of the (standardised) predictors is centered, the
    response smoothers are built, KSIR supplies the starting point and the
    selected objective is minimised from there.  ``method="ksir"`` stops
    after the initialisation.
    """
    if not cfg.q < ds.n:
        raise InputError("q must be smaller than the sample size")
    Z, mu, sd = _standardize(ds.X, cfg.standardize)
    sigma = cfg.sigma if cfg.sigma is not None else median_heuristic_sigma(Z)
    kern = KernelSpec("gaussian", sigma)
    G = gram(Z, kern)
    Gc = center_gram(G)
    R, Rc = G.entries, Gc.entries
    y = ds.y
    C0 = ksir_init(Rc, y, cfg.q, cfg.n_slices, cfg.ridge)
    h1 = _auto_h(cfg.h1, y, cfg)
    h3 = _auto_h(cfg.h3, y, cfg) if cfg.h3.mode == "fixed" else h1
    P0 = projected_features(C0, R).T
    h2 = _auto_h(cfg.h2, P0, cfg)
    h4 = float(cfg.h4.value) if cfg.h4.mode == "fixed" else h2
    bws = (h1, h2, h3, h4)
    K1 = nw_weights(y, h1).weights
    K3 = K1 if h3 == h1 else nw_weights(y, h3).weights
    common = dict(lambda_used=cfg.lam, bandwidths_used=bws, method=cfg.method,
                  kernel=kern, X_train=Z, x_mean=mu, x_scale=sd, C0=C0)
    if cfg.method == "ksir":
        return FitResult(C=C0, objective_trace=[], converged=True, iterations=0,
                         objective_init=float("nan"), **common)
    obj = Objective(cfg.method, Rc, R, K1, K3, h2, h4, cfg.lam)
    w, V = linalg.eigh(R)
    keep = w > cfg.rank_tol * w.max()
    basis = V[:, keep] / w[keep] if cfg.precondition else V[:, keep]
    spread = np.linalg.norm(P0 - P0.mean(axis=0))
    scale = spread if cfg.precondition else np.linalg.norm(C0)
    C, res = minimize(obj, C0, max_iters=cfg.max_iters, tol=cfg.tol,
                      basis=basis, metric=Rc if cfg.normalize else None,
                      first_step=cfg.first_step * max(scale, 1e-12))
    f0 = res.trace[0]
    log.debug("%s: %d iterations, objective %.4g -> %.4g",
              cfg.method, res.iterations, f0, res.trace[-1])
    return FitResult(C=C, objective_trace=[float(v) for v in res.trace],
                     converged=res.converged, iterations=res.iterations,
                     objective_init=float(f0), **common)


def transform(fit_result: FitResult, Rcross) -> np.ndarray:
    """``C' Rcross`` for a training-by-new kernel matrix."""
    K = np.asarray(Rcross, dtype=float)
    if K.ndim == 1:
        K = K[:, None]
    C = fit_result.C
    if K.shape[0] != C.shape[0]:
        raise InputError(f"cross kernel has {K.shape[0]} rows, expected {C.shape[0]}")
    return C.T @ K
