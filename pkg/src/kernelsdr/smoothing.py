"""Epanechnikov smoothing: bandwidths and Nadaraya-Watson weight matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateInputError, InputError

__all__ = [
    "SmootherMatrix",
    "BandwidthSpec",
    "epanechnikov",
    "default_bandwidth",
    "nw_weights",
    "EPANECHNIKOV_SD_FACTOR",
]

# Support half-width of an Epanechnikov kernel rescaled to unit variance.
EPANECHNIKOV_SD_FACTOR = float(np.sqrt(5.0))


@dataclass(frozen=True)
class SmootherMatrix:
    """Column-stochastic Nadaraya-Watson weights.

    ``weights[i, j]`` is the weight that observation ``i`` receives when
    smoothing at observation ``j``.
    """

    weights: np.ndarray
    bandwidth: float
    source: Literal["response", "projected_features"] = "response"


@dataclass(frozen=True)
class BandwidthSpec:
    """Either ``auto`` (data-driven) or a ``fixed`` positive value."""

    mode: Literal["auto", "fixed"] = "auto"
    value: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("auto", "fixed"):
            raise InputError(f"unknown bandwidth mode {self.mode!r}")
        if self.mode == "fixed" and not (
                self.value is not None and np.isfinite(self.value) and self.value > 0):
            raise InputError("a fixed bandwidth needs a positive value")

    @classmethod
    def of(cls, value: float | None) -> "BandwidthSpec":
        return cls() if value is None else cls("fixed", float(value))


def _as_matrix(values) -> np.ndarray:
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2:
        raise InputError("values must be a vector or an n x d matrix")
    return V


def epanechnikov(u, h: float) -> float:
    """Product Epanechnikov kernel ``prod_j 0.75/h (1 - (u_j/h)^2)_+``."""
    if not h > 0:
        raise InputError("bandwidth must be positive")
    z = np.atleast_1d(np.asarray(u, dtype=float)) / h
    vals = np.where(np.abs(z) <= 1.0, 0.75 / h * (1.0 - z * z), 0.0)
    return float(np.prod(vals))


def default_bandwidth(values, scale: Literal["sd", "robust"] = "sd") -> float:
    """Rule-of-thumb bandwidth ``1.06 * s * n**(-1/(4+d))``.

    Parameters
    ----------
    values : array_like, shape (n,) or (n, d)
    scale : {"sd", "robust"}
        ``"sd"`` takes ``s`` as the mean per-coordinate standard deviation.
        ``"robust"`` uses the normalised median absolute deviation per
        coordinate instead, falling back to the standard deviation where
        the MAD is zero.
    """
    V = _as_matrix(values)
    n, d = V.shape
    if n < 2:
        raise InputError("need at least two observations")
    sd = V.std(axis=0, ddof=1)
    if not np.any(sd > 0):
        raise DegenerateInputError("values have zero spread in every coordinate")
    if scale == "sd":
        s = sd
    elif scale == "robust":
        mad = np.median(np.abs(V - np.median(V, axis=0)), axis=0) / 0.6745
        s = np.where(mad > 0, mad, sd)
    else:
        raise InputError(f"unknown scale {scale!r}")
    sbar = float(np.mean(s))
    return max(1.06 * sbar * n ** (-1.0 / (4 + d)), 1e-6 * sbar)


def nw_weights(values, h: float,
               source: Literal["response", "projected_features"] = "response"
               ) -> SmootherMatrix:
    """Nadaraya-Watson weight matrix with the product Epanechnikov kernel.

    ``weights[i, j] = K_h(v_i - v_j) / sum_l K_h(v_l - v_j)``; the diagonal
    term is kept in the denominator, so every column has positive mass.
    Columns whose mass underflows are replaced by uniform weights.
    """
    if not (np.isfinite(h) and h > 0):
        raise InputError("bandwidth must be positive")
    V = _as_matrix(values)
    n = V.shape[0]
    K = np.ones((n, n))
    for col in V.T:
        z = (col[:, None] - col[None, :]) / h
        K *= np.maximum(1.0 - z * z, 0.0)
    # The 0.75/h normalising constants cancel in the ratio.
    s = K.sum(axis=0)
    bad = ~(s > 0) | ~np.isfinite(s)
    if np.any(bad):
        K[:, bad] = 1.0
        s[bad] = n
    return SmootherMatrix(K / s, float(h), source)
