"""Quasi-Newton minimisation with finite-difference gradients."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, NumericError

__all__ = ["MinimizeResult", "fd_gradient", "quasi_newton", "minimize"]

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MIN_STEP = 1e-10


@dataclass
class MinimizeResult:
    x: np.ndarray
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                rel_step: float = 1e-5) -> np.ndarray:
    """Central differences with step ``rel_step * (1 + |x_i|)``."""
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
        e[i] = 0.0
    return g


def _checked(f: Callable[[np.ndarray], float], it: int):
    def wrapped(x):
        v = float(f(x))
        if not np.isfinite(v):
            raise NumericError(f"non-finite objective at iteration {it}")
        return v
    return wrapped


def quasi_newton(f: Callable[[np.ndarray], float], x0: np.ndarray, *,
                 max_iters: int = 50, tol: float = 1e-6,
                 first_step: float | None = None,
                 grad: Callable[[np.ndarray], np.ndarray] | None = None
                 ) -> MinimizeResult:
    """BFGS on a flat parameter vector.

    The line search starts at the full step and halves it until the Armijo
    condition holds and the objective strictly decreases.  Iteration stops
    once the relative decrease falls below `tol`, the line search fails, or
    `max_iters` steps have been accepted.

    Parameters
    ----------
    first_step : float, optional
        Length of the initial steepest-descent step (and of any restart).
        Defaults to ``max(1, |x0|)``.
    """
    if max_iters < 1 or not tol > 0:
        raise InputError("max_iters must be >= 1 and tol > 0")
    x = np.array(x0, dtype=float).ravel()
    fx = _checked(f, 0)(x)
    if first_step is None:
        first_step = max(1.0, float(np.linalg.norm(x)))
    grad = grad or (lambda v: fd_gradient(f, v))
    g = grad(x)
    H = None
    res = MinimizeResult(x, [fx])
    for it in range(1, max_iters + 1):
        fc = _checked(f, it)
        d = -g if H is None else -(H @ g)
        if g @ d >= 0:
            H, d = None, -g
        gnorm = np.linalg.norm(d)
        if gnorm == 0:
            res.converged = True
            break
        if H is None:
            d = d * (first_step / gnorm)
        slope = g @ d
        t = 1.0
        while True:
            xn = x + t * d
            fn = fc(xn)
            if fn < fx and fn <= fx + ARMIJO_C * t * slope:
                break
            t *= 0.5
            if t < MIN_STEP:
                xn = None
                break
        if xn is None:
            if H is not None:
                # Retry once from a steepest-descent direction.
                H = None
                continue
            log.debug("line search failed at iteration %d", it)
            res.converged = True
            break
        gn = grad(xn)
        s, yv = xn - x, gn - g
        sy = s @ yv
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            if H is None:
                H = (sy / (yv @ yv)) * np.eye(x.size)
            rho = 1.0 / sy
            Hy = H @ yv
            H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                 + (rho * rho * (yv @ Hy) + rho) * np.outer(s, s))
        rel = (fx - fn) / max(abs(fx), 1e-300)
        x, fx, g = xn, fn, gn
        res.trace.append(fx)
        res.iterations = it
        if rel < tol:
            res.converged = True
            break
    res.x = x
    return res


def minimize(objective: Callable[[np.ndarray], float], C0: np.ndarray, *,
             max_iters: int = 50, tol: float = 1e-6,
             basis: np.ndarray | None = None,
             metric: np.ndarray | None = None,
             first_step: float | None = None) -> tuple[np.ndarray, MinimizeResult]:
    """Minimise ``objective(C)`` over ``C = C0 + basis @ Z``.

    Parameters
    ----------
    objective : callable
        Maps an ``n x q`` coefficient matrix to a real value.
    C0 : ndarray, shape (n, q)
        Starting point.
    basis : ndarray, shape (n, r), optional
        Search directions for each column; the identity (plain ``vec(C)``)
        when omitted.
    metric : ndarray, shape (n, n), optional
        When given, every column ``c_j`` is rescaled so that
        ``c_j' metric c_j`` keeps its value at `C0`.

    Returns
    -------
    C : ndarray
        Final coefficient matrix.
    result : MinimizeResult
        Parameters and trace of objective values.
    """
    C0 = np.asarray(C0, dtype=float)
    if C0.ndim != 2:
        raise InputError("C0 must be an n x q matrix")
    n, q = C0.shape
    if basis is not None and basis.shape[0] != n:
        raise InputError("basis rows must match C0")
    r = n if basis is None else basis.shape[1]
    if metric is not None:
        norm0 = np.sqrt(np.einsum("ij,ik,kj->j", C0, metric, C0))
        if not np.all(norm0 > 0):
            raise NumericError("C0 has a column of zero norm under the metric")

    def unpack(z: np.ndarray) -> np.ndarray:
        if not z.any():
            return C0.copy()
        Z = z.reshape(r, q)
        C = C0 + (Z if basis is None else basis @ Z)
        if metric is not None:
            nrm = np.sqrt(np.maximum(np.einsum("ij,ik,kj->j", C, metric, C), 1e-300))
            C = C * (norm0 / nrm)
        return C

    res = quasi_newton(lambda z: objective(unpack(z)), np.zeros(r * q),
                       max_iters=max_iters, tol=tol, first_step=first_step)
    return unpack(res.x), res
