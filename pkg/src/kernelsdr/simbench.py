"""Simulated benchmark cases and the replication harness."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.special import expit, ndtr

from .data import DataSet
from .errors import InputError, SDRError
from .estimators import METHODS, FitConfig, fit
from .evaluation import multiple_correlation

__all__ = ["SimCase", "BenchmarkRow", "generate", "rep_scores",
           "run_benchmark", "write_benchmark_csv", "CSV_HEADER"]

log = logging.getLogger(__name__)

CASES = ("case1", "case2", "case3")
CSV_HEADER = ("case", "p", "method", "mean_rbar2", "sd_rbar2", "reps", "failures")
# exp() of the case-1 index overflows double precision for heavy draws.
EXP_CLIP = 300.0


@dataclass(frozen=True)
class SimCase:
    case_id: Literal["case1", "case2", "case3"]
    n: int = 200
    p: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.case_id not in CASES:
            raise InputError(f"unknown case {self.case_id!r}")
        if self.p < 10:
            raise InputError("p must be at least 10")
        if self.n < 2:
            raise InputError("n must be at least 2")

    @property
    def number(self) -> int:
        return CASES.index(self.case_id) + 1


@dataclass(frozen=True)
class BenchmarkRow:
    case_id: str
    p: int
    method: str
    mean_rbar2: float
    sd_rbar2: float
    reps: int
    failures: int = 0


def _ar_normal(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    i = np.arange(d)
    L = np.linalg.cholesky(rho ** np.abs(i[:, None] - i[None, :]))
    return rng.standard_normal((n, d)) @ L.T


def generate(case: SimCase, noise_scale: float = 1.0) -> tuple[DataSet, np.ndarray]:
    """Draw one data set and its two true index functions.

    Parameters
    ----------
    case : SimCase
    noise_scale : float
        Multiplies the response noise; ``0`` gives noiseless responses.

    Returns
    -------
    ds : DataSet
    U_true : ndarray, shape (2, n)
        Row 0 sums ``f(X_i)`` over the first ten covariates and row 1 uses
        alternating signs, with ``f(x) = x**2`` in cases 1-2 and
        ``f(x) = x`` in case 3.
    """
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([case.seed, case.number, case.n, case.p])))
    n, p = case.n, case.p
    if case.case_id == "case2":
        X = _ar_normal(rng, n, p, 0.8)
    else:
        X1, X2, X3, X4 = _ar_normal(rng, n, 4, 0.5).T
        e = rng.standard_normal((n, 4))
        X7 = (rng.random(n) < expit(X2)).astype(float)
        X8 = (rng.random(n) < ndtr(X2)).astype(float)
        cols = [X1, X2, X3, X4,
                np.abs(X1 + X2) + np.abs(X1) * e[:, 0],
                np.abs(X1 + X2) ** 2 + np.abs(X2) * e[:, 1],
                X7, X8,
                X3 ** 3 - 2 * np.abs(X4) + np.abs(X3) * e[:, 2],
                np.abs(X3 + X4) ** 2 + np.abs(X4) * e[:, 3]]
        X = np.column_stack(cols)
        if p > 10:
            X = np.hstack([X, _ar_normal(rng, n, p - 10, 0.6)])
    signs = (-1.0) ** np.arange(10)
    F = X[:, :10] ** 2 if case.case_id in ("case1", "case2") else X[:, :10]
    U = np.vstack([F.sum(axis=1), F @ signs])
    eps = noise_scale * rng.standard_normal(n)
    if case.case_id == "case1":
        y = np.abs(U[0]) + 2.0 * np.exp(np.minimum(U[1], EXP_CLIP)) + 0.1 * eps
    elif case.case_id == "case2":
        y = np.abs(U[0]) * U[1] + 0.5 * eps
    else:
        y = U[0] ** 2 + U[1] ** 2 + 0.5 * eps
    return DataSet(X, y), U


def _one_rep(args) -> list[float]:
    case, methods, cfg = args
    ds, U = generate(case)
    out = []
    for m in methods:
        try:
            res = fit(ds, cfg.with_(method=m))
            out.append(multiple_correlation(U, res.U_train))
        except (SDRError, np.linalg.LinAlgError) as exc:
            log.warning("%s rep seed %d, %s failed: %s", case.case_id, case.seed, m, exc)
            out.append(float("nan"))
    return out


def rep_scores(case: SimCase, methods: Sequence[str], reps: int, cfg: FitConfig,
               workers: int = 1) -> np.ndarray:
    """r-bar-squared per replication (rows) and method (columns).

    Replication ``r`` uses seed ``case.seed + r``; failed fits are NaN.
    """
    if reps < 1:
        raise InputError("reps must be at least 1")
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}")
    jobs = [(SimCase(case.case_id, case.n, case.p, case.seed + r), tuple(methods), cfg)
            for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one_rep, jobs))
    else:
        rows = [_one_rep(j) for j in jobs]
    return np.array(rows, dtype=float).reshape(reps, len(methods))


def run_benchmark(case: SimCase, methods: Sequence[str], reps: int, cfg: FitConfig,
                  workers: int = 1) -> list[BenchmarkRow]:
    """Mean and standard deviation of r-bar-squared per method."""
    scores = rep_scores(case, methods, reps, cfg, workers)
    rows = []
    for j, m in enumerate(methods):
        ok = scores[:, j][np.isfinite(scores[:, j])]
        mean = float(ok.mean()) if ok.size else float("nan")
        sd = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
        rows.append(BenchmarkRow(case.case_id, case.p, m, mean, sd, reps,
                                 int(reps - ok.size)))
    return rows


def write_benchmark_csv(rows: Iterable[BenchmarkRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.case_id, r.p, r.method, f"{r.mean_rbar2:.10g}",
                        f"{r.sd_rbar2:.10g}", r.reps, r.failures])
