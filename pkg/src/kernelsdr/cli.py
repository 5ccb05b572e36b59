"""Command line interface: simulate, fit, cv, benchmark and predict."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .data import DataSet
from .errors import DataError, InputError, NumericError, SDRError
from .estimators import METHODS, FitConfig, fit
from .evaluation import cv_prediction, cv_select_lambda
from .simbench import CASES, SimCase, generate, run_benchmark, write_benchmark_csv
from .smoothing import BandwidthSpec

log = logging.getLogger("kernelsdr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "input": None,
    "output": None,
    "response": "y",
    "method": "gsksir1",
    "q": 2,
    "lambda": 0.0,
    "lambda_grid": "0.0001,0.01,1",
    "h1": None,
    "h2": None,
    "h3": None,
    "folds": 5,
    "reps": 10,
    "seed": 0,
    "workers": 1,
    "criterion": "kcca",
    "case": "case2",
    "n": 200,
    "p": 10,
    "methods": "ksir,gsksir1",
    "max_iters": 30,
    "tol": 1e-6,
}
INT_KEYS = {"q", "folds", "reps", "seed", "workers", "n", "p", "max_iters"}
FLOAT_KEYS = {"lambda", "h1", "h2", "h3", "tol"}


class UsageError(InputError):
    """Bad command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def fmt(x: float) -> str:
    return f"{x:.10g}"


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kernelsdr", description="Kernel sufficient dimension reduction.")
    ap.add_argument("command", choices=["simulate", "fit", "cv", "benchmark", "predict"])
    ap.add_argument("--config", help="flat key=value configuration file")
    ap.add_argument("--print-config", action="store_true",
                    help="print the effective configuration and exit")
    ap.add_argument("--input")
    ap.add_argument("--output")
    ap.add_argument("--response", help="name of the response column")
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--q", type=int)
    ap.add_argument("--lambda", dest="lambda", type=float)
    ap.add_argument("--lambda-grid", dest="lambda_grid",
                    help="comma-separated penalty values")
    for h in ("h1", "h2", "h3"):
        ap.add_argument(f"--{h}", type=float, help="fixed bandwidth (default: auto)")
    ap.add_argument("--folds", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--criterion", choices=["kcca", "prediction"])
    ap.add_argument("--case", choices=CASES)
    ap.add_argument("--n", type=int, help="sample size for simulate/benchmark")
    ap.add_argument("--p", type=int, help="number of covariates for simulate/benchmark")
    ap.add_argument("--methods", help="comma-separated methods for benchmark")
    ap.add_argument("--max-iters", dest="max_iters", type=int)
    ap.add_argument("--tol", type=float)
    return ap


def read_config_file(path: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, Any] = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = _coerce(key, val)
    return out


def _coerce(key: str, val: Any) -> Any:
    if val is None or (isinstance(val, str) and val.lower() in ("", "auto", "none")):
        if key in ("h1", "h2", "h3", "input", "output"):
            return None
    try:
        if key in INT_KEYS:
            return int(val)
        if key in FLOAT_KEYS:
            return float(val)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value for {key}: {val!r}") from exc
    return val


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if cfg["method"] not in METHODS:
        raise UsageError(f"unknown method {cfg['method']!r}")
    if cfg["criterion"] not in ("kcca", "prediction"):
        raise UsageError(f"unknown criterion {cfg['criterion']!r}")
    if cfg["case"] not in CASES:
        raise UsageError(f"unknown case {cfg['case']!r}")
    for key in ("folds", "reps", "workers", "q", "n", "max_iters"):
        if cfg[key] < 1:
            raise UsageError(f"{key} must be positive")
    return cfg


def fit_config(cfg: dict[str, Any]) -> FitConfig:
    return FitConfig(q=cfg["q"], lam=cfg["lambda"], method=cfg["method"],
                     h1=BandwidthSpec.of(cfg["h1"]), h2=BandwidthSpec.of(cfg["h2"]),
                     h3=BandwidthSpec.of(cfg["h3"]), max_iters=cfg["max_iters"],
                     tol=cfg["tol"], seed=cfg["seed"])


def parse_grid(text: str) -> list[float]:
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad lambda grid {text!r}") from exc
    if not vals:
        raise UsageError("lambda grid is empty")
    return vals


def load_csv(path, response_column: str) -> DataSet:
    """Read a headed numeric CSV into a standardised DataSet.

    Every column other than `response_column` becomes a predictor, z-scored
    with the population standard deviation; constant columns are dropped
    with a warning.

    Raises
    ------
    DataError
        Missing file, missing response column, or a blank or non-numeric cell.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response_column not in header:
        raise DataError(f"{path}: response column {response_column!r} not found")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if len(body) < 2:
        raise DataError(f"{path}: need at least two data rows")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i + 2}, column {header[j]!r}: "
                                f"non-numeric value {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {i + 2}, column {header[j]!r}: non-finite value")
            values[i, j] = v
    yi = header.index(response_column)
    y = values[:, yi]
    keep, names = [], []
    for j, name in enumerate(header):
        if j == yi:
            continue
        if np.ptp(values[:, j]) == 0:
            warnings.warn(f"dropping constant column {name!r}", UserWarning)
            continue
        keep.append(j)
        names.append(name)
    if not keep:
        raise DataError(f"{path}: no non-constant predictor columns")
    X = values[:, keep]
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    return DataSet(X, y, tuple(names))


def _write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def _require(cfg: dict[str, Any], *keys: str) -> None:
    for k in keys:
        if not cfg.get(k):
            raise UsageError(f"--{k.replace('_', '-')} is required")


def cmd_simulate(cfg: dict[str, Any]) -> None:
    """Write ``x1..xp, y`` to the output file and the true predictors next to it."""
    _require(cfg, "output")
    ds, U = generate(SimCase(cfg["case"], cfg["n"], cfg["p"], cfg["seed"]))
    out = Path(cfg["output"])
    _write_rows(out, [f"x{j + 1}" for j in range(ds.p)] + ["y"],
                (list(map(float, x)) + [float(yv)] for x, yv in zip(ds.X, ds.y)))
    _write_rows(out.with_name(out.stem + "_utrue.csv"), ["u1", "u2"],
                (list(map(float, u)) for u in U.T))


def cmd_fit(cfg: dict[str, Any]) -> None:
    """Write coefficients, reduced predictors, trace and a summary to a directory."""
    _require(cfg, "input", "output")
    ds = load_csv(cfg["input"], cfg["response"])
    res = fit(ds, fit_config(cfg))
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    q = res.C.shape[1]
    _write_rows(out / "coefficients.csv", [f"c{j + 1}" for j in range(q)],
                (list(map(float, r)) for r in res.C))
    _write_rows(out / "features.csv", [f"u{j + 1}" for j in range(q)],
                (list(map(float, r)) for r in res.U_train.T))
    _write_rows(out / "trace.csv", ["iteration", "objective"],
                ([i, float(v)] for i, v in enumerate(res.objective_trace)))
    h1, h2, h3, h4 = res.bandwidths_used
    _write_rows(out / "summary.csv", ["key", "value"], [
        ["method", res.method], ["n", ds.n], ["p", ds.p], ["q", q],
        ["lambda", float(res.lambda_used)], ["h1", h1], ["h2", h2], ["h3", h3],
        ["h4", h4], ["kernel_sigma", float(res.kernel.sigma)],
        ["converged", int(res.converged)], ["iterations", res.iterations],
        ["objective_init", float(res.objective_init)],
        ["objective_final", float(res.objective_trace[-1]) if res.objective_trace
         else float("nan")],
    ])


def cmd_cv(cfg: dict[str, Any]) -> None:
    _require(cfg, "input", "output")
    ds = load_csv(cfg["input"], cfg["response"])
    rep = cv_select_lambda(ds, fit_config(cfg), parse_grid(cfg["lambda_grid"]),
                           cfg["folds"], cfg["criterion"])
    _write_rows(cfg["output"], ["lambda", "score", "selected", "folds", "criterion"],
                ([float(l), float(s), int(l == rep.best_lambda), rep.fold_count,
                  rep.criterion] for l, s in zip(rep.lambda_grid, rep.scores)))


def cmd_benchmark(cfg: dict[str, Any]) -> None:
    _require(cfg, "output")
    methods = [m.strip() for m in str(cfg["methods"]).split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown methods: {','.join(bad) or '(none)'}")
    rows = run_benchmark(SimCase(cfg["case"], cfg["n"], cfg["p"], cfg["seed"]),
                         methods, cfg["reps"], fit_config(cfg), cfg["workers"])
    write_benchmark_csv(rows, cfg["output"])


def cmd_predict(cfg: dict[str, Any]) -> None:
    _require(cfg, "input", "output")
    ds = load_csv(cfg["input"], cfg["response"])
    rep = cv_prediction(ds, fit_config(cfg), cfg["folds"])
    rows = [[str(i + 1), int(n), float(a), float(b)] for i, (n, a, b) in
            enumerate(zip(rep.fold_sizes, rep.fold_pmae, rep.fold_baseline))]
    rows.append(["mean", int(rep.fold_sizes.sum()), rep.mean_pmae, rep.mean_baseline])
    _write_rows(cfg["output"], ["fold", "n_test", "pmae", "baseline_pmae"], rows)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "cv": cmd_cv,
            "benchmark": cmd_benchmark, "predict": cmd_predict}


def _fail(code: int, exc: BaseException) -> int:
    kind = type(exc).__name__
    msg = str(exc).replace("\n", " ")
    print(f"kernelsdr: {msg}", file=sys.stderr)
    print(f"ERROR code={code} kind={kind} message={msg}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        if args.print_config:
            for k in sorted(cfg):
                v = cfg[k]
                print(f"{k}={'auto' if v is None and k.startswith('h') else ('' if v is None else v)}")
            return EXIT_OK
        COMMANDS[args.command](cfg)
    except DataError as exc:
        return _fail(EXIT_DATA, exc)
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (InputError, SDRError) as exc:
        return _fail(EXIT_USAGE, exc)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _fail(EXIT_DATA, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
