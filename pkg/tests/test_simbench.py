import csv

import numpy as np
import pytest

from kernelsdr import FitConfig, SimCase, generate, multiple_correlation, run_benchmark
from kernelsdr.errors import InputError, NumericError
from kernelsdr.simbench import CSV_HEADER, write_benchmark_csv


def test_case2_covariance():
    # Monte Carlo sd of a covariance entry at n=5000 is about 0.018.
    ds, _ = generate(SimCase("case2", 5000, 10, 5))
    S = np.cov(ds.X.T)
    assert S[0, 1] == pytest.approx(0.8, abs=0.03)
    i = np.arange(10)
    avg = np.mean([np.cov(generate(SimCase("case2", 5000, 10, s))[0].X.T)
                   for s in range(10)], axis=0)
    assert np.abs(avg - 0.8 ** np.abs(i[:, None] - i[None, :])).max() < 0.03


def test_case1_structure():
    ds, U = generate(SimCase("case1", 5000, 12, 2))
    X = ds.X
    assert set(np.unique(X[:, 6])) <= {0.0, 1.0}
    assert set(np.unique(X[:, 7])) <= {0.0, 1.0}
    i = np.arange(4)
    S = np.cov(X[:, :4].T)
    assert np.abs(S - 0.5 ** np.abs(i[:, None] - i[None, :])).max() < 0.03
    assert np.cov(X[:, 10:].T)[0, 1] == pytest.approx(0.6, abs=0.03)
    assert np.all(np.isfinite(ds.y))


def test_case3_noiseless_identity():
    ds, U = generate(SimCase("case3", 100, 10, 3), noise_scale=0.0)
    np.testing.assert_allclose(ds.y, U[0] ** 2 + U[1] ** 2, rtol=1e-12)
    signs = (-1.0) ** np.arange(10)
    np.testing.assert_allclose(U[1], ds.X[:, :10] @ signs)


def test_true_predictors_cases_1_2():
    for c in ("case1", "case2"):
        ds, U = generate(SimCase(c, 50, 10, 4))
        np.testing.assert_allclose(U[0], (ds.X[:, :10] ** 2).sum(1))
        assert multiple_correlation(U, U) == pytest.approx(1.0, abs=1e-8)


def test_generate_deterministic():
    a, Ua = generate(SimCase("case1", 40, 11, 9))
    b, Ub = generate(SimCase("case1", 40, 11, 9))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    c, _ = generate(SimCase("case1", 40, 11, 10))
    assert not np.array_equal(a.X, c.X)


def test_simcase_validation():
    with pytest.raises(InputError):
        SimCase("case2", 50, 9)
    with pytest.raises(InputError):
        SimCase("case4", 50, 10)


def test_benchmark_rows(tmp_path):
    cfg = FitConfig(max_iters=2)
    rows = run_benchmark(SimCase("case2", 60, 10, 0), ["ksir", "gsksir1"], 1, cfg)
    assert len(rows) == 2
    assert all(r.sd_rbar2 == 0 and 0 <= r.mean_rbar2 <= 1 for r in rows)
    path = tmp_path / "b.csv"
    write_benchmark_csv(rows, path)
    with open(path) as fh:
        got = list(csv.reader(fh))
    assert tuple(got[0]) == CSV_HEADER
    assert [r[2] for r in got[1:]] == ["ksir", "gsksir1"]


def test_benchmark_failures_counted(monkeypatch):
    import kernelsdr.simbench as sb
    real = sb.fit
    calls = []

    def flaky(ds, cfg):
        calls.append(cfg.method)
        if len(calls) == 1:
            raise NumericError("boom")
        return real(ds, cfg)

    monkeypatch.setattr(sb, "fit", flaky)
    rows = run_benchmark(SimCase("case2", 40, 10, 0), ["ksir"], 3, FitConfig())
    assert rows[0].failures == 1
    assert rows[0].reps == 3 and 0 <= rows[0].mean_rbar2 <= 1
