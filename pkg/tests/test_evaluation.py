import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelsdr import (DataSet, FitConfig, SimCase, cv_select_lambda, generate, kcca_score,
                       kernel_ridge_fit, kernel_ridge_predict, multiple_correlation, pmae)
from kernelsdr.evaluation import stratified_folds
from kernelsdr.errors import InputError


def test_rbar2_identity_and_linear_map():
    rng = np.random.default_rng(0)
    U = rng.standard_normal((2, 300))
    assert multiple_correlation(U, U) == pytest.approx(1.0, abs=1e-8)
    A = np.array([[2.0, 1.0], [-1.0, 0.5]])
    assert multiple_correlation(U, A @ U) == pytest.approx(1.0, abs=1e-8)


def test_rbar2_independent_small():
    rng = np.random.default_rng(1)
    assert multiple_correlation(rng.standard_normal((2, 2000)),
                                rng.standard_normal((2, 2000))) < 0.05


def test_rbar2_by_definition():
    rng = np.random.default_rng(2)
    U = rng.standard_normal((2, 500))
    V = np.vstack([U[0] + rng.standard_normal(500), rng.standard_normal(500),
                   U[1] ** 2])
    # Squared canonical correlations from a QR-based computation.
    Uc = (U - U.mean(1, keepdims=True)).T
    Vc = (V - V.mean(1, keepdims=True)).T
    Qu, Qv = np.linalg.qr(Uc)[0], np.linalg.qr(Vc)[0]
    s = np.linalg.svd(Qu.T @ Qv, compute_uv=False)
    assert multiple_correlation(U, V) == pytest.approx(np.mean(s ** 2), rel=1e-6)


def test_rbar2_rank_zero_warns():
    U = np.random.default_rng(3).standard_normal((2, 50))
    with pytest.warns(RuntimeWarning):
        assert multiple_correlation(U, np.ones((1, 50))) == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 3))
def test_rbar2_invariance_and_symmetry(seed, k):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((k, 200))
    A = rng.standard_normal((k, k)) + 3 * np.eye(k)
    b = rng.standard_normal((k, 1)) * 10
    assert multiple_correlation(U, A @ U + b) == pytest.approx(1.0, abs=1e-6)
    V = rng.standard_normal((2, 200)) + U[:1]
    assert multiple_correlation(U, V) == pytest.approx(multiple_correlation(V, U), abs=1e-8)


def test_kcca_monotone_and_independent():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(100)
    assert kcca_score(u, np.exp(u)) > 0.9
    assert kcca_score(u, rng.standard_normal(100), reg=0.1) < 0.3


def test_kcca_duplicated_rows():
    rng = np.random.default_rng(1)
    u = rng.standard_normal(80)
    y = u ** 2 + 0.3 * rng.standard_normal(80)
    assert kcca_score(np.vstack([u, u]), y) == pytest.approx(kcca_score(u, y), abs=1e-10)


def test_kcca_affine_invariance():
    rng = np.random.default_rng(2)
    U = rng.standard_normal((2, 60))
    y = U[0] * U[1] + 0.2 * rng.standard_normal(60)
    V = np.array([[3.0], [-0.5]]) * U + np.array([[4.0], [1.0]])
    assert kcca_score(V, y) == pytest.approx(kcca_score(U, y), abs=1e-6)


def test_kcca_small_sample():
    with pytest.raises(InputError):
        kcca_score(np.zeros((1, 4)), np.zeros(4))


def test_kernel_ridge_interpolates():
    rng = np.random.default_rng(3)
    U = rng.standard_normal((1, 40))
    y = np.sin(2 * U[0])
    m = kernel_ridge_fit(U, y, reg=1e-10)
    np.testing.assert_allclose(kernel_ridge_predict(m, U), y, atol=1e-4)


def test_kernel_ridge_constant():
    U = np.random.default_rng(4).standard_normal((2, 30))
    m = kernel_ridge_fit(U, np.full(30, 2.5))
    np.testing.assert_allclose(kernel_ridge_predict(m, U[:, :7] + 0.1), 2.5, atol=1e-6)


def test_kernel_ridge_sine():
    rng = np.random.default_rng(5)
    u = rng.uniform(-3, 3, 100)
    m = kernel_ridge_fit(u, np.sin(u), reg=1e-4)
    t = rng.uniform(-3, 3, 200)
    rmse = np.sqrt(np.mean((kernel_ridge_predict(m, t) - np.sin(t)) ** 2))
    assert rmse < 0.1


def test_pmae():
    assert pmae([1, 2, 3], [1, 2, 3]) == 0
    assert pmae([0, 0], [1, -1]) == 1.0
    rng = np.random.default_rng(6)
    a, b = rng.standard_normal(25), rng.standard_normal(25)
    assert pmae(a, b) == pytest.approx(sum(abs(x - z) for x, z in zip(a, b)) / 25)
    with pytest.raises(InputError):
        pmae([1, 2], [1])


def test_stratified_folds_balanced():
    y = np.random.default_rng(7).standard_normal(53)
    lab = stratified_folds(y, 5, 3)
    sizes = np.bincount(lab)
    assert sizes.max() - sizes.min() <= 1
    np.testing.assert_array_equal(lab, stratified_folds(y, 5, 3))
    # Each block of five consecutive order statistics hits every fold once.
    order = np.argsort(y, kind="stable")
    assert sorted(lab[order[:5]]) == [0, 1, 2, 3, 4]


@pytest.fixture(scope="module")
def cv_data():
    ds, _ = generate(SimCase("case2", 60, 10, 5))
    return ds


def test_cv_single_grid_point(cv_data):
    rep = cv_select_lambda(cv_data, FitConfig(max_iters=2), [0.5], k=3)
    assert rep.best_lambda == 0.5
    assert len(rep.scores) == 1 and rep.fold_count == 3


def test_cv_report_shape_and_determinism(cv_data):
    cfg = FitConfig(max_iters=2)
    rep = cv_select_lambda(cv_data, cfg, [1e-3, 1.0], k=3, criterion="prediction")
    assert len(rep.scores) == 2
    assert rep.scores.max() == rep.scores[list(rep.lambda_grid).index(rep.best_lambda)]
    again = cv_select_lambda(cv_data, cfg, [1e-3, 1.0], k=3, criterion="prediction")
    np.testing.assert_array_equal(rep.scores, again.scores)


def test_cv_tie_prefers_smaller(cv_data):
    # The KSIR baseline ignores the penalty, so every grid point ties.
    rep = cv_select_lambda(cv_data, FitConfig(method="ksir"), [1.0, 0.1, 10.0], k=3)
    assert rep.best_lambda == 0.1


def test_cv_fold_too_small():
    ds = DataSet(np.random.default_rng(0).standard_normal((12, 3)), np.arange(12.0))
    with pytest.raises(InputError):
        cv_select_lambda(ds, FitConfig(q=2), [1.0], k=4)
