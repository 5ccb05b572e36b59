import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from kernelsdr import BandwidthSpec, default_bandwidth, epanechnikov, nw_weights
from kernelsdr.errors import DegenerateInputError, InputError


def test_epanechnikov_values():
    assert epanechnikov([0.0], 1.0) == 0.75
    assert epanechnikov([1.0], 1.0) == 0.0
    assert epanechnikov([0.5], 1.0) == pytest.approx(0.75 * 0.75)
    assert epanechnikov([0.0, 0.0], 2.0) == pytest.approx((0.75 / 2) ** 2)


def test_epanechnikov_integrates_to_one():
    val, _ = quad(lambda u: epanechnikov([u], 2.0), -2.0, 2.0)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_epanechnikov_bad_bandwidth():
    with pytest.raises(InputError):
        epanechnikov([0.0], 0.0)


def test_default_bandwidth_closed_form():
    v = np.random.default_rng(0).standard_normal(200)
    v = (v - v.mean()) / v.std(ddof=1)
    assert default_bandwidth(v) == pytest.approx(1.06 * 200 ** -0.2)
    assert default_bandwidth(v) == pytest.approx(0.3675, abs=5e-4)


def test_default_bandwidth_homogeneous():
    v = np.random.default_rng(1).standard_normal((50, 2))
    assert default_bandwidth(2 * v) == pytest.approx(2 * default_bandwidth(v))
    assert default_bandwidth(2 * v, "robust") == pytest.approx(2 * default_bandwidth(v, "robust"))


def test_default_bandwidth_direct_formula():
    v = np.random.default_rng(2).standard_normal(100)
    s = np.sqrt(np.sum((v - v.mean()) ** 2) / 99)
    assert default_bandwidth(v) == pytest.approx(1.06 * s * 100 ** (-1 / 5))
    V = np.random.default_rng(3).standard_normal((80, 3)) * [1, 2, 3]
    sbar = V.std(axis=0, ddof=1).mean()
    assert default_bandwidth(V) == pytest.approx(1.06 * sbar * 80 ** (-1 / 7))


def test_default_bandwidth_robust_scale():
    v = np.random.default_rng(4).standard_normal(400)
    mad = np.median(np.abs(v - np.median(v))) / 0.6745
    assert default_bandwidth(v, "robust") == pytest.approx(1.06 * mad * 400 ** -0.2)
    # MAD is zero here, so the standard deviation is used.
    w = np.r_[np.zeros(10), 1.0]
    assert default_bandwidth(w, "robust") == pytest.approx(default_bandwidth(w))


def test_default_bandwidth_degenerate():
    with pytest.raises(DegenerateInputError):
        default_bandwidth(np.ones((5, 2)))


def test_bandwidth_spec():
    assert BandwidthSpec().mode == "auto"
    assert BandwidthSpec.of(0.5) == BandwidthSpec("fixed", 0.5)
    with pytest.raises(InputError):
        BandwidthSpec("fixed", 0.0)
    with pytest.raises(InputError):
        BandwidthSpec("fixed")


def test_nw_identical_values_uniform():
    W = nw_weights(np.full((7, 2), 3.0), 0.1).weights
    np.testing.assert_allclose(W, 1 / 7)


def test_nw_far_apart_identity():
    W = nw_weights(np.array([0.0, 10.0]), 1.0).weights
    np.testing.assert_array_equal(W, np.eye(2))


def test_nw_matches_kernel_definition():
    rng = np.random.default_rng(5)
    V = rng.standard_normal((15, 2))
    h = 1.3
    W = nw_weights(V, h).weights
    K = np.array([[epanechnikov(V[i] - V[j], h) for j in range(15)] for i in range(15)])
    np.testing.assert_allclose(W, K / K.sum(axis=0), atol=1e-14)


def test_nw_column_sums_random():
    v = np.random.default_rng(6).standard_normal(20)
    for h in (0.01, 0.3, 5.0):
        assert np.abs(nw_weights(v, h).weights.sum(axis=0) - 1).max() < 1e-10


def test_nw_large_bandwidth_uniform():
    v = np.random.default_rng(7).standard_normal((30, 2))
    W = nw_weights(v, 1e6 * np.ptp(v)).weights
    assert np.abs(W - 1 / 30).max() < 1e-6


values = arrays(np.float64, st.tuples(st.integers(2, 15), st.integers(1, 3)),
                elements=st.floats(-100, 100, allow_nan=False, width=64))


@settings(max_examples=60, deadline=None)
@given(V=values, h=st.floats(1e-3, 1e3), shift=st.floats(-50, 50))
def test_nw_properties(V, h, shift):
    W = nw_weights(V, h).weights
    assert np.all(W >= 0)
    assert np.abs(W.sum(axis=0) - 1).max() < 1e-10
    W2 = nw_weights(V + shift, h).weights
    np.testing.assert_allclose(W, W2, atol=1e-8)
