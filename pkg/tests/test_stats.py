import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revertscope.core import RevertEvent
from revertscope.stats import (DegenerateStatistic, ks_pvalue, ols_two_way_clustered,
                               sample_skewness, signed_ks, status_difference, z_score)


def test_z_score_example():
    assert z_score(5, [2, 3, 4]) == pytest.approx(2.449, abs=1e-3)
    assert z_score(3, [2, 3, 4]) == 0.0


def test_z_score_degenerate():
    assert z_score(1, [2, 2, 2]) is None
    assert z_score(float("nan"), [1, 2]) is None
    with pytest.raises(ValueError):
        z_score(1, [1])


def test_skewness_example():
    # exact value is 1/sqrt(2); the 5-digit literal 0.70711 is its rounding
    assert sample_skewness([0, 0, 1]) == pytest.approx(math.sqrt(0.5), abs=1e-6)
    assert round(sample_skewness([0, 0, 1]), 5) == 0.70711
    with pytest.raises(DegenerateStatistic):
        sample_skewness([1, 1, 1])
    with pytest.raises(DegenerateStatistic):
        sample_skewness([1, 2])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50))
def test_skewness_direct_moments(xs):
    xs = np.array(xs)
    m = sum(xs) / len(xs)
    m2 = sum((v - m) ** 2 for v in xs) / len(xs)
    m3 = sum((v - m) ** 3 for v in xs) / len(xs)
    if m2 < 1e-6:
        return
    assert sample_skewness(xs) == pytest.approx(m3 / m2 ** 1.5, rel=1e-8, abs=1e-8)


def naive_signed_ks(x, y):
    """O(n^2) sweep over every observed point."""
    from fractions import Fraction
    best = Fraction(0)
    for t in sorted(set(x) | set(y)):
        g = Fraction(sum(v <= t for v in x), len(x)) - Fraction(sum(v <= t for v in y), len(y))
        if abs(g) > abs(best):
            best = g
    return float(best)


def test_signed_ks_matches_sweep():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = np.round(rng.exponential(2, rng.integers(1, 40)), 1)
        y = np.round(rng.exponential(3, rng.integers(1, 40)), 1)
        d, p = signed_ks(x, y)
        assert abs(d - naive_signed_ks(x.tolist(), y.tolist())) <= 1e-12
        assert 0 <= p <= 1


def test_signed_ks_direction_and_unsigned_agreement():
    from scipy.stats import ks_2samp
    rng = np.random.default_rng(1)
    fast, slow = rng.exponential(1, 300), rng.exponential(5, 300)
    d, p = signed_ks(fast, slow)
    assert d > 0 and p < 1e-6
    assert abs(d) == pytest.approx(ks_2samp(fast, slow).statistic)
    assert signed_ks(slow, fast)[0] == pytest.approx(-d)
    with pytest.raises(ValueError):
        signed_ks([], [1.0])


def test_ks_pvalue_bounds():
    assert ks_pvalue(0.0, 10, 10) == 1.0
    assert ks_pvalue(1.0, 1000, 1000) < 1e-10


def test_status_difference():
    e = RevertEvent(0, "a", "b", "x", 1, 2, 1000, 10)
    assert status_difference(e) == pytest.approx(2.0)
    flipped = RevertEvent(0, "b", "a", "x", 1, 2, 10, 1000)
    assert status_difference(flipped) == -status_difference(e)
    with pytest.raises(ValueError):
        status_difference(RevertEvent(0, "a", "b", "x", 1, 2, None, 3))


def sandwich_by_pairs(X, e, groups):
    """Meat as an explicit double sum over observation pairs sharing a cluster."""
    n, k = X.shape
    meat = np.zeros((k, k))
    for i in range(n):
        for j in range(n):
            if groups[i] == groups[j]:
                meat += np.outer(X[i] * e[i], X[j] * e[j])
    return meat


def _design(rng, n):
    x = rng.normal(size=(n, 2))
    a = rng.integers(0, max(2, n // 4), n)
    b = rng.integers(0, max(2, n // 5), n)
    y = 1 + x @ np.array([0.5, -2.0]) + rng.normal(size=n) + 0.5 * (a % 3)
    return y, x, a, b


def test_two_way_se_matches_independent_sandwich():
    rng = np.random.default_rng(3)
    for trial in range(20):
        y, x, a, b = _design(rng, int(rng.integers(12, 40)))
        res = ols_two_way_clustered(y, x, a, b)
        X = np.column_stack([np.ones(len(y)), x])
        bread = np.linalg.inv(X.T @ X)
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        e = y - X @ beta
        ab = [f"{p}/{q}" for p, q in zip(a, b)]
        meat = sandwich_by_pairs(X, e, a) + sandwich_by_pairs(X, e, b) - sandwich_by_pairs(X, e, ab)
        cov = bread @ meat @ bread
        assert np.allclose(res.coef, beta, rtol=1e-10)
        assert np.allclose(res.cov, cov, rtol=1e-8, atol=1e-14 * np.abs(cov).max())


def test_two_way_se_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    from statsmodels.stats.sandwich_covariance import cov_cluster_2groups
    rng = np.random.default_rng(4)
    for _ in range(5):
        y, x, a, b = _design(rng, 60)
        res = ols_two_way_clustered(y, x, a, b)
        fit = sm.OLS(y, sm.add_constant(x)).fit()
        cov, _, _ = cov_cluster_2groups(fit, a, b, use_correction=False)
        assert np.allclose(res.cov, cov, rtol=1e-8)


def test_ols_known_two_group_means():
    # y = 3 in group 0, 1 in group 1 => intercept 3, dummy coefficient -2
    x = np.array([0, 0, 0, 1, 1, 1])
    y = np.where(x == 1, 1.0, 3.0)
    res = ols_two_way_clustered(y, x, [0, 1, 2, 0, 1, 2], [0, 0, 1, 1, 2, 2], names=("c", "d"))
    assert res.intercept == pytest.approx(3) and res.motif_coefficient == pytest.approx(-2)
    assert res.as_dict()["names"] == ["c", "d"]


def test_ols_errors():
    with pytest.raises(np.linalg.LinAlgError):
        ols_two_way_clustered([1, 2, 3], [1, 1, 1], [0, 1, 2], [0, 1, 2])
    with pytest.raises(ValueError):
        ols_two_way_clustered([1, 2, 3], [0, 1, 2], [0, 0, 0], [0, 1, 2])
    with pytest.raises(ValueError):
        ols_two_way_clustered([1, 2], [0, 1, 2], [0, 1, 2], [0, 1, 2])


def test_ols_pvalue_uses_cluster_df():
    rng = np.random.default_rng(5)
    y, x, a, b = _design(rng, 40)
    res = ols_two_way_clustered(y, x, a, b)
    from scipy.stats import t
    df = min(res.n_clusters) - 1
    expected = 2 * t.sf(abs(res.coef[1] / res.se[1]), df)
    assert res.pvalues[1] == pytest.approx(expected)
    assert not math.isnan(res.se[0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=60),
       st.lists(st.integers(0, 30), min_size=1, max_size=60))
def test_signed_ks_counts_matches_samples(x, y):
    from revertscope.stats import signed_ks_counts
    cx = np.bincount(x, minlength=31)
    cy = np.bincount(y, minlength=31)
    assert signed_ks_counts(cx, cy) == signed_ks(x, y)
