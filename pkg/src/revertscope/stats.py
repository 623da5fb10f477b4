"""Statistical primitives: z-scores, skewness, signed KS, clustered OLS."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .core import RevertEvent


class DegenerateStatistic(ValueError):
    """A statistic is undefined for the given input (e.g. zero variance)."""


def z_score(x_d: float, x_r) -> float | None:
    """Standardized deviation of an observed value from null realizations.

    Uses the population standard deviation of ``x_r``. Returns None when the
    realizations have no spread, which callers report as degenerate.
    """
    x_r = np.asarray(x_r, dtype=np.float64)
    if x_r.ndim != 1 or len(x_r) < 2:
        raise ValueError("z_score needs at least 2 realizations")
    if not np.isfinite(x_d) or not np.all(np.isfinite(x_r)):
        return None
    mu = x_r.mean()
    sd = x_r.std()
    if sd <= 1e-12 * max(1.0, abs(mu)):
        return None
    return float((x_d - mu) / sd)


def sample_skewness(xs) -> float:
    """Fisher-Pearson coefficient ``m3 / m2**1.5`` (biased central moments)."""
    xs = np.asarray(xs, dtype=np.float64)
    if len(xs) < 3:
        raise DegenerateStatistic("skewness needs at least 3 values")
    dev = xs - xs.mean()
    m2 = np.mean(dev * dev)
    if m2 <= 1e-24 * max(1.0, xs.mean() ** 2):
        raise DegenerateStatistic("skewness undefined for zero variance")
    m3 = np.mean(dev ** 3)
    return float(m3 / m2 ** 1.5)


def signed_ks(data, baseline) -> tuple[float, float]:
    """Two-sample KS distance signed by the direction of the largest gap.

    The sign is that of ``F_data - F_baseline`` at the smallest point where
    the absolute gap is maximal, so a positive value means the data are
    stochastically smaller. Returns ``(d_signed, p)`` with ``p`` from the
    asymptotic Kolmogorov distribution.
    """
    x = np.sort(np.asarray(data, dtype=np.float64))
    y = np.sort(np.asarray(baseline, dtype=np.float64))
    if len(x) == 0 or len(y) == 0:
        raise ValueError("signed_ks needs non-empty samples")
    grid = np.union1d(x, y)
    n, m = len(x), len(y)
    # integer gap in units of 1/(n*m) so ties are exact
    gap = (np.searchsorted(x, grid, side="right").astype(np.int64) * m
           - np.searchsorted(y, grid, side="right").astype(np.int64) * n)
    k = int(np.argmax(np.abs(gap)))
    d = float(gap[k]) / (n * m)
    return d, ks_pvalue(abs(d), len(x), len(y))


def signed_ks_counts(count_data, count_baseline) -> tuple[float, float]:
    """:func:`signed_ks` for samples given as counts over a shared sorted support.

    ``count_data[i]`` and ``count_baseline[i]`` count occurrences of the i-th
    smallest support value; memory is independent of the sample sizes.
    """
    cx = np.asarray(count_data, dtype=np.int64)
    cy = np.asarray(count_baseline, dtype=np.int64)
    n, m = int(cx.sum()), int(cy.sum())
    if n == 0 or m == 0:
        raise ValueError("signed_ks needs non-empty samples")
    support = np.flatnonzero((cx + cy) > 0)
    fx = np.cumsum(cx)[support]
    fy = np.cumsum(cy)[support]
    if n * m < 2 ** 62:
        gap = fx * m - fy * n
    else:  # pragma: no cover - astronomically large samples
        gap = fx / n - fy / m
    k = int(np.argmax(np.abs(gap)))
    d = float(gap[k]) / (n * m) if n * m < 2 ** 62 else float(gap[k])
    return d, ks_pvalue(abs(d), n, m)


def ks_pvalue(d: float, n: int, m: int) -> float:
    en = n * m / (n + m)
    return float(min(1.0, max(0.0, sps.kstwobign.sf(math.sqrt(en) * d))))


def status(edit_count) -> np.ndarray | float:
    """Base-ten logarithm of a running edit count."""
    return np.log10(edit_count)


def status_difference(event: RevertEvent) -> float:
    """``log10(reverter edits) - log10(reverted edits)``."""
    a, b = event.reverter_edit_count, event.reverted_edit_count
    if a is None or b is None:
        raise ValueError("event has no edit counts")
    if a < 1 or b < 1:
        raise ValueError("edit counts must be >= 1")
    return math.log10(a) - math.log10(b)


@dataclass
class RegressionResult:
    names: tuple
    coef: np.ndarray
    se: np.ndarray
    pvalues: np.ndarray
    n: int
    n_clusters: tuple
    cov: np.ndarray = field(repr=False)
    clipped: bool = False

    @property
    def intercept(self) -> float:
        return float(self.coef[0])

    @property
    def motif_coefficient(self) -> float:
        return float(self.coef[1])

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "coef": [float(c) for c in self.coef],
            "se": [float(s) for s in self.se],
            "p": [float(p) for p in self.pvalues],
            "n": int(self.n),
            "n_clusters": [int(g) for g in self.n_clusters],
            "variance_clipped": bool(self.clipped),
        }


def _meat(X: np.ndarray, resid: np.ndarray, groups: np.ndarray) -> np.ndarray:
    _, codes = np.unique(groups, return_inverse=True)
    scores = X * resid[:, None]
    summed = np.column_stack([np.bincount(codes, weights=scores[:, j])
                              for j in range(X.shape[1])])
    return summed.T @ summed


def _as_codes(g) -> np.ndarray:
    return np.unique(np.asarray(g), return_inverse=True)[1].astype(np.int64)


def ols_two_way_clustered(y, x, cluster_a, cluster_b, names=None) -> RegressionResult:
    """OLS with an intercept and two-way cluster-robust standard errors.

    Covariance is ``V_A + V_B - V_AB``: one-way cluster sandwiches on each
    dimension minus the one clustered on their intersection. No small-sample
    scaling is applied. Diagonal entries that come out negative are set to
    zero and ``clipped`` is raised. p-values are two-sided t-tests with
    ``min(G_A, G_B) - 1`` degrees of freedom.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = len(y)
    if x.shape[0] != n or len(cluster_a) != n or len(cluster_b) != n:
        raise ValueError("y, x and cluster arrays must have equal length")
    X = np.column_stack([np.ones(n), x])
    k = X.shape[1]
    if n < k or np.linalg.matrix_rank(X) < k:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    ga, gb = _as_codes(cluster_a), _as_codes(cluster_b)
    n_a, n_b = len(np.unique(ga)), len(np.unique(gb))
    if n_a < 2 or n_b < 2:
        raise ValueError("two-way clustering needs at least 2 clusters per dimension")
    gab = ga * (gb.max() + 1) + gb
    bread = np.linalg.inv(X.T @ X)
    beta = bread @ (X.T @ y)
    resid = y - X @ beta
    meat = _meat(X, resid, ga) + _meat(X, resid, gb) - _meat(X, resid, gab)
    cov = bread @ meat @ bread
    var = np.diag(cov).copy()
    clipped = bool((var < 0).any())
    var[var < 0] = 0.0
    se = np.sqrt(var)
    df = min(n_a, n_b) - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / np.where(se > 0, se, 1.0), np.inf)
    p = 2 * sps.t.sf(np.abs(t), df)
    p = np.where((se == 0) & (beta == 0), 1.0, p)
    if names is None:
        names = ("intercept",) + tuple(f"x{i}" for i in range(1, k))
    return RegressionResult(tuple(names), beta, se, np.clip(p, 0.0, 1.0), n,
                            (n_a, n_b), cov, clipped)


__all__ = [
    "DegenerateStatistic", "RegressionResult", "ks_pvalue", "ols_two_way_clustered",
    "sample_skewness", "signed_ks", "signed_ks_counts", "status", "status_difference", "z_score",
]
