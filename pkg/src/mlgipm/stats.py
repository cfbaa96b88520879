"""Hypothesis tests and effect sizes used to compare benchmark configurations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


def _normal_two_sided(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def midranks(values) -> np.ndarray:
    """Ranks 1..N with ties sharing the average rank."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass
class RankSumResult:
    U: float
    z: float
    p: float
    exact: bool


def _exact_rank_sum_p(doubled_ranks: np.ndarray, n_a: int, observed: int) -> float:
    """Two-sided permutation p-value for the sum of ``n_a`` of the given (doubled) ranks.

    Counts subsets by dynamic programming over (size, sum), so ties are
    handled exactly.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros((n_a + 1, total + 1))
    counts[0, 0] = 1.0
    for r in doubled_ranks.astype(int):
        counts[1:, r:] += counts[:-1, : total + 1 - r].copy()
    dist = counts[n_a]
    dist = dist / dist.sum()
    centre = n_a * total / len(doubled_ranks)
    dev = np.abs(np.arange(total + 1) - centre)
    return float(min(1.0, dist[dev >= abs(observed - centre) - 1e-9].sum()))


def wilcoxon_rank_sum(a, b) -> RankSumResult:
    """Wilcoxon-Mann-Whitney rank-sum test, two-sided.

    ``U`` counts pairs with ``a_i > b_j`` plus half the ties.  For
    ``min(len(a), len(b)) >= 8`` the p-value uses the normal approximation
    with tie and continuity corrections; below that it is exact.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InputError("rank-sum test needs two nonempty samples")
    na, nb = a.size, b.size
    N = na + nb
    ranks = midranks(np.concatenate([a, b]))
    U = float(ranks[:na].sum() - na * (na + 1) / 2.0)
    mean = na * nb / 2.0
    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    var = na * nb / 12.0 * ((N + 1) - tie_term / (N * (N - 1))) if N > 1 else 0.0
    if var <= 0:
        z = 0.0
    else:
        z = math.copysign(max(abs(U - mean) - 0.5, 0.0), U - mean) / math.sqrt(var)
    if min(na, nb) >= 8:
        p = 1.0 if var <= 0 else _normal_two_sided(z)
        return RankSumResult(U, z, p, False)
    doubled = np.rint(2.0 * ranks)
    observed = int(round(2.0 * ranks[:na].sum()))
    return RankSumResult(U, z, _exact_rank_sum_p(doubled, na, observed), True)


@dataclass
class ProportionTest:
    Z: float
    p: float
    degenerate: bool


def two_proportion_z(s1: int, n1: int, s2: int, n2: int) -> ProportionTest:
    """Pooled two-proportion Z test, two-sided."""
    if n1 < 1 or n2 < 1 or not (0 <= s1 <= n1 and 0 <= s2 <= n2):
        raise InputError("need n >= 1 and 0 <= successes <= n")
    pooled = (s1 + s2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return ProportionTest(0.0, 1.0, True)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    Z = (s1 / n1 - s2 / n2) / se
    return ProportionTest(Z, _normal_two_sided(Z), False)


@dataclass
class ChiSquareResult:
    chi2: float
    V: float
    p: float
    undefined: bool


def chi_square_cramers_v(table) -> ChiSquareResult:
    """Pearson chi-square (no continuity correction) and Cramer's V for an r x c table."""
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or np.any(obs < 0):
        raise InputError("contingency table must be a 2-D array of nonnegative counts")
    N = obs.sum()
    if N <= 0:
        raise InputError("contingency table is empty")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        return ChiSquareResult(math.nan, math.nan, math.nan, True)
    expected = np.outer(rows, cols) / N
    chi2 = float(np.sum((obs - expected) ** 2 / expected))
    k = min(obs.shape) - 1
    V = math.sqrt(chi2 / (N * k)) if k > 0 else math.nan
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    from scipy.stats import chi2 as chi2_dist
    p = float(chi2_dist.sf(chi2, dof)) if dof > 0 else math.nan
    return ChiSquareResult(chi2, V, p, False)


@dataclass
class EffectSize:
    d: float
    undefined: bool


def cohens_d(a, b) -> EffectSize:
    """``(mean(a) - mean(b)) / pooled SD`` with the unbiased pooled variance."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise InputError("Cohen's d needs at least two observations per sample")
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2)
    diff = a.mean() - b.mean()
    if pooled <= 0:
        return EffectSize(0.0 if diff == 0 else math.nan, True)
    return EffectSize(float(diff / math.sqrt(pooled)), False)
