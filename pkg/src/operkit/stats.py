"""Two-sample and correlation tests: Mann-Whitney U, Student's t, Pearson r.

Mann-Whitney p-values are exact (full permutation enumeration) for small
pooled samples and use the tie- and continuity-corrected normal
approximation otherwise. All tests report two-sided p-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import betainc

# Largest pooled size for which the exact permutation distribution is used.
EXACT_LIMIT = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: tuple[int, ...]
    method: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.statistic):
            raise ValueError("test statistic must be finite")
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value out of range: {self.p_value}")


def _average_ranks(pooled: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based); ties get the mean of their rank span."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def mann_whitney_u(a, b) -> TestResult:
    """Mann-Whitney U test with U = min(U_a, U_b) and average ranks for ties.

    Exact two-sided p by permutation enumeration when n_a + n_b <= 12;
    normal approximation with tie and continuity corrections otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    na, nb = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _average_ranks(pooled)
    r_a = float(ranks[:na].sum())
    u_a = na * nb + na * (na + 1) / 2.0 - r_a
    u_b = na * nb - u_a
    u = min(u_a, u_b)

    if na + nb <= EXACT_LIMIT:
        total = 0
        at_most = 0
        idx = range(na + nb)
        for subset in combinations(idx, na):
            r = float(ranks[list(subset)].sum())
            ua = na * nb + na * (na + 1) / 2.0 - r
            total += 1
            if min(ua, na * nb - ua) <= u + 1e-9:
                at_most += 1
        p = at_most / total
    else:
        n = na + nb
        _, counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
        var_u = na * nb / 12.0 * ((n + 1) - tie_term)
        if var_u <= 0:  # every value tied
            p = 1.0
        else:
            z = (u - na * nb / 2.0 + 0.5) / math.sqrt(var_u)
            p = min(1.0, 2.0 * _norm_cdf(z))
    return TestResult(statistic=u, p_value=p, n=(na, nb), method="mann_whitney_u")


def t_test(a, b) -> TestResult:
    """Unpaired two-sample Student's t with pooled variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least 2 observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    df = na + nb - 2
    pooled_var = ((na - 1) * va + (nb - 1) * vb) / df
    if pooled_var <= 0:
        raise ValueError("pooled variance is zero")
    t = float((a.mean() - b.mean()) / math.sqrt(pooled_var * (1.0 / na + 1.0 / nb)))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TestResult(statistic=t, p_value=min(1.0, p), n=(na, nb), method="t_test")


def pearson(x, y) -> TestResult:
    """Pearson correlation with two-sided p via the t transform."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 paired observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance in one of the samples")
    r = float(np.dot(dx, dy) / math.sqrt(sxx * syy))
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if 1.0 - r * r < 1e-15:
        p = 0.0
    else:
        t = r * math.sqrt(df / (1.0 - r * r))
        p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TestResult(statistic=r, p_value=min(1.0, p), n=(n,), method="pearson")
