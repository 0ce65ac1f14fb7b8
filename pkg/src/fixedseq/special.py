"""Distribution functions behind the row-wise tests.

The Student t CDF is expressed through the regularized incomplete beta
function: ``P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)`` in the tails and
``P(|T| < t) = I_{t^2/(df+t^2)}(1/2, df/2)`` near zero, so neither the tails
nor the centre suffer from cancellation.

Exact Wilcoxon null distributions are obtained by counting sign (or subset)
assignments over doubled midranks, which are integers even with ties.
"""

import numpy as np
from scipy import special, stats

SIGNED_RANK_EXACT_MAX_N = 25
RANK_SUM_EXACT_MAX_N = 20
RANK_SUM_EXACT_MAX_MIN_GROUP = 10


def _tail_central(t, df):
    """``P(T > |t|)`` and ``P(0 < T < |t|)``, each taken from the better-conditioned beta form."""
    t = np.asarray(t, dtype=float)
    t2 = t * t
    x = df / (df + t2)
    xc = t2 / (df + t2)
    tail = 0.5 * special.betainc(0.5 * df, 0.5, x)
    central = 0.5 * special.betainc(0.5, 0.5 * df, xc)
    large = x < xc
    return t, large, np.where(large, tail, 0.5 - central), np.where(large, 0.5 - tail, central)


def t_two_sided_p(t, df):
    """``2 * (1 - F(|t|))`` for a central t distribution with ``df`` degrees of freedom."""
    _, large, tail, central = _tail_central(t, df)
    return np.where(large, 2.0 * tail, 1.0 - 2.0 * central)


def t_cdf(t, df):
    """Central Student t CDF."""
    t, large, tail, central = _tail_central(t, df)
    upper = np.where(large, 1.0 - tail, 0.5 + central)
    lower = np.where(large, tail, 0.5 - central)
    return np.where(t > 0, upper, lower)


def t_sf(t, df):
    """Upper tail ``1 - F(t)``, i.e. the one-sided p-value for ``H': mu > 0``."""
    return t_cdf(-np.asarray(t, dtype=float), df)


def _doubled_ranks(values):
    return np.rint(2 * stats.rankdata(values)).astype(np.int64)


def _tail_p(counts, observed, total):
    lower = counts[: observed + 1].sum() / total
    upper = counts[observed:].sum() / total
    return min(1.0, 2.0 * min(lower, upper))


def signed_rank_counts(doubled_ranks):
    """Number of sign assignments giving each doubled positive-rank sum."""
    counts = np.zeros(int(np.sum(doubled_ranks)) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    return counts


def signed_rank_p(x, exact=None):
    """Two-sided p-value of the one-sample Wilcoxon signed-rank test of ``median == 0``.

    Zeros are dropped.  Ties among ``|x|`` get midranks.  The null distribution
    is exact (enumerated) for up to 25 nonzero values unless ``exact`` says
    otherwise; beyond that a normal approximation with tie and continuity
    corrections is used.
    """
    x = np.asarray(x, dtype=float)
    x = x[x != 0]
    n = x.size
    if n == 0:
        return 1.0
    ranks2 = _doubled_ranks(np.abs(x))
    w2 = int(ranks2[x > 0].sum())
    if exact is None:
        exact = n <= SIGNED_RANK_EXACT_MAX_N
    if exact:
        return _tail_p(signed_rank_counts(ranks2), w2, 2.0**n)
    _, tie_sizes = np.unique(np.abs(x), return_counts=True)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes**3 - tie_sizes) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(w2 / 2.0 - mean) - 0.5, 0.0) / np.sqrt(var)
    return min(1.0, 2.0 * stats.norm.sf(z))


def rank_sum_counts(doubled_ranks, n1):
    """Number of size-``n1`` subsets giving each doubled rank sum."""
    total = int(np.sum(doubled_ranks))
    counts = np.zeros((n1 + 1, total + 1), dtype=np.int64)
    counts[0, 0] = 1
    for r in doubled_ranks:
        for j in range(n1, 0, -1):
            counts[j, r:] += counts[j - 1, : total + 1 - r]
    return counts[n1]


def rank_sum_p(x1, x2, exact=None):
    """Two-sided p-value of the Wilcoxon rank-sum test between two samples.

    Exact when the pooled size is at most 20 (hence the smaller group at most
    10); otherwise a normal approximation with tie and continuity corrections.
    A pooled sample whose ranks are all tied has p = 1.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n1, n2 = x1.size, x2.size
    n = n1 + n2
    pooled = np.concatenate([x1, x2])
    ranks2 = _doubled_ranks(pooled)
    w2 = int(ranks2[:n1].sum())
    if exact is None:
        exact = n <= RANK_SUM_EXACT_MAX_N and min(n1, n2) <= RANK_SUM_EXACT_MAX_MIN_GROUP
    if exact:
        counts = rank_sum_counts(ranks2, n1)
        return _tail_p(counts, w2, float(counts.sum()))
    _, tie_sizes = np.unique(pooled, return_counts=True)
    mean = n1 * (n + 1) / 2.0
    var = n1 * n2 / 12.0 * ((n + 1) - np.sum(tie_sizes**3 - tie_sizes) / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(w2 / 2.0 - mean) - 0.5, 0.0) / np.sqrt(var)
    return min(1.0, 2.0 * stats.norm.sf(z))
