"""Independent reference implementations used as test oracles.

Everything here re-derives expected values directly from definitions
(pure-python or flat-numpy enumeration); none of it shares code with the
incremental or blocked paths it is used to check.  The only library pieces
reused are the aggregation contract (mean over defined groups) and
alignment, whose outputs the oracles re-consume.
"""

import math

import numpy as np

from tiecal import PairCounts, StatKind, align, mean_defined


def naive_suff_stats(h, m, eps=0.0):
    """Pure-python pair classification (absolute epsilon)."""
    c = d = th = tm = thm = 0
    n = len(h)
    for i in range(n):
        for j in range(i + 1, n):
            h_tie = h[i] == h[j]
            m_tie = abs(m[i] - m[j]) <= eps
            if h_tie and m_tie:
                thm += 1
            elif h_tie:
                th += 1
            elif m_tie:
                tm += 1
            elif (h[i] < h[j]) == (m[i] < m[j]):
                c += 1
            else:
                d += 1
    return PairCounts(c, d, th, tm, thm)


def pair_views(groups):
    """Per group: (gaps, human-tie mask, concordance mask), by enumeration."""
    views = []
    for _, hg, mg in groups:
        if hg.size < 2:
            views.append(None)
            continue
        iu, ju = np.triu_indices(hg.size, k=1)
        gaps = np.abs(mg[iu] - mg[ju])
        h_tie = hg[iu] == hg[ju]
        conc = (hg[iu] > hg[ju]) == (mg[iu] > mg[ju])
        views.append((gaps, h_tie, conc))
    return views


def oracle_stat(kind, c, d, th, tm, thm):
    """Independent restatement of the formulas the oracle sweeps."""
    total = c + d + th + tm + thm
    if kind is StatKind.ACC_EQ:
        return (c + thm) / total if total else None
    if kind is StatKind.TAU_EQ:
        return (c + thm - d - th - tm) / total if total else None
    if kind is StatKind.TAU_B:
        f1, f2 = c + d + th, c + d + tm
        return (c - d) / math.sqrt(f1 * f2) if f1 and f2 else None
    if kind is StatKind.TAU_14:
        den = c + d + tm
        return (c - d) / den if den else None
    if kind is StatKind.TAU_10:
        den = c + d + tm
        return (c - d - tm) / den if den else None
    raise AssertionError(f"oracle does not cover {kind}")


def brute_force_calibration(human, metric, mode, kind):
    """Maximize by re-evaluating every candidate threshold from scratch.

    Candidates are zero plus every within-group gap; the smallest candidate
    attaining the maximum wins, mirroring the documented tie-break.
    """
    groups = align(human, metric, mode)
    views = pair_views(groups)
    candidates = {0.0}
    for view in views:
        if view is not None:
            candidates.update(float(g) for g in view[0])
    best_eps = 0.0
    best_val = None
    for eps in sorted(candidates):
        values = np.full(len(groups), np.nan)
        for gi, view in enumerate(views):
            if view is None:
                continue
            gaps, h_tie, conc = view
            m_tie = gaps <= eps
            thm = int(np.count_nonzero(h_tie & m_tie))
            th = int(np.count_nonzero(h_tie & ~m_tie))
            tm = int(np.count_nonzero(m_tie & ~h_tie))
            open_pairs = ~h_tie & ~m_tie
            c = int(np.count_nonzero(open_pairs & conc))
            d = int(np.count_nonzero(open_pairs & ~conc))
            value = oracle_stat(kind, c, d, th, tm, thm)
            if value is not None:
                values[gi] = value
        value = mean_defined(values)
        if value is not None and (best_val is None or value > best_val):
            best_val = value
            best_eps = eps
    return best_eps, best_val
