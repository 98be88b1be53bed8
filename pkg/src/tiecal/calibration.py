"""Tie calibration: sweep candidate thresholds to maximize a statistic.

The statistic induced by a gap-threshold tie rule is a step function that
only changes at observed pair gaps, so the candidate set is exactly zero
plus every distinct within-group gap.  The sweep walks pairs in ascending
gap order, moving each pair out of its zero-threshold class into one of
the metric-tied classes and keeping per-group counts current, and records
the grouped value once per distinct gap (after the whole block of
equal-gap pairs has been applied).  Ties in the maximum resolve to the
smallest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grouping import (
    CorrelationReport,
    GroupingMode,
    ScoreMatrix,
    _mean_from,
    align,
    grouped_stat,
)
from .stats import (
    EpsilonMode,
    EpsilonPolicy,
    PairCounts,
    StatKind,
    _as_policy,
    _stat_from_ints,
    tau_c_context,
)

# Class indices used while sweeping: the first three are the classes a pair
# can start in at threshold zero, the last two are where it can move.
_CONC, _DISC, _TIED_H, _TIED_M, _TIED_BOTH = range(5)

CheckpointHook = Callable[[float, list[PairCounts], "float | None"], None]


@dataclass(frozen=True)
class CalibrationConfig:
    """What to maximize and how to search.

    ``sample_fraction`` = 1 sweeps every distinct gap; smaller values draw
    that fraction of pairs (without replacement, seeded) as threshold
    candidates, while each candidate is still evaluated on all pairs.
    """

    kind: StatKind = StatKind.ACC_EQ
    mode: GroupingMode = GroupingMode.GROUP_BY_ITEM
    eps_mode: EpsilonMode = EpsilonMode.ABSOLUTE
    sample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.sample_fraction <= 1.0):
            raise ValueError(f"sample_fraction must be in (0, 1], got {self.sample_fraction}")


@dataclass(frozen=True)
class CalibrationResult:
    """The chosen threshold and the statistic it achieves."""

    epsilon_star: float
    stat_star: float | None
    candidates_evaluated: int
    exact: bool
    config: CalibrationConfig
    report: CorrelationReport


def calibrate(human: ScoreMatrix, metric: ScoreMatrix,
              config: CalibrationConfig = CalibrationConfig(), *,
              checkpoint_hook: CheckpointHook | None = None) -> CalibrationResult:
    """Find the tie threshold maximizing the configured statistic.

    Returns the smallest threshold achieving the maximum; the reported
    value is re-verified against a fresh batch evaluation at that
    threshold.  ``checkpoint_hook``, when given, is called at every
    candidate threshold with (epsilon, per-group counts, grouped value).

    Raises ValueError when no group has two aligned entries.
    """
    groups = align(human, metric, config.mode)
    pol0 = EpsilonPolicy(0.0, config.eps_mode)

    gap_parts: list[np.ndarray] = []
    grp_parts: list[np.ndarray] = []
    htie_parts: list[np.ndarray] = []
    cls_parts: list[np.ndarray] = []
    contexts: list[tuple[int, int] | None] = []
    for gi, (_, h, m) in enumerate(groups):
        contexts.append(tau_c_context(h, m) if config.kind is StatKind.TAU_C else None)
        if h.size < 2:
            continue
        iu, ju = np.triu_indices(h.size, k=1)
        hi, hj = h[iu], h[ju]
        mi, mj = m[iu], m[ju]
        gaps = pol0.gaps(mi, mj)
        h_tie = hi == hj
        m_tie0 = gaps <= 0.0
        conc = (hi > hj) == (mi > mj)
        cls0 = np.where(
            h_tie & m_tie0, _TIED_BOTH,
            np.where(h_tie, _TIED_H,
                     np.where(m_tie0, _TIED_M,
                              np.where(conc, _CONC, _DISC))))
        gap_parts.append(gaps)
        grp_parts.append(np.full(gaps.size, gi, dtype=np.int64))
        htie_parts.append(h_tie)
        cls_parts.append(cls0.astype(np.int64))

    if not gap_parts:
        raise ValueError("nothing to calibrate: no group has two aligned entries")

    gap_all = np.concatenate(gap_parts)
    grp_all = np.concatenate(grp_parts)
    htie_all = np.concatenate(htie_parts)
    cls_all = np.concatenate(cls_parts)
    total_pairs = gap_all.size

    if config.sample_fraction >= 1.0:
        candidates = np.unique(gap_all)
        exact = True
    else:
        rng = np.random.default_rng(config.seed)
        size = max(1, int(round(config.sample_fraction * total_pairs)))
        picked = rng.choice(total_pairs, size=size, replace=False)
        candidates = np.unique(gap_all[picked])
        exact = False
    if candidates.size == 0 or candidates[0] != 0.0:
        candidates = np.concatenate(([0.0], candidates))

    order = np.argsort(gap_all, kind="stable")
    sorted_gaps = gap_all[order].tolist()
    sorted_grp = grp_all[order].tolist()
    sorted_htie = htie_all[order].tolist()
    sorted_cls = cls_all[order].tolist()
    cand_list = candidates.tolist()

    n_groups = len(groups)
    counts: list[list[int]] = [[0, 0, 0, 0, 0] for _ in range(n_groups)]
    for gi, cls in zip(sorted_grp, sorted_cls):
        counts[gi][cls] += 1

    kind = config.kind
    values = np.full(n_groups, np.nan, dtype=np.float64)
    defined = 0
    for gi in range(n_groups):
        ctx = contexts[gi]
        v = _stat_from_ints(kind, *counts[gi],
                            k=ctx[0] if ctx else None, n=ctx[1] if ctx else None)
        if v is not None:
            values[gi] = v
            defined += 1

    best_eps = 0.0
    best_val: float | None = None

    def record(eps_c: float) -> None:
        nonlocal best_eps, best_val
        value = _mean_from(values, defined)
        if checkpoint_hook is not None:
            snapshot = [PairCounts(*counts[gi]) for gi in range(n_groups)]
            checkpoint_hook(eps_c, snapshot, value)
        if value is not None and (best_val is None or value > best_val):
            best_val = value
            best_eps = eps_c

    ci = 0
    n_cand = len(cand_list)
    for p in range(total_pairs):
        gap = sorted_gaps[p]
        while ci < n_cand and cand_list[ci] < gap:
            record(cand_list[ci])
            ci += 1
        gi = sorted_grp[p]
        row = counts[gi]
        row[sorted_cls[p]] -= 1
        row[_TIED_BOTH if sorted_htie[p] else _TIED_M] += 1
        ctx = contexts[gi]
        v = _stat_from_ints(kind, *row,
                            k=ctx[0] if ctx else None, n=ctx[1] if ctx else None)
        was_defined = not math.isnan(values[gi])
        if v is None:
            values[gi] = np.nan
            if was_defined:
                defined -= 1
        else:
            values[gi] = v
            if not was_defined:
                defined += 1
    while ci < n_cand:
        record(cand_list[ci])
        ci += 1

    report = grouped_stat(human, metric, config.mode, kind,
                          EpsilonPolicy(best_eps, config.eps_mode))
    if report.value != best_val:
        raise RuntimeError(
            "calibration sweep disagrees with batch re-evaluation at "
            f"epsilon={best_eps!r}: {best_val!r} vs {report.value!r}")
    return CalibrationResult(
        epsilon_star=float(best_eps),
        stat_star=report.value,
        candidates_evaluated=n_cand,
        exact=exact,
        config=config,
        report=report,
    )


def apply_epsilon(human: ScoreMatrix, metric: ScoreMatrix, mode: GroupingMode,
                  kind: StatKind, eps: EpsilonPolicy | float) -> CorrelationReport:
    """Evaluate a statistic at a fixed, externally chosen tie threshold.

    This is the held-out workflow: calibrate a threshold on one campaign,
    then apply it unchanged to another.
    """
    return grouped_stat(human, metric, mode, kind, eps)


@dataclass(frozen=True)
class TieHistogram:
    """Binned distribution of per-pair average metric scores.

    ``all_pairs`` counts every within-group pair; ``newly_tied`` counts the
    pairs that are tied under the policy but were not tied at threshold
    zero.  Both share ``bin_edges``.
    """

    bin_edges: np.ndarray
    all_pairs: np.ndarray
    newly_tied: np.ndarray


def tie_location_histogram(human: ScoreMatrix, metric: ScoreMatrix,
                           eps: EpsilonPolicy | float, bins: int,
                           mode: GroupingMode = GroupingMode.NO_GROUPING) -> TieHistogram:
    """Where on the score axis does a threshold introduce ties?

    For every within-group pair the location is the average of its two
    metric scores; the histogram range covers all pairs.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    pol = _as_policy(eps)
    avg_parts: list[np.ndarray] = []
    new_parts: list[np.ndarray] = []
    for _, h, m in align(human, metric, mode):
        if m.size < 2:
            continue
        iu, ju = np.triu_indices(m.size, k=1)
        mi, mj = m[iu], m[ju]
        gaps = pol.gaps(mi, mj)
        avg_parts.append((mi + mj) / 2.0)
        new_parts.append((gaps > 0.0) & (gaps <= pol.epsilon))
    if not avg_parts:
        edges = np.linspace(0.0, 1.0, bins + 1)
        zeros = np.zeros(bins, dtype=np.int64)
        return TieHistogram(edges, zeros, zeros.copy())
    averages = np.concatenate(avg_parts)
    newly = np.concatenate(new_parts)
    all_counts, edges = np.histogram(averages, bins=bins)
    new_counts, _ = np.histogram(averages[newly], bins=edges)
    return TieHistogram(edges, all_counts.astype(np.int64), new_counts.astype(np.int64))


@dataclass(frozen=True)
class F1CurvePoint:
    epsilon: float
    ties_f1: float | None
    rank_f1: float | None
    acc_eq: float | None


def f1_curve(human: ScoreMatrix, metric: ScoreMatrix, mode: GroupingMode,
             eps_grid: Sequence[float],
             eps_mode: EpsilonMode = EpsilonMode.ABSOLUTE) -> list[F1CurvePoint]:
    """Tie-F1, correct-rank-F1, and pairwise accuracy along a threshold grid."""
    if len(eps_grid) == 0:
        raise ValueError("eps_grid must not be empty")
    points = []
    for eps in sorted(float(e) for e in eps_grid):
        pol = EpsilonPolicy(eps, eps_mode)
        points.append(F1CurvePoint(
            epsilon=eps,
            ties_f1=apply_epsilon(human, metric, mode, StatKind.TIES_F1, pol).value,
            rank_f1=apply_epsilon(human, metric, mode, StatKind.RANK_F1, pol).value,
            acc_eq=apply_epsilon(human, metric, mode, StatKind.ACC_EQ, pol).value,
        ))
    return points
