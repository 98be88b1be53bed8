"""Tie-aware ranking statistics and tie calibration for metric meta-evaluation."""

from .calibration import (
    CalibrationConfig,
    CalibrationResult,
    F1CurvePoint,
    TieHistogram,
    apply_epsilon,
    calibrate,
    f1_curve,
    tie_location_histogram,
)
from .data import (
    CampaignFile,
    FileRole,
    ReportDocument,
    ScoreFileError,
    dump_scores,
    format_value,
    load_scores,
    rank_metrics,
    write_report,
)
from .grouping import (
    CorrelationReport,
    GroupingMode,
    ScoreMatrix,
    align,
    bucketize,
    grouped_stat,
    mean_defined,
)
from .stats import (
    CLASS_STAT_KINDS,
    COEFFICIENT_TABLES,
    OVERALL_STAT_KINDS,
    CoefficientTable,
    EpsilonMode,
    EpsilonPolicy,
    PairCounts,
    StatKind,
    as_score_vector,
    break_ties_randomly,
    counts_from_cells,
    pearson,
    spearman,
    stat_from_counts,
    stat_from_table,
    suff_stats,
    tau_c_context,
)

__version__ = "0.1.0"

__all__ = [
    "CLASS_STAT_KINDS",
    "COEFFICIENT_TABLES",
    "OVERALL_STAT_KINDS",
    "CalibrationConfig",
    "CalibrationResult",
    "CampaignFile",
    "CoefficientTable",
    "CorrelationReport",
    "EpsilonMode",
    "EpsilonPolicy",
    "F1CurvePoint",
    "FileRole",
    "GroupingMode",
    "PairCounts",
    "ReportDocument",
    "ScoreFileError",
    "ScoreMatrix",
    "StatKind",
    "TieHistogram",
    "align",
    "apply_epsilon",
    "as_score_vector",
    "break_ties_randomly",
    "bucketize",
    "calibrate",
    "counts_from_cells",
    "dump_scores",
    "f1_curve",
    "format_value",
    "grouped_stat",
    "load_scores",
    "mean_defined",
    "pearson",
    "rank_metrics",
    "spearman",
    "stat_from_counts",
    "stat_from_table",
    "suff_stats",
    "tau_c_context",
    "tie_location_histogram",
    "write_report",
    "__version__",
]
