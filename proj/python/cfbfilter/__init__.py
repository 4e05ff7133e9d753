"""Class-wise feature bank OOD filtering."""

from ._core import (
    FeatureBankSet,
    FilterDecision,
    GtFlag,
    Metric,
    RejectReason,
    auroc,
    class_stats,
    config_schema,
    energy_score,
    entropy_score,
    filter_predictions,
    k_from_ratio,
    msp_score,
    ood_score,
    prototype_scores,
    run_simulation,
    threshold,
)

__all__ = [
    "FeatureBankSet",
    "FilterDecision",
    "GtFlag",
    "Metric",
    "RejectReason",
    "auroc",
    "class_stats",
    "config_schema",
    "energy_score",
    "entropy_score",
    "filter_predictions",
    "k_from_ratio",
    "msp_score",
    "ood_score",
    "prototype_scores",
    "run_simulation",
    "threshold",
]
