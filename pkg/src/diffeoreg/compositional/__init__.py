"""Compositional maps with Jacobian-determinant bijectivity control."""

from diffeoreg.compositional.cm_maps import (
    BijectivityReport,
    FoldReport,
    PenaltyResult,
    Verdict,
    bijectivity_check,
    cm_target_gradient,
    detect_folds,
    evaluate_cm,
    evaluate_cm_curved,
    jacobian_field,
    penalty,
)
from diffeoreg.compositional.DisplacementModel import DisplacementModel

__all__ = [
    "BijectivityReport",
    "DisplacementModel",
    "FoldReport",
    "PenaltyResult",
    "Verdict",
    "bijectivity_check",
    "cm_target_gradient",
    "detect_folds",
    "evaluate_cm",
    "evaluate_cm_curved",
    "jacobian_field",
    "penalty",
]
