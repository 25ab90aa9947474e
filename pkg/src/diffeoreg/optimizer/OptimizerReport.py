"""Iteration history and termination state of a descent run."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from diffeoreg.io.artifacts import write_frame, write_vector
from diffeoreg.io.schemas.OptimizerReportSchema import OptimizerReportSchema
from diffeoreg.io.schemas.SchemaValidation import validate_dataframe


class TerminationReason(str, Enum):
    GRAD_TOL = "grad_tol"
    MAX_ITERS = "max_iters"
    LINE_SEARCH = "line_search"


@dataclass(frozen=True)
class IterateRecord:
    iteration: int
    objective: float
    grad_norm: float
    step: float
    phase: int = 0


@dataclass(eq=False)
class OptimizerReport:
    """
    One record per accepted iterate, starting with the initial point
    (iteration 0, step 0). `phase` counts penalty continuations; objectives
    are nonincreasing within a phase.
    """

    records: list[IterateRecord] = field(default_factory=list)
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reason: TerminationReason = TerminationReason.MAX_ITERS
    continuations: int = 0
    penalty_weight: float = 0.0

    @property
    def initial_objective(self) -> float:
        return self.records[0].objective

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    def phase_objectives(self, phase: int) -> np.ndarray:
        return np.array([r.objective for r in self.records if r.phase == phase])

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(
            {
                "iter": [r.iteration for r in self.records],
                "objective": [r.objective for r in self.records],
                "grad_norm": [r.grad_norm for r in self.records],
                "step": [r.step for r in self.records],
            }
        )
        return validate_dataframe(df, OptimizerReportSchema, context="optimizer report")

    def write(self, directory: Path) -> tuple[Path, Path]:
        """report.csv and coefficients.txt under `directory`."""
        report_path = write_frame(self.to_frame(), directory / "report.csv", OptimizerReportSchema)
        coefficient_path = write_vector(self.coefficients, directory / "coefficients.txt")
        return report_path, coefficient_path
