"""Pandera schema for optimiser iteration histories."""

from typing import Final

import pandera as pa
from pandera.typing import Series

OPTIMIZERREPORT_COLUMN_ORDER: Final[list[str]] = ["iter", "objective", "grad_norm", "step"]


class OptimizerReportSchema(pa.DataFrameModel):
    """One row per accepted iterate."""

    iter: Series[int] = pa.Field(ge=0, nullable=False)
    objective: Series[float] = pa.Field(nullable=False)
    grad_norm: Series[float] = pa.Field(ge=0.0, nullable=False)
    step: Series[float] = pa.Field(ge=0.0, nullable=False)

    class Config:
        """Enable dtype coercion while rejecting extra columns."""

        coerce = True
        strict = True
