"""Pandera schema for exported flow trajectories."""

from typing import Final

import pandera as pa
from pandera.typing import Series

FLOWSOLUTION_COLUMN_ORDER: Final[list[str]] = ["seed_id", "t", "x1", "x2", "logJ"]


class FlowSolutionSchema(pa.DataFrameModel):
    """One row per (seed, time node); logJ only when it was integrated."""

    seed_id: Series[int] = pa.Field(ge=0, nullable=False)
    t: Series[float] = pa.Field(ge=0.0, le=1.0, nullable=False)
    x1: Series[float] = pa.Field(nullable=False)
    x2: Series[float] = pa.Field(nullable=False)
    logJ: Series[float] = pa.Field(nullable=False, required=False)

    class Config:
        """Enable dtype coercion; extra columns are a bug in the exporter."""

        coerce = True
        strict = True
