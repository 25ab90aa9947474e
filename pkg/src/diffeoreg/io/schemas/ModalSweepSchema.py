"""Pandera schema for modal truncation sweeps."""

from typing import Final

import pandera as pa
from pandera.typing import Series

MODALSWEEP_COLUMN_ORDER: Final[list[str]] = ["m", "E_proj", "E_obj"]


class ModalSweepSchema(pa.DataFrameModel):
    """Worst-case projection and objective errors per basis size."""

    m: Series[int] = pa.Field(ge=0, nullable=False)
    E_proj: Series[float] = pa.Field(ge=0.0, nullable=False)
    E_obj: Series[float] = pa.Field(nullable=True)

    class Config:
        """Enable dtype coercion while rejecting extra columns."""

        coerce = True
        strict = True
