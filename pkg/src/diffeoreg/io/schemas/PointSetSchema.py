"""Pandera schema for 2-D point set files."""

from typing import Final

import pandera as pa
from pandera.typing import Series

POINTSET_COLUMN_ORDER: Final[list[str]] = ["x1", "x2"]


class PointSetSchema(pa.DataFrameModel):
    """One row per point."""

    x1: Series[float] = pa.Field(nullable=False)
    x2: Series[float] = pa.Field(nullable=False)

    class Config:
        """Coerce numeric text and reject extra columns."""

        coerce = True
        strict = True


class DeformedPointSetSchema(pa.DataFrameModel):
    """Source points and their images under a map."""

    x1: Series[float] = pa.Field(nullable=False)
    x2: Series[float] = pa.Field(nullable=False)
    y1: Series[float] = pa.Field(nullable=False)
    y2: Series[float] = pa.Field(nullable=False)

    class Config:
        """Coerce numeric text and reject extra columns."""

        coerce = True
        strict = True


DEFORMEDPOINTSET_COLUMN_ORDER: Final[list[str]] = ["x1", "x2", "y1", "y2"]
