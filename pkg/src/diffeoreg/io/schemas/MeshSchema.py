"""Pandera schemas for the sections of a mesh file."""

from typing import Final

import pandera as pa
from pandera.typing import Series

NODES_COLUMN_ORDER: Final[list[str]] = ["id", "x", "y"]
TRIANGLES_COLUMN_ORDER: Final[list[str]] = ["id", "n1", "n2", "n3"]
BOUNDARY_COLUMN_ORDER: Final[list[str]] = ["node_id", "facet_id"]


class NodesSchema(pa.DataFrameModel):
    """`id x y` rows."""

    id: Series[int] = pa.Field(ge=0, unique=True)
    x: Series[float] = pa.Field(nullable=False)
    y: Series[float] = pa.Field(nullable=False)

    class Config:
        """Coerce tokens read as text."""

        coerce = True
        strict = True


class TrianglesSchema(pa.DataFrameModel):
    """`id n1 n2 n3` rows."""

    id: Series[int] = pa.Field(ge=0, unique=True)
    n1: Series[int] = pa.Field(ge=0)
    n2: Series[int] = pa.Field(ge=0)
    n3: Series[int] = pa.Field(ge=0)

    class Config:
        """Coerce tokens read as text."""

        coerce = True
        strict = True


class BoundarySchema(pa.DataFrameModel):
    """`node_id facet_id` rows; corner nodes appear once per adjacent facet."""

    node_id: Series[int] = pa.Field(ge=0)
    facet_id: Series[int] = pa.Field(ge=0)

    class Config:
        """Coerce tokens read as text."""

        coerce = True
        strict = True
