"""Strict validation of artifact dataframes against pandera schemas."""

import importlib
import logging
from typing import Iterable, Type

import pandas as pd
import pandera as pa
from pandera.api.pandas.model import DataFrameModel

logger = logging.getLogger(__name__)


def reorder_columns(df: pd.DataFrame, column_order: Iterable[str]) -> pd.DataFrame:
    """Return a dataframe with columns ordered to match the provided list."""
    ordered = [column for column in column_order if column in df.columns]
    extras = [column for column in df.columns if column not in ordered]
    return df.loc[:, ordered + extras]


def _column_order_for(schema: Type[DataFrameModel]) -> list[str]:
    """
    Look for a module-level `<PREFIX>_COLUMN_ORDER` next to the schema class,
    where PREFIX is the class name without `Schema`, uppercased
    (FlowSolutionSchema -> FLOWSOLUTION). Falls back to an empty order.
    """
    mod = importlib.import_module(schema.__module__)
    prefix = schema.__name__.removesuffix("Schema").upper()
    return list(getattr(mod, f"{prefix}_COLUMN_ORDER", []) or [])


def validate_dataframe(df: pd.DataFrame, schema: Type[DataFrameModel], *, context: str) -> pd.DataFrame:
    """
    Validate `df` lazily against `schema` and return it with the schema's column order.

    All failure cases are collected before raising `pandera.errors.SchemaErrors`; the
    first few are logged with `context` (usually a file path or artifact name).
    """
    ordered = reorder_columns(df, _column_order_for(schema))
    try:
        return schema.validate(ordered, lazy=True)
    except pa.errors.SchemaErrors as exc:
        logger.error(
            "Schema %s rejected %s: %s",
            schema.__name__,
            context,
            exc.failure_cases.head(10).to_dict(orient="records"),
        )
        raise
