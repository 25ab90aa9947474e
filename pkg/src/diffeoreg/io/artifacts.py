"""Readers and writers for CSV frames, matrices, vectors and JSON summaries."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Type

import numpy as np
import pandas as pd
from pandera.api.pandas.model import DataFrameModel

from diffeoreg.io.schemas.PointSetSchema import DeformedPointSetSchema, PointSetSchema
from diffeoreg.io.schemas.SchemaValidation import validate_dataframe

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_frame(
    df: pd.DataFrame,
    path: Path,
    schema: Type[DataFrameModel],
) -> Path:
    """Validate a dataframe against its schema and write it as CSV."""
    validated = validate_dataframe(df, schema, context=str(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    validated.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("Wrote %d rows to %s", len(validated), path)
    return path


def read_point_set(path: Path) -> np.ndarray:
    """Read an `x1, x2` CSV into an (N, 2) array."""
    df = pd.read_csv(path, skipinitialspace=True)
    validated = validate_dataframe(df, PointSetSchema, context=str(path))
    return validated.loc[:, ["x1", "x2"]].to_numpy(dtype=float)


def point_set_frame(points: np.ndarray) -> pd.DataFrame:
    """Return an `x1, x2` frame for an (N, 2) array."""
    points = np.asarray(points, dtype=float)
    return pd.DataFrame({"x1": points[:, 0], "x2": points[:, 1]})


def write_point_set(points: np.ndarray, path: Path) -> Path:
    """Write an (N, 2) array as an `x1, x2` CSV."""
    return write_frame(point_set_frame(points), path, PointSetSchema)


def write_deformed_points(sources: np.ndarray, images: np.ndarray, path: Path) -> Path:
    """Write source points and their images as an `x1, x2, y1, y2` CSV."""
    sources = np.asarray(sources, dtype=float)
    images = np.asarray(images, dtype=float)
    df = pd.DataFrame(
        {"x1": sources[:, 0], "x2": sources[:, 1], "y1": images[:, 0], "y2": images[:, 1]}
    )
    return write_frame(df, path, DeformedPointSetSchema)


def write_matrix(matrix: np.ndarray, path: Path, header: str = "") -> Path:
    """Write a dense matrix row-major with 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.atleast_2d(matrix), fmt=FLOAT_FORMAT, header=header, comments="")
    return path


def read_matrix(path: Path) -> np.ndarray:
    """Read a matrix written by `write_matrix` (no header)."""
    return np.atleast_2d(np.loadtxt(path, dtype=float, ndmin=2))


def write_vector(vector: np.ndarray, path: Path) -> Path:
    """Write a coefficient vector, one entry per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(vector, dtype=float).reshape(-1), fmt=FLOAT_FORMAT)
    return path


def read_vector(path: Path) -> np.ndarray:
    """Read a vector written by `write_vector`."""
    return np.atleast_1d(np.loadtxt(path, dtype=float))


def write_json(payload: dict[str, Any], path: Path) -> Path:
    """Write a JSON document; floats keep 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_round_trip_floats(payload), indent=2, sort_keys=True) + "\n")
    return path


def _round_trip_floats(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _round_trip_floats(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_trip_floats(item) for item in value]
    if isinstance(value, (np.floating, float)):
        number = float(value)
        if not np.isfinite(number):
            return str(number)
        return float(FLOAT_FORMAT % number)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value
