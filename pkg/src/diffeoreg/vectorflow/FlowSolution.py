"""Stored trajectories of a flow integration."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from diffeoreg.io.artifacts import write_frame
from diffeoreg.io.schemas.FlowSolutionSchema import FLOWSOLUTION_COLUMN_ORDER, FlowSolutionSchema

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    RK4 = "RK4"
    RK2 = "RK2"


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """
    X has shape (K+1, P, 2), gradX (K+1, P, 2, 2) and logJ (K+1, P); time
    node k is times[k] = k / K.
    """

    seeds: np.ndarray
    times: np.ndarray
    X: np.ndarray
    scheme: Scheme
    gradX: np.ndarray | None = None
    logJ: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def endpoints(self) -> np.ndarray:
        return self.X[-1]

    @property
    def end_gradient(self) -> np.ndarray:
        if self.gradX is None:
            raise ValueError("Flow solution was integrated without gradX.")
        return self.gradX[-1]

    @property
    def end_logdet(self) -> np.ndarray:
        if self.logJ is None:
            raise ValueError("Flow solution was integrated without logJ.")
        return self.logJ[-1]

    def determinant_mismatch(self) -> float:
        """max |det gradX(1) - exp(logJ(1))| / exp(logJ(1))"""
        det = np.linalg.det(self.end_gradient)
        expected = np.exp(self.end_logdet)
        return float((np.abs(det - expected) / expected).max(initial=0.0))

    def to_frame(self) -> pd.DataFrame:
        """One row per (seed, time node), seeds in order."""
        K1, P = self.X.shape[:2]
        data = {
            "seed_id": np.repeat(np.arange(P), K1),
            "t": np.tile(self.times, P),
            "x1": self.X[:, :, 0].T.reshape(-1),
            "x2": self.X[:, :, 1].T.reshape(-1),
        }
        if self.logJ is not None:
            data["logJ"] = self.logJ.T.reshape(-1)
        df = pd.DataFrame(data)
        return df.loc[:, [col for col in FLOWSOLUTION_COLUMN_ORDER if col in df.columns]]

    def write_csv(self, path: Path) -> Path:
        return write_frame(self.to_frame(), path, FlowSolutionSchema)
