"""M-orthonormal reduced bases of the coefficient space."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from diffeoreg.errors import ModalError
from diffeoreg.io.artifacts import FLOAT_FORMAT

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModalBasis:
    """
    Columns of `W` span the reduced space; `metric` is M and `operator` is A.
    Eigen bases carry ascending eigenvalues, gfem bases carry none.
    """

    W: np.ndarray
    eigenvalues: np.ndarray | None
    metric: np.ndarray
    operator: np.ndarray | None = None
    form_tag: str = "custom"

    def __post_init__(self) -> None:
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2:
            raise ModalError(f"W must be a matrix, got {W.ndim} dimensions.")
        metric = np.asarray(self.metric, dtype=float)
        if metric.shape != (W.shape[0], W.shape[0]):
            raise ModalError(f"Metric must be {W.shape[0]}x{W.shape[0]}, got {metric.shape}.")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "metric", metric)
        if self.eigenvalues is not None:
            eigenvalues = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
            if eigenvalues.shape[0] != W.shape[1]:
                raise ModalError(f"{W.shape[1]} modes but {eigenvalues.shape[0]} eigenvalues.")
            object.__setattr__(self, "eigenvalues", eigenvalues)

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def truncate(self, m: int) -> ModalBasis:
        """The first m columns (nested for eigen bases)."""
        if not 0 <= m <= self.m:
            raise ModalError(f"Cannot truncate a {self.m}-mode basis to {m} modes.")
        eigenvalues = None if self.eigenvalues is None else self.eigenvalues[:m]
        return ModalBasis(self.W[:, :m], eigenvalues, self.metric, self.operator, self.form_tag)

    def m_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(float(u @ self.metric @ u), 0.0)))

    def project(self, u: np.ndarray) -> tuple[np.ndarray, float]:
        """Coefficients W^T M u and the M-norm of the residual u - W W^T M u."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape[0] != self.N:
            raise ModalError(f"Vector has {u.shape[0]} entries, basis dimension is {self.N}.")
        coefficients = self.W.T @ (self.metric @ u)
        return coefficients, self.m_norm(u - self.W @ coefficients)

    def projector(self, u: np.ndarray) -> np.ndarray:
        """P_W u as a full coefficient vector."""
        return self.W @ self.project(u)[0]

    def orthonormality_error(self) -> float:
        return float(np.abs(self.W.T @ self.metric @ self.W - np.eye(self.m)).max(initial=0.0))

    def save(self, path: Path) -> Path:
        """Header `N m form_tag`, eigenvalues (or `none`), then W row-major."""
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{self.N} {self.m} {self.form_tag}"]
        if self.eigenvalues is None:
            lines.append("none")
        else:
            lines.append(" ".join(FLOAT_FORMAT % value for value in self.eigenvalues))
        lines.extend(" ".join(FLOAT_FORMAT % value for value in row) for row in self.W)
        path.write_text("\n".join(lines) + "\n")
        logger.debug("Wrote %d-mode basis to %s", self.m, path)
        return path

    @classmethod
    def load(cls, path: Path, metric: np.ndarray, operator: np.ndarray | None = None) -> ModalBasis:
        lines = path.read_text().splitlines()
        try:
            n_text, m_text, form_tag = lines[0].split(maxsplit=2)
            N, m = int(n_text), int(m_text)
        except (IndexError, ValueError) as exc:
            raise ModalError(f"{path}: malformed basis header.") from exc
        eigenvalues = None if lines[1].strip() == "none" else np.array(lines[1].split(), dtype=float)
        rows = [line.split() for line in lines[2 : 2 + N]]
        W = np.array(rows, dtype=float).reshape(N, m)
        return cls(W, eigenvalues, metric, operator, form_tag)
