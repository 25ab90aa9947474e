"""Exception hierarchy shared by every diffeoreg module."""

from __future__ import annotations

import numpy as np


class RegistrationError(Exception):
    """Base class for all errors raised by diffeoreg."""


class DomainError(RegistrationError, ValueError):
    """Invalid polygon, unsupported domain, or a point outside a closure."""


class QuadratureError(DomainError):
    """Requested quadrature order has no tabulated rule."""


class BasisError(RegistrationError, ValueError):
    """Unsupported basis/form combination or invalid form parameters."""


class ModalError(RegistrationError, ValueError):
    """Failed decomposition or inconsistent sizes in modal reduction."""


class ConditioningError(RegistrationError):
    """A matrix that must be inverted is numerically singular."""


class TargetError(RegistrationError, ValueError):
    """Target evaluation failed (count mismatch, underflow, singular Gram)."""


class OptimizerError(RegistrationError):
    """The optimisation problem cannot be set up (e.g. singular metric)."""


class BoundaryLeakError(RegistrationError):
    """A discrete trajectory left the closed domain by more than the tolerance."""

    def __init__(self, seed_index: int, step: int, point: np.ndarray, distance: float) -> None:
        self.seed_index = seed_index
        self.step = step
        self.point = np.asarray(point, dtype=float)
        self.distance = distance
        super().__init__(
            f"Trajectory of seed {seed_index} left the domain at step {step}: "
            f"point ({self.point[0]:.6g}, {self.point[1]:.6g}) is {distance:.3g} outside."
        )


class ConfigError(RegistrationError, ValueError):
    """Run configuration failed validation."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
