"""Analytic scalar fields with gradients, used as registration targets and Z_N members."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np

from diffeoreg.errors import TargetError

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-12


class ScalarField(Protocol):
    """u(x) with gradient, both evaluated on (P, 2) arrays."""

    def value(self, points: np.ndarray) -> np.ndarray: ...

    def gradient(self, points: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned hold-all region on which a field is defined."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def check(self, points: np.ndarray, name: str) -> None:
        inside = (
            (points[:, 0] >= self.x_min - SUPPORT_TOL)
            & (points[:, 0] <= self.x_max + SUPPORT_TOL)
            & (points[:, 1] >= self.y_min - SUPPORT_TOL)
            & (points[:, 1] <= self.y_max + SUPPORT_TOL)
        )
        if not inside.all():
            bad = points[int(np.argmin(inside))]
            raise TargetError(f"Field '{name}' evaluated outside its support at ({bad[0]:.6g}, {bad[1]:.6g}).")


@dataclass(frozen=True)
class _BaseField:
    support: SupportBox | None = field(default=None, kw_only=True)

    name = "field"

    def _points(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.support is not None:
            self.support.check(points, self.name)
        return points


@dataclass(frozen=True)
class ConstantField(_BaseField):
    level: float = 1.0
    name = "constant"

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(self._points(points)), self.level)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.zeros((len(self._points(points)), 2))


@dataclass(frozen=True)
class AffineField(_BaseField):
    """u(x) = offset + slope . x"""

    offset: float = 0.0
    slope: tuple[float, float] = (1.0, 0.0)
    name = "affine"

    def value(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return self.offset + points @ np.asarray(self.slope)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.slope, dtype=float), (len(self._points(points)), 2)).copy()


@dataclass(frozen=True)
class MonomialField(_BaseField):
    """u(x) = x1^i x2^j"""

    power_x1: int = 0
    power_x2: int = 0
    name = "monomial"

    def value(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        return points[:, 0] ** self.power_x1 * points[:, 1] ** self.power_x2

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        i, j = self.power_x1, self.power_x2
        x1, x2 = points[:, 0], points[:, 1]
        d1 = i * x1 ** max(i - 1, 0) * x2**j if i else np.zeros(len(points))
        d2 = j * x1**i * x2 ** max(j - 1, 0) if j else np.zeros(len(points))
        return np.column_stack([d1, d2])


@dataclass(frozen=True)
class GaussianBump(_BaseField):
    """amplitude * exp(-|x - center|^2 / (2 width^2))"""

    center: tuple[float, float] = (0.5, 0.5)
    width: float = 0.1
    amplitude: float = 1.0
    name = "gaussian_bump"

    def value(self, points: np.ndarray) -> np.ndarray:
        diff = self._points(points) - np.asarray(self.center)
        return self.amplitude * np.exp(-(diff**2).sum(axis=1) / (2.0 * self.width**2))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        diff = self._points(points) - np.asarray(self.center)
        return -diff / self.width**2 * self.value(points)[:, None]


@dataclass(frozen=True)
class GaussianRidge(_BaseField):
    """
    A ridge normal to `direction`, translated by the parameter mu:
    amplitude * exp(-(d . x - offset - mu)^2 / (2 width^2)).
    """

    offset: float = 0.4
    width: float = 0.1
    mu: float = 0.0
    direction: tuple[float, float] = (1.0, 0.0)
    amplitude: float = 1.0
    name = "gaussian_ridge"

    def _unit(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        return d / np.linalg.norm(d)

    def _distance(self, points: np.ndarray) -> np.ndarray:
        return points @ self._unit() - self.offset - self.mu

    def value(self, points: np.ndarray) -> np.ndarray:
        s = self._distance(self._points(points))
        return self.amplitude * np.exp(-(s**2) / (2.0 * self.width**2))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        s = self._distance(points)
        scale = -s / self.width**2 * self.amplitude * np.exp(-(s**2) / (2.0 * self.width**2))
        return scale[:, None] * self._unit()[None, :]


@dataclass(frozen=True)
class SmoothedStep(_BaseField):
    """0.5 (1 + tanh((x2 - c(x1)) / width)) across the curve x2 = c0 + c1 x1 + c2 x1^2 (+ mu)."""

    curve: tuple[float, float, float] = (0.5, 0.0, 0.0)
    width: float = 0.05
    mu: float = 0.0
    name = "smoothed_step"

    def _level(self, points: np.ndarray) -> np.ndarray:
        c0, c1, c2 = self.curve
        x1 = points[:, 0]
        return (points[:, 1] - (c0 + self.mu + c1 * x1 + c2 * x1**2)) / self.width

    def value(self, points: np.ndarray) -> np.ndarray:
        return 0.5 * (1.0 + np.tanh(self._level(self._points(points))))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        _, c1, c2 = self.curve
        sech2 = 1.0 - np.tanh(self._level(points)) ** 2
        scale = 0.5 * sech2 / self.width
        return np.column_stack([-scale * (c1 + 2.0 * c2 * points[:, 0]), scale])


FIELD_TYPES: dict[str, type[_BaseField]] = {
    "constant": ConstantField,
    "affine": AffineField,
    "gaussian_bump": GaussianBump,
    "gaussian_ridge": GaussianRidge,
    "smoothed_step": SmoothedStep,
}


def field_from_tag(tag: str, params: dict[str, Any] | None = None, mu: float | None = None) -> _BaseField:
    """Build a library field; `mu` overrides the parameter of parametric families."""
    try:
        cls = FIELD_TYPES[tag]
    except KeyError as exc:
        raise TargetError(f"Unknown field tag '{tag}'; expected one of {sorted(FIELD_TYPES)}.") from exc
    kwargs = {key: tuple(val) if isinstance(val, list) else val for key, val in (params or {}).items()}
    if mu is not None:
        if tag not in ("gaussian_ridge", "smoothed_step", "gaussian_bump"):
            raise TargetError(f"Field '{tag}' has no parameter mu.")
        if tag == "gaussian_bump":
            cx, cy = kwargs.get("center", (0.5, 0.5))
            kwargs["center"] = (cx + mu, cy)
        else:
            kwargs["mu"] = mu
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise TargetError(f"Bad parameters for field '{tag}': {exc}") from exc


@dataclass(frozen=True)
class ZSpace:
    """A finite list of scalar functions spanning Z_N; empty means Z_N = {0}."""

    functions: tuple[ScalarField, ...] = ()
    tag: str = "zero"

    def __len__(self) -> int:
        return len(self.functions)

    def values(self, points: np.ndarray) -> np.ndarray:
        """(N_Z, Q) matrix of function values."""
        if not self.functions:
            return np.zeros((0, len(points)))
        return np.stack([fn.value(points) for fn in self.functions])

    def extended(self, fn: ScalarField) -> ZSpace:
        return ZSpace((*self.functions, fn), f"{self.tag}+1")

    @classmethod
    def zero(cls) -> ZSpace:
        return cls((), "zero")

    @classmethod
    def polynomial(cls, degree: int) -> ZSpace:
        """Monomials x1^i x2^j with i + j <= degree."""
        functions = tuple(
            MonomialField(power_x1=i, power_x2=total - i) for total in range(degree + 1) for i in range(total, -1, -1)
        )
        return cls(functions, f"polynomial({degree})")

    @classmethod
    def snapshots(cls, fields: Sequence[ScalarField], *, with_constants: bool = True) -> ZSpace:
        """Constants plus the given field snapshots."""
        functions: tuple[ScalarField, ...] = (ConstantField(1.0),) if with_constants else ()
        return cls((*functions, *fields), f"snapshots({len(fields)})")
