"""Separable polynomial vector fields tangent to the boundary of a rectangle."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.errors import BasisError, DomainError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeparableMember:
    """phi = scale * factor_x1(x1) * factor_x2(x2) placed in one vector component."""

    component: int
    factor_x1: Polynomial
    factor_x2: Polynomial
    scale: float = 1.0
    label: str = ""

    def l2_norm_squared(self, bounds: tuple[float, float, float, float]) -> float:
        a, b, c, d = bounds
        ix = (self.factor_x1**2).integ(lbnd=a)(b)
        iy = (self.factor_x2**2).integ(lbnd=c)(d)
        return float(self.scale**2 * ix * iy)


class TangentialPolynomialBasis(BasisSet):
    """
    Bubble-weighted tensor polynomials on [a,b]x[c,d].

    The x1-component members carry (x1-a)(b-x1) and the x2-component members
    carry (x2-c)(d-x2), so the normal component vanishes on every facet.
    Monomials are taken in the local coordinates (x1-a)/(b-a), (x2-c)/(d-c);
    on the unit square they are plain x1^i x2^j.
    """

    kind = BasisKind.SPATIAL

    def __init__(self, domain: PolygonalDomain, degree: int, members: Sequence[SeparableMember]) -> None:
        self.domain = domain
        self.degree = degree
        self.members = tuple(members)
        if not self.members:
            raise BasisError("A basis needs at least one member.")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def field_degree(self) -> int:
        # bubble (degree 2) times a tensor monomial of degree <= p per variable
        return max(
            member.factor_x1.degree() + member.factor_x2.degree() for member in self.members
        )

    @property
    def labels(self) -> list[str]:
        return [member.label for member in self.members]

    def subset(self, indices: Sequence[int]) -> TangentialPolynomialBasis:
        """Return a basis made of the selected members, in the given order."""
        for index in indices:
            self._check_index(index)
        return TangentialPolynomialBasis(self.domain, self.degree, [self.members[i] for i in indices])

    def evaluate(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = points[:, 0], points[:, 1]
        values = np.zeros((self.size, len(points), 2))
        for m, member in enumerate(self.members):
            values[m, :, member.component] = member.scale * member.factor_x1(x1) * member.factor_x2(x2)
        return values

    def evaluate_grad(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = points[:, 0], points[:, 1]
        grads = np.zeros((self.size, len(points), 2, 2))
        for m, member in enumerate(self.members):
            f, g = member.factor_x1, member.factor_x2
            grads[m, :, member.component, 0] = member.scale * f.deriv()(x1) * g(x2)
            grads[m, :, member.component, 1] = member.scale * f(x1) * g.deriv()(x2)
        return grads

    def evaluate_hessian(self, points: np.ndarray) -> np.ndarray:
        """Second derivatives, shape (M, P, 2, 2, 2) with [..., r, a, b] = d2 phi_r / dx_a dx_b."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = points[:, 0], points[:, 1]
        hess = np.zeros((self.size, len(points), 2, 2, 2))
        for m, member in enumerate(self.members):
            f, g, r = member.factor_x1, member.factor_x2, member.component
            mixed = member.scale * f.deriv()(x1) * g.deriv()(x2)
            hess[m, :, r, 0, 0] = member.scale * f.deriv(2)(x1) * g(x2)
            hess[m, :, r, 0, 1] = mixed
            hess[m, :, r, 1, 0] = mixed
            hess[m, :, r, 1, 1] = member.scale * f(x1) * g.deriv(2)(x2)
        return hess

    def combine(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        coefficients = self._check_coefficients(coefficients)
        return np.tensordot(coefficients, self.evaluate(points), axes=1)

    def combine_grad(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        coefficients = self._check_coefficients(coefficients)
        return np.tensordot(coefficients, self.evaluate_grad(points), axes=1)


def build_tangential_polynomial_basis(
    domain: PolygonalDomain,
    degree: int,
    *,
    normalize: bool = True,
) -> TangentialPolynomialBasis:
    """
    Build the 2(p+1)^2 bubble-weighted tensor fields of per-variable degree <= p.

    Members are ordered x1-component first; within a component the x1 exponent
    runs fastest. With `normalize` every member has unit L2 norm.
    """
    bounds = domain.rectangle_bounds()
    if bounds is None:
        raise DomainError("Tangential polynomial bases need an axis-aligned rectangle.")
    if degree < 0:
        raise BasisError(f"Basis degree must be non-negative, got {degree}.")
    a, b, c, d = bounds
    bubble_x1 = -Polynomial.fromroots([a, b])
    bubble_x2 = -Polynomial.fromroots([c, d])
    local_x1 = Polynomial([-a / (b - a), 1.0 / (b - a)])
    local_x2 = Polynomial([-c / (d - c), 1.0 / (d - c)])

    members: list[SeparableMember] = []
    for component in (0, 1):
        for j in range(degree + 1):
            for i in range(degree + 1):
                if component == 0:
                    f, g = bubble_x1 * local_x1**i, local_x2**j
                else:
                    f, g = local_x1**i, bubble_x2 * local_x2**j
                member = SeparableMember(component, f, g, 1.0, f"e{component + 1}:x1^{i}x2^{j}")
                if normalize:
                    norm = np.sqrt(member.l2_norm_squared(bounds))
                    member = SeparableMember(component, f, g, 1.0 / norm, member.label)
                members.append(member)

    logger.debug("Built tangential polynomial basis: degree %d, %d members.", degree, len(members))
    return TangentialPolynomialBasis(domain, degree, members)
