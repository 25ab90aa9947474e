"""Boundary-tangent vector field families and their Gram matrices."""

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.basis.gram import FormKind, GramForm, GramMatrix, assemble_gram, tensorize_gram
from diffeoreg.basis.SpaceTimeBasis import SpaceTimeBasis, tensorize_time
from diffeoreg.basis.TangentialPolynomialBasis import (
    TangentialPolynomialBasis,
    build_tangential_polynomial_basis,
)

__all__ = [
    "BasisKind",
    "BasisSet",
    "FormKind",
    "GramForm",
    "GramMatrix",
    "SpaceTimeBasis",
    "TangentialPolynomialBasis",
    "assemble_gram",
    "build_tangential_polynomial_basis",
    "tensorize_gram",
    "tensorize_time",
]
