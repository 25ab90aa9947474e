"""Gram matrices of bilinear forms over a basis, assembled by triangle quadrature."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.errors import BasisError
from diffeoreg.geometry.quadrature import quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.io.artifacts import read_matrix, write_matrix

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-12
DEFAULT_QUAD_ORDER = 5


class FormKind(str, Enum):
    L2 = "L2"
    H1SEMI = "H1semi"
    H2SEMI = "H2semi"
    ELASTICITY = "elasticity"


_ELASTICITY_TAG = re.compile(r"^elasticity(?:\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\))?$")


@dataclass(frozen=True)
class GramForm:
    """A bilinear form tag; elasticity carries Young's modulus and Poisson's ratio."""

    kind: FormKind
    young_modulus: float = 1.0
    poisson_ratio: float = 1.0 / 3.0

    @property
    def tag(self) -> str:
        if self.kind is FormKind.ELASTICITY:
            return f"elasticity({self.young_modulus:.17g},{self.poisson_ratio:.17g})"
        return self.kind.value

    @property
    def file_tag(self) -> str:
        """Filesystem-safe variant of `tag`."""
        if self.kind is FormKind.ELASTICITY:
            return f"elasticity_E{self.young_modulus:g}_nu{self.poisson_ratio:.4g}"
        return self.kind.value

    @classmethod
    def from_tag(cls, tag: str) -> GramForm:
        """Parse `L2`, `H1semi`, `H2semi`, `elasticity` or `elasticity(E,nu)`."""
        text = tag.strip()
        match = _ELASTICITY_TAG.match(text)
        if match:
            if match.group(1) is None:
                return cls(FormKind.ELASTICITY)
            try:
                return cls(FormKind.ELASTICITY, float(match.group(1)), _parse_ratio(match.group(2)))
            except ValueError as exc:
                raise BasisError(f"Bad elasticity parameters in form tag '{tag}'.") from exc
        for kind in FormKind:
            if kind.value.lower() == text.lower():
                return cls(kind)
        raise BasisError(f"Unknown form tag '{tag}'; expected one of {[k.value for k in FormKind]}.")

    def lame_coefficients(self) -> tuple[float, float]:
        """Return (E nu / ((1+nu)(1-2nu)), E / (2(1+nu)))."""
        E, nu = self.young_modulus, self.poisson_ratio
        if abs(1.0 - 2.0 * nu) < 1e-14:
            raise BasisError("Poisson ratio 0.5 makes the first Lame coefficient singular.")
        if nu <= -1.0:
            raise BasisError(f"Poisson ratio must exceed -1, got {nu}.")
        return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))


def _parse_ratio(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    form_tag: str

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise BasisError(f"Gram matrix must be square, got shape {entries.shape}.")
        scale = max(float(np.abs(entries).max(initial=0.0)), 1e-300)
        asymmetry = float(np.abs(entries - entries.T).max(initial=0.0))
        if asymmetry > SYMMETRY_RTOL * scale:
            raise BasisError(f"Gram matrix '{self.form_tag}' is not symmetric (deviation {asymmetry:.3g}).")
        object.__setattr__(self, "entries", 0.5 * (entries + entries.T))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def condition_number(self) -> float:
        eig = self.eigenvalues()
        return float(np.inf) if eig[0] <= 0 else float(eig[-1] / eig[0])

    def plus(self, other: GramMatrix, weight: float) -> GramMatrix:
        """self + weight * other, e.g. an H1 seminorm shifted by a small L2 term."""
        if other.size != self.size:
            raise BasisError(f"Cannot add Gram matrices of sizes {self.size} and {other.size}.")
        return GramMatrix(self.entries + weight * other.entries, f"{self.form_tag}+{weight:g}*{other.form_tag}")

    def save(self, path: Path) -> Path:
        return write_matrix(self.entries, path)

    @classmethod
    def load(cls, path: Path, form_tag: str) -> GramMatrix:
        return cls(read_matrix(path), form_tag)


def _integrand(basis: BasisSet, form: GramForm, points: np.ndarray) -> tuple[np.ndarray, str]:
    """Return per-point feature arrays F (M, Q, ...) so that G = sum_q w_q F_i . F_j, plus the einsum tag."""
    if form.kind is FormKind.L2:
        return basis.evaluate(points), "iqr,jqr,q->ij"
    if form.kind is FormKind.H1SEMI:
        return basis.evaluate_grad(points), "iqrc,jqrc,q->ij"
    if form.kind is FormKind.H2SEMI:
        if not hasattr(basis, "evaluate_hessian"):
            raise BasisError("H2 seminorm needs a basis with analytic second derivatives.")
        hess = basis.evaluate_hessian(points)
        # multi-indices (2,0), (1,1), (0,2); the mixed derivative enters once
        stacked = np.stack([hess[..., 0, 0], hess[..., 0, 1], hess[..., 1, 1]], axis=-1)
        return stacked, "iqrk,jqrk,q->ij"
    raise BasisError(f"No plain integrand for form {form.tag}.")


def exact_quad_order(basis: BasisSet, form: GramForm | str) -> int | None:
    """
    Lowest triangle rule order that integrates the form's integrand exactly:
    2d for L2, 2d - 2 for first-derivative forms and 2d - 4 for H2, where d is
    the basis field degree. None when the basis is not polynomial.
    """
    form = GramForm.from_tag(form) if isinstance(form, str) else form
    degree = basis.field_degree
    if degree is None:
        return None
    derivatives = {FormKind.L2: 0, FormKind.H1SEMI: 1, FormKind.ELASTICITY: 1, FormKind.H2SEMI: 2}[form.kind]
    return max(2 * (degree - derivatives), 1)


def assemble_gram(
    basis: BasisSet,
    form: GramForm | str,
    tri: Triangulation,
    quad_order: int | None = None,
) -> GramMatrix:
    """
    Quadrature approximation of the form's Gram matrix (G)_ij = a(phi_j, phi_i).

    `quad_order` defaults to `exact_quad_order`; for polynomial bases a lower
    order is rejected, so entries are exact up to rounding.
    """
    form = GramForm.from_tag(form) if isinstance(form, str) else form
    if basis.kind is not BasisKind.SPATIAL:
        raise BasisError("Gram assembly needs a spatial basis; tensorise the spatial Gram for space-time bases.")
    exact = exact_quad_order(basis, form)
    if quad_order is None:
        quad_order = DEFAULT_QUAD_ORDER if exact is None else exact
    elif exact is not None and quad_order < exact:
        raise BasisError(
            f"Quadrature order {quad_order} is too low for the {form.tag} Gram matrix of a degree-"
            f"{basis.field_degree} basis; need at least {exact}."
        )
    points, weights = quadrature(tri, quad_order)

    if form.kind is FormKind.ELASTICITY:
        first, second = form.lame_coefficients()
        grads = basis.evaluate_grad(points)
        sym = 0.5 * (grads + np.swapaxes(grads, -1, -2))
        div = np.trace(grads, axis1=-2, axis2=-1)
        entries = first * np.einsum("iqrc,jqrc,q->ij", sym, sym, weights) + second * np.einsum(
            "iq,jq,q->ij", div, div, weights
        )
    else:
        features, subscripts = _integrand(basis, form, points)
        entries = np.einsum(subscripts, features, features, weights)

    gram = GramMatrix(entries, form.tag)
    logger.debug("Assembled %s Gram matrix of size %d with %d quadrature points.", form.tag, gram.size, len(weights))
    return gram


def temporal_gram(temporal_degree: int) -> np.ndarray:
    """T_kl = int_0^1 L_k L_l dt = delta_kl / (2k + 1) for shifted Legendre polynomials."""
    return np.diag(1.0 / (2.0 * np.arange(temporal_degree + 1) + 1.0))


def tensorize_gram(spatial_gram: GramMatrix, temporal_degree: int) -> GramMatrix:
    """Gram matrix of the space-time basis: G_space (x) T, matching index i*(p_t+1)+k."""
    if temporal_degree < 0:
        raise BasisError(f"Temporal degree must be non-negative, got {temporal_degree}.")
    entries = np.kron(spatial_gram.entries, temporal_gram(temporal_degree))
    return GramMatrix(entries, f"{spatial_gram.form_tag}(x)T{temporal_degree}")
