"""Polygonal domains, triangulations, quadrature and curved-domain maps."""

from diffeoreg.geometry.CurvedMap import CurvedMap, curved_map_from_tag
from diffeoreg.geometry.PolygonalDomain import Facet, PointClass, PolygonalDomain
from diffeoreg.geometry.quadrature import facet_quadrature, quadrature
from diffeoreg.geometry.Triangulation import Triangulation

__all__ = [
    "CurvedMap",
    "Facet",
    "PointClass",
    "PolygonalDomain",
    "Triangulation",
    "curved_map_from_tag",
    "facet_quadrature",
    "quadrature",
]
