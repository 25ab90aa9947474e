"""Registration targets: distributed L2 misfit, pointwise correspondences and EM weights."""

from diffeoreg.targets.DistributedTarget import DistributedTarget
from diffeoreg.targets.em import em_update_weights
from diffeoreg.targets.fields import (
    AffineField,
    ConstantField,
    GaussianBump,
    GaussianRidge,
    SmoothedStep,
    SupportBox,
    ZSpace,
    field_from_tag,
)
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from diffeoreg.targets.Target import Target

__all__ = [
    "AffineField",
    "ConstantField",
    "DistributedTarget",
    "GaussianBump",
    "GaussianRidge",
    "PointwiseTarget",
    "SmoothedStep",
    "SupportBox",
    "Target",
    "ZSpace",
    "em_update_weights",
    "field_from_tag",
]
