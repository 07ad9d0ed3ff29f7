"""
Majorizing kernel pairs: built-ins, closure algebra, admissibility.

Config blocks dispatch through KERNEL_MAP = {KernelType: (builder, ParamsModel)}.
"""
from typing import Callable, Dict, List, Optional, Tuple, Type

from pydantic import Field, model_validator

from navier_cascade.kernels.admissibility import (
    AdmissiblePair,
    cascade_multipliers,
    check_admissibility,
    default_check_points,
)
from navier_cascade.kernels.algebra import (
    fit_to_hypotheses,
    kernel_algebra,
    mixture,
    rescale,
    scale,
    standardize,
    translate,
)
from navier_cascade.kernels.base import KernelPair
from navier_cascade.kernels.profiles import ProfileConfig
from navier_cascade.kernels.radial import make_h0_pair, make_h1_pair, make_H_pair, make_Hp_pair
from navier_cascade.models.base import CascadeBaseModel
from navier_cascade.models.config import KernelConfig, KernelType


class H0Params(CascadeBaseModel):
    forcing_profile: Optional[ProfileConfig] = Field(default=None, description="Radial forcing majorant h̃₀")


class HpParams(CascadeBaseModel):
    exponent: float = Field(..., gt=1.0, le=2.0, description="Decay exponent p ∈ (1,2]")


class MixtureParams(CascadeBaseModel):
    centers: List[List[float]] = Field(..., min_length=1, description="Centers of the translated h0 components")
    weights: List[float] = Field(..., min_length=1, description="Mixture weights, positive and summing to 1")
    forcing_profile: Optional[ProfileConfig] = Field(default=None, description="Radial forcing majorant per component")

    @model_validator(mode='after')
    def validate_components(self) -> 'MixtureParams':
        if len(self.centers) != len(self.weights):
            raise ValueError("mixture needs one weight per center")
        if any(len(c) != 3 for c in self.centers):
            raise ValueError("mixture centers must have exactly three components")
        return self


class NoParams(CascadeBaseModel):
    pass


def _build_h0(params: H0Params) -> KernelPair:
    profile = params.forcing_profile.build() if params.forcing_profile else None
    return make_h0_pair(profile)


def _build_hp(params: HpParams) -> KernelPair:
    return make_Hp_pair(params.exponent)


def _build_mixture(params: MixtureParams) -> KernelPair:
    profile = params.forcing_profile.build() if params.forcing_profile else None
    parts = [translate(make_h0_pair(profile), center) for center in params.centers]
    return mixture(parts, params.weights)


KERNEL_MAP: Dict[KernelType, Tuple[Callable[..., KernelPair], Type[CascadeBaseModel]]] = {
    KernelType.H0: (_build_h0, H0Params),
    KernelType.H: (lambda params: make_H_pair(), NoParams),
    KernelType.HP: (_build_hp, HpParams),
    KernelType.H1: (lambda params: make_h1_pair(), NoParams),
    KernelType.MIXTURE: (_build_mixture, MixtureParams),
}


def build_kernel(config: KernelConfig) -> KernelPair:
    """Instantiate the pair a kernel block describes

    Raises:
        pydantic.ValidationError: If params do not fit the family's model
        DomainError: If the family rejects the parameters
    """
    builder, params_cls = KERNEL_MAP[config.type]
    pair = builder(params_cls(**config.params))
    if config.scale is not None:
        pair = scale(pair, config.scale)
    if config.translate is not None:
        pair = translate(pair, config.translate)
    return pair


__all__ = [
    "AdmissiblePair",
    "KERNEL_MAP",
    "KernelPair",
    "build_kernel",
    "cascade_multipliers",
    "check_admissibility",
    "default_check_points",
    "fit_to_hypotheses",
    "kernel_algebra",
    "make_H_pair",
    "make_Hp_pair",
    "make_h0_pair",
    "make_h1_pair",
    "rescale",
    "standardize",
]
