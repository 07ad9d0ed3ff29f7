import hashlib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import Field, field_validator, model_validator

from navier_cascade.models.base import CascadeBaseModel


class CascadeMode(str, Enum):
    XI = "xi"
    UPSILON = "upsilon"


class AdmissibilityMode(str, Enum):
    POINTWISE = "pointwise"
    HEAT = "heat"
    BOUNDED_HEAT = "bounded_heat"
    STANDARD = "standard"


class KernelType(str, Enum):
    H0 = "h0"
    H = "H"
    HP = "Hp"
    H1 = "h1"
    MIXTURE = "mixture"


class KernelConfig(CascadeBaseModel):
    """Kernel block: a built-in pair plus optional placement"""
    type: KernelType = Field(..., description="Built-in kernel family")
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters, validated per type")
    translate: Optional[List[float]] = Field(default=None, description="Translate the pair by this vector")
    scale: Optional[float] = Field(default=None, gt=0, description="Apply the scaling σh(σ·), σ³h̃(σ·)")

    @field_validator("translate")
    @classmethod
    def validate_translate(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and len(v) != 3:
            raise ValueError("translate must have exactly three components")
        return v


class FieldConfig(CascadeBaseModel):
    """u₀ or g block: a named fixture, its amplitude and parameters"""
    fixture: str = Field(..., description="Fixture name")
    amplitude: float = Field(default=1.0, description="Amplitude δ multiplying the fixture")
    params: Dict[str, Any] = Field(default_factory=dict, description="Fixture parameters")


class OracleConfig(CascadeBaseModel):
    """Grid of the Picard oracle"""
    half_width: float = Field(default=3.0, gt=0, description="Half side of the Cartesian box")
    n_space: int = Field(default=9, ge=3, description="Nodes per axis")
    n_time: int = Field(default=4, ge=1, description="Time levels in (0, t_max]")
    t_max: float = Field(default=1.0, gt=0, description="Final time")
    sweeps: int = Field(default=5, ge=1, le=50, description="Picard sweeps")
    n_radial: int = Field(default=24, ge=4, description="Radial nodes of the convolution rule")
    n_time_quad: int = Field(default=6, ge=2, description="Gauss-Jacobi nodes of the time integral")


class RunConfig(CascadeBaseModel):
    """Complete description of an estimation run"""
    nu: float = Field(..., description="Viscosity ν")
    p: float = Field(default=0.5, description="Branch probability")
    epsilon: float = Field(..., description="Bound ε on |Ξ|")
    alpha: float = Field(default=0.5, description="Share αε of the bound granted to u₀")
    beta: float = Field(default=0.5, description="Share βε of the bound granted to g")
    kernel: KernelConfig
    u0: FieldConfig = Field(default_factory=lambda: FieldConfig(fixture="zero", amplitude=0.0))
    forcing: FieldConfig = Field(default_factory=lambda: FieldConfig(fixture="zero", amplitude=0.0))
    mode: CascadeMode = Field(default=CascadeMode.XI, description="Functional to average: xi or upsilon")
    admissibility: Optional[AdmissibilityMode] = Field(
        default=None,
        description="Data check; defaults to heat for xi and pointwise for upsilon",
    )
    rescale: bool = Field(default=False, description="Fit the kernel's constants to the contraction hypotheses")
    n: int = Field(default=1000, ge=2, description="Cascades per point")
    seed: int = Field(default=0, ge=0, description="Master seed")
    workers: int = Field(default=1, ge=1, description="Worker processes")
    depth_cap: int = Field(default=10_000, ge=1, description="Tree depth at which nodes keep only their data term")
    oracle: OracleConfig = Field(default_factory=OracleConfig)

    @field_validator("nu")
    @classmethod
    def validate_nu(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"ν > 0 required, got {v}")
        return v

    @field_validator("p")
    @classmethod
    def validate_p(cls, v: float) -> float:
        if not 0.0 < v <= 0.5:
            raise ValueError(f"p ∈ (0,1/2] required, got {v}")
        return v

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"α ∈ [0,1) required, got {v}")
        return v

    @model_validator(mode='after')
    def validate_bounds(self) -> 'RunConfig':
        """ε and β must leave room for the contraction: both in (0, 1-α]"""
        top = 1.0 - self.alpha
        if not 0.0 < self.epsilon <= top:
            raise ValueError(f"ε ∈ (0, 1-α] required, got ε={self.epsilon}, α={self.alpha}")
        if not 0.0 < self.beta <= top:
            raise ValueError(f"β ∈ (0, 1-α] required, got β={self.beta}, α={self.alpha}")
        return self

    @property
    def admissibility_mode(self) -> AdmissibilityMode:
        if self.admissibility is not None:
            return self.admissibility
        return AdmissibilityMode.POINTWISE if self.mode == CascadeMode.UPSILON else AdmissibilityMode.HEAT


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON dump; the worker count never changes results and is left out"""
    return hashlib.sha256(config.model_dump_json(exclude={"workers"}).encode("utf-8")).hexdigest()


def load_config(path: Path) -> RunConfig:
    return RunConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
