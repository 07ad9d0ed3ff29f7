from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import Field, field_validator

from navier_cascade.models.base import CascadeBaseModel


class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class EstimateReport(CascadeBaseModel):
    """Monte Carlo estimate of u(x,t) = h(x) E[Ξ] at one space-time point"""
    x: List[float] = Field(..., description="Spatial point")
    t: float = Field(..., gt=0, description="Time")
    u: List[float] = Field(..., description="Estimated velocity h(x) * sample mean")
    stderr: List[float] = Field(..., description="Componentwise standard error of u")
    n: int = Field(..., ge=2, description="Number of cascades")
    truncated_fraction: float = Field(..., ge=0, le=1, description="Fraction of cascades that hit the depth cap")
    nodes_mean: float = Field(..., ge=0, description="Mean number of tree nodes per cascade")
    max_depth: int = Field(default=0, ge=0, description="Deepest node over all cascades")
    h: float = Field(..., description="h(x) for the kernel in use")
    max_abs_outcome: float = Field(default=0.0, ge=0, description="Largest |Ξ| over the sample")
    mode: str = Field(default="xi", description="Cascade functional: xi or upsilon")
    wall_time: float = Field(default=0.0, ge=0, description="Seconds spent evaluating cascades")

    @field_validator("x", "u", "stderr")
    @classmethod
    def validate_vec3(cls, v: List[float]) -> List[float]:
        if len(v) != 3:
            raise ValueError("vectors must have exactly three components")
        return v


class Provenance(CascadeBaseModel):
    """What a printed result needs to be reproduced"""
    version: str = Field(..., description="navier_cascade version")
    seed: int = Field(..., description="Master seed")
    config_hash: str = Field(..., description="SHA-256 of the canonical RunConfig, workers excluded")


class EstimateOutput(CascadeBaseModel):
    """The JSON document printed by `estimate`"""
    provenance: Provenance
    report: EstimateReport


class AdmissibilityReport(CascadeBaseModel):
    """Sampled check of |u₀|/h and |g|/h̃ against their bounds"""
    mode: str = Field(..., description="pointwise, heat, bounded_heat or standard")
    u_ratio: float = Field(..., description="Largest observed velocity ratio")
    u_bound: float = Field(..., description="Bound the velocity ratio must respect")
    g_ratio: float = Field(..., description="Largest observed forcing ratio")
    g_bound: float = Field(..., description="Bound the forcing ratio must respect")
    passed: bool
    worst_point: Optional[List[float]] = Field(default=None, description="Point with the worst velocity ratio")
    check_points: int = Field(..., ge=1, description="Number of (x, t) check points evaluated")
    caveat: str = Field(
        default="sampled check on a finite set of check points; necessary, not a proof of the supremum bound",
    )


class CheckResult(CascadeBaseModel):
    """One verification check: observed statistic against its requirement"""
    suite: str
    name: str
    passed: bool
    observed: float
    required: str
    detail: Dict[str, Any] = Field(default_factory=dict)


class PicardSweep(CascadeBaseModel):
    sweep: int = Field(..., ge=1)
    sup_change: float = Field(..., ge=0, description="sup |u_k - u_(k-1)| over grid nodes")
    ratio: Optional[float] = Field(default=None, description="sup_change over the previous sweep's")
    max_u_over_h: float = Field(..., ge=0, description="max |u|/h over grid nodes")


class ComparisonPoint(CascadeBaseModel):
    x: List[float]
    t: float
    u_mc: List[float]
    stderr_mc: List[float]
    u_oracle: List[float]
    oracle_tolerance: float
    budget: List[float] = Field(..., description="3 stderr + oracle tolerance per component")
    passed: List[bool]


class ComparisonReport(CascadeBaseModel):
    """Monte Carlo against Picard, point by point"""
    points: List[ComparisonPoint]
    sweeps: List[PicardSweep]
    oracle_tolerance: float
    passed: bool
    note: str = Field(
        default="the oracle tolerance is an engineering estimate from grid halving, not a proven bound",
    )


class RunRecord(CascadeBaseModel):
    """Provenance and results of one CLI run"""
    run_id: str
    command: str
    status: RunStatus = RunStatus.PENDING
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    completed_at: Optional[datetime] = None
    config_hash: Optional[str] = None
    seed: Optional[int] = None
    version: str
    reports: List[Dict[str, Any]] = Field(default_factory=list)
    error: Optional[str] = None
