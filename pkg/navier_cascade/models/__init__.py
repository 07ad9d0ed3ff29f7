from navier_cascade.models.base import CascadeBaseModel
from navier_cascade.models.config import (
    AdmissibilityMode,
    CascadeMode,
    FieldConfig,
    KernelConfig,
    KernelType,
    OracleConfig,
    RunConfig,
    config_hash,
    load_config,
)
from navier_cascade.models.report import (
    AdmissibilityReport,
    CheckResult,
    ComparisonPoint,
    ComparisonReport,
    EstimateReport,
    PicardSweep,
    RunRecord,
    RunStatus,
)
