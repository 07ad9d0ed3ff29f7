"""
Admissible data (u₀, g) for a kernel pair and the sampled checks of its bounds.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from navier_cascade.errors import DomainError
from navier_cascade.fixtures import ForcingField, VelocityField, ZeroField, ZeroForcing
from navier_cascade.kernels.algebra import standardize
from navier_cascade.kernels.base import KernelPair
from navier_cascade.models.config import AdmissibilityMode
from navier_cascade.models.report import AdmissibilityReport
from navier_cascade.vecgeom import Vec3

logger = logging.getLogger(__name__)

DEFAULT_TIMES: Tuple[float, ...] = (0.05, 0.25, 1.0, 4.0)


@dataclass(frozen=True)
class AdmissiblePair:
    """Data (u₀, g) with the shares α, β of the bound ε they are allowed"""

    u0: VelocityField
    g: ForcingField
    alpha: float
    beta: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"α must lie in [0,1), got {self.alpha}")
        if not (self.beta > 0 and self.epsilon > 0):
            raise DomainError("β and ε must be positive")

    @classmethod
    def zero(cls, alpha: float = 0.5, beta: float = 0.5, epsilon: float = 0.2) -> "AdmissiblePair":
        return cls(ZeroField(), ZeroForcing(), alpha, beta, epsilon)

    def u0_heat(self, x: Vec3, variance: float) -> Vec3:
        """∫ u₀(x-y) K(y, variance) dy, in closed form when the fixture installs one"""
        if variance <= 0.0:
            return self.u0.value_at(x)
        return self.u0.heat_at(x, variance)


def default_check_points(n_shells: int = 20, r_lo: float = 1e-2, r_hi: float = 1e2, n_dirs: int = 6,
                         center: Optional[Vec3] = None) -> np.ndarray:
    """Shells |x| ∈ [r_lo, r_hi] (log-spaced) times a golden-spiral set of directions"""
    k = np.arange(n_dirs) + 0.5
    cos_t = 1.0 - 2.0 * k / n_dirs
    sin_t = np.sqrt(1.0 - cos_t ** 2)
    phi = np.pi * (1.0 + math.sqrt(5.0)) * k
    dirs = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)
    radii = np.geomspace(r_lo, r_hi, n_shells)
    points = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    if center is not None:
        points = points + np.asarray(center, dtype=np.float64)
    return points


def _ratios(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """|numer| / denom with ±∞ handled: 0 where denom is infinite, ∞ where denom = 0 < |numer|"""
    numer = np.asarray(numer, dtype=np.float64)
    denom = np.asarray(denom, dtype=np.float64)
    out = np.zeros_like(numer)
    finite = np.isfinite(denom) & (denom > 0)
    out[finite] = numer[finite] / denom[finite]
    out[(denom == 0) & (numer > 0)] = math.inf
    return out


def check_admissibility(
    data: AdmissiblePair,
    pair: KernelPair,
    mode: AdmissibilityMode,
    check_points: Sequence[Vec3],
    nu: float = 1.0,
    times: Sequence[float] = DEFAULT_TIMES,
) -> AdmissibilityReport:
    """Compare the observed ratios |u₀|/h and |g|/h̃ on check points with their bounds

    Args:
        data: The admissible-pair candidate
        pair: Kernel pair the data are measured against
        mode: Which representation's hypothesis to check
        check_points: Points of R³
        nu: Viscosity entering the heat variance 2νt
        times: Time levels for the heat and forcing checks

    Returns:
        AdmissibilityReport; never raises on a violation
    """
    check_points = np.asarray(check_points, dtype=np.float64).reshape(-1, 3)
    if check_points.shape[0] == 0:
        raise DomainError("check-point set must be nonempty")
    mode = AdmissibilityMode(mode)
    times = list(times)

    measure = pair
    u_bound = data.alpha * data.epsilon
    g_bound = data.beta * data.epsilon
    if mode == AdmissibilityMode.BOUNDED_HEAT:
        if pair.heat_ratio_M is None:
            raise DomainError(f"kernel pair {pair.name} has no heat-ratio bound M")
        u_bound = u_bound / pair.heat_ratio_M
    elif mode == AdmissibilityMode.STANDARD:
        measure = standardize(pair)
        u_bound = math.pi * nu / 11.0
        g_bound = (math.pi * nu) ** 2 / 11.0

    h = measure.h(check_points)
    if mode in (AdmissibilityMode.POINTWISE, AdmissibilityMode.BOUNDED_HEAT):
        u_norm = np.linalg.norm(data.u0.value(check_points), axis=1)
        u_ratios = _ratios(u_norm, h)
        u_points = check_points
        n_points = check_points.shape[0]
    else:
        rows, where = [], []
        for t in times:
            heat = data.u0.heat(check_points, 2.0 * nu * t)
            rows.append(_ratios(np.linalg.norm(heat, axis=1), h))
            where.append(check_points)
        u_ratios = np.concatenate(rows)
        u_points = np.concatenate(where)
        n_points = u_ratios.size

    if data.g.is_zero:
        g_ratio = 0.0
    else:
        h_tilde = measure.h_tilde(check_points)
        g_ratio = max(
            float(np.max(_ratios(np.linalg.norm(data.g.value(check_points, t), axis=1), h_tilde))) for t in times
        )

    worst = int(np.argmax(u_ratios))
    u_ratio = float(u_ratios[worst])
    if mode == AdmissibilityMode.STANDARD:
        passed = u_ratio < u_bound and g_ratio < g_bound
    else:
        passed = u_ratio <= u_bound and g_ratio <= g_bound
    report = AdmissibilityReport(
        mode=mode.value,
        u_ratio=u_ratio,
        u_bound=u_bound,
        g_ratio=g_ratio,
        g_bound=g_bound,
        passed=passed,
        worst_point=u_points[worst].tolist() if u_ratio > 0 else None,
        check_points=n_points,
    )
    if not passed:
        logger.warning(f"Admissibility ({mode.value}) violated: |u|/h={u_ratio:.4g} vs {u_bound:.4g}, "
                       f"|g|/h̃={g_ratio:.4g} vs {g_bound:.4g}")
    return report


def cascade_multipliers(pair: KernelPair, nu: float, x: Vec3) -> Tuple[float, float]:
    """(m(x), m̃(x)) = potentials / (8πν h(x))"""
    if not nu > 0:
        raise DomainError(f"ν must be positive, got {nu}")
    return pair.multipliers(nu, x)
