"""
Named families of initial velocities u₀ and forcings g.

Fields are vectorized over points, (N, 3) -> (N, 3). Velocity fields with a
known heat convolution install it; the rest fall back to quadrature.
"""
import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple, Type

import numpy as np
from pydantic import Field, field_validator

from navier_cascade import quadrature
from navier_cascade.errors import DomainError
from navier_cascade.heat import heat_kernel_radial
from navier_cascade.models.base import CascadeBaseModel
from navier_cascade.vecgeom import Vec3, as_vec3, unit

logger = logging.getLogger(__name__)


def _points(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


class VelocityField(ABC):
    """Initial velocity u₀"""

    name: str = "velocity"

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        pass

    def feature_points(self) -> List[Vec3]:
        return []

    @property
    def has_closed_heat(self) -> bool:
        return False

    def heat(self, x: np.ndarray, variance: float) -> np.ndarray:
        """∫ u₀(x-y) K(y, variance) dy at each point"""
        pts = _points(x)
        return np.stack([self.heat_quadrature(p, variance) for p in pts])

    def heat_quadrature(self, x: Vec3, variance: float) -> Vec3:
        if variance <= 0:
            raise DomainError(f"variance must be positive, got {variance}")
        x = as_vec3(x)

        def integrand(y: np.ndarray) -> np.ndarray:
            weight = heat_kernel_radial(np.sqrt(np.sum((x - y) ** 2, axis=1)), variance)
            return self.value(y) * weight[:, None]

        centers = [x] + self.feature_points()
        return quadrature.singular_volume_integral(
            integrand, centers, scale=math.sqrt(variance), n_radial=200, span=1e4
        )

    def value_at(self, x: Vec3) -> Vec3:
        return self.value(_points(x))[0]

    def heat_at(self, x: Vec3, variance: float) -> Vec3:
        return self.heat(_points(x), variance)[0]


class ForcingField(ABC):
    """Forcing g(x, t)"""

    name: str = "forcing"

    @abstractmethod
    def value(self, x: np.ndarray, t: float) -> np.ndarray:
        pass

    @property
    def is_zero(self) -> bool:
        return False

    def value_at(self, x: Vec3, t: float) -> Vec3:
        return self.value(_points(x), t)[0]


class ZeroField(VelocityField):
    name = "zero"

    def __init__(self, amplitude: float = 0.0):
        self.amplitude = amplitude

    def value(self, x):
        return np.zeros_like(_points(x))

    @property
    def has_closed_heat(self):
        return True

    def heat(self, x, variance):
        return np.zeros_like(_points(x))


class GaussianVortex(VelocityField):
    """u₀(x) = A (e × r) exp(-|r|²/2σ²), r = x - center, e the unit axis

    Divergence-free. The heat convolution with variance v stays in the family:
    A (σ²/(σ²+v))^(5/2) (e × r) exp(-|r|²/2(σ²+v)).
    """

    name = "gaussian_vortex"

    def __init__(self, amplitude: float, sigma: float = 1.0, center: Vec3 = (0.0, 0.0, 0.0), axis: Vec3 = (0.0, 0.0, 1.0)):
        self.amplitude = float(amplitude)
        self.sigma = float(sigma)
        self.center = as_vec3(center)
        self.axis = unit(as_vec3(axis))

    def _swirl(self, x: np.ndarray, s2: float) -> np.ndarray:
        r = _points(x) - self.center
        profile = np.exp(-np.sum(r * r, axis=1) / (2.0 * s2))
        return np.cross(self.axis, r) * profile[:, None]

    def value(self, x):
        return self.amplitude * self._swirl(x, self.sigma ** 2)

    def feature_points(self):
        return [self.center]

    @property
    def has_closed_heat(self):
        return True

    def heat(self, x, variance):
        s2 = self.sigma ** 2
        return self.amplitude * (s2 / (s2 + variance)) ** 2.5 * self._swirl(x, s2 + variance)

    def sup_ratio_h0(self, c: float = 1.0) -> float:
        """sup |u₀(x)| / (c |x - center|^-1), attained at |r| = √2 σ"""
        return 2.0 * abs(self.amplitude) * self.sigma ** 2 / (math.e * c)


class ZeroForcing(ForcingField):
    name = "zero"

    def __init__(self, amplitude: float = 0.0):
        self.amplitude = amplitude

    def value(self, x, t):
        return np.zeros_like(_points(x))

    @property
    def is_zero(self):
        return True


class BallVortexForcing(ForcingField):
    """g(x,t) = B (e × r) 1[|r| <= R] exp(-λt), r = x - center"""

    name = "ball_vortex"

    def __init__(self, amplitude: float, radius: float = 1.0, center: Vec3 = (0.0, 0.0, 0.0),
                 axis: Vec3 = (0.0, 0.0, 1.0), decay: float = 0.0):
        self.amplitude = float(amplitude)
        self.radius = float(radius)
        self.center = as_vec3(center)
        self.axis = unit(as_vec3(axis))
        self.decay = float(decay)

    def value(self, x, t):
        r = _points(x) - self.center
        inside = np.sum(r * r, axis=1) <= self.radius ** 2
        scale = self.amplitude * math.exp(-self.decay * t)
        return scale * np.cross(self.axis, r) * inside[:, None]

    def sup_norm(self) -> float:
        return abs(self.amplitude) * self.radius


class GaussianVortexForcing(ForcingField):
    """Steady g(x) = B (e × r) exp(-|r|²/2σ²)"""

    name = "gaussian_vortex"

    def __init__(self, amplitude: float, sigma: float = 1.0, center: Vec3 = (0.0, 0.0, 0.0), axis: Vec3 = (0.0, 0.0, 1.0)):
        self._field = GaussianVortex(amplitude, sigma, center, axis)

    def value(self, x, t):
        return self._field.value(x)


# --- Config blocks ---------------------------------------------------------------

class _PlacedParams(CascadeBaseModel):
    center: List[float] = Field(default=[0.0, 0.0, 0.0], description="Center of the profile")
    axis: List[float] = Field(default=[0.0, 0.0, 1.0], description="Rotation axis (normalized on build)")

    @field_validator("center", "axis")
    @classmethod
    def validate_vec3(cls, v: List[float]) -> List[float]:
        if len(v) != 3:
            raise ValueError("must have exactly three components")
        return v

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v: List[float]) -> List[float]:
        if not any(v):
            raise ValueError("axis must be nonzero")
        return v


class NoParams(CascadeBaseModel):
    pass


class GaussianVortexParams(_PlacedParams):
    sigma: float = Field(default=1.0, gt=0, description="Gaussian width σ")


class BallVortexParams(_PlacedParams):
    radius: float = Field(default=1.0, gt=0, description="Support radius R")
    decay: float = Field(default=0.0, ge=0, description="Exponential decay rate in time")


FIXTURE_MAP: Dict[str, Tuple[Type[VelocityField], Type[CascadeBaseModel]]] = {
    ZeroField.name: (ZeroField, NoParams),
    GaussianVortex.name: (GaussianVortex, GaussianVortexParams),
}

FORCING_MAP: Dict[str, Tuple[Type[ForcingField], Type[CascadeBaseModel]]] = {
    ZeroForcing.name: (ZeroForcing, NoParams),
    BallVortexForcing.name: (BallVortexForcing, BallVortexParams),
    GaussianVortexForcing.name: (GaussianVortexForcing, GaussianVortexParams),
}


def _build(registry: Dict[str, Tuple[type, Type[CascadeBaseModel]]], fixture: str, amplitude: float,
           params: Dict[str, Any]):
    try:
        field_cls, params_cls = registry[fixture]
    except KeyError:
        raise ValueError(f"Unsupported fixture: {fixture} (expected one of {sorted(registry)})")
    validated = params_cls(**params)
    return field_cls(amplitude=amplitude, **validated.model_dump())


def build_velocity(fixture: str, amplitude: float, params: Optional[Dict[str, Any]] = None) -> VelocityField:
    return _build(FIXTURE_MAP, fixture, amplitude, params or {})


def build_forcing(fixture: str, amplitude: float, params: Optional[Dict[str, Any]] = None) -> ForcingField:
    return _build(FORCING_MAP, fixture, amplitude, params or {})
