"""
Radial forcing profiles h̃₀ for kernel pairs.

Each profile knows its radial mass ∫r²h̃₀(r)dr, its Newton potential
∫h̃₀(|w|)|x-w|^(-1)dw in closed form, and how to draw the radius of the
forcing-branch jump exactly.
"""
import math
from abc import ABC, abstractmethod

import numpy as np
from pydantic import Field

from navier_cascade.errors import DomainError
from navier_cascade.models.base import CascadeBaseModel
from navier_cascade.samplers import rejection_loop, sample_inverse_distance_direction
from navier_cascade.vecgeom import Vec3


class ForcingProfile(ABC):
    """A radial profile h̃₀ >= 0 with finite ∫r²h̃₀(r)dr"""

    name: str = "profile"

    @abstractmethod
    def value(self, r: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def radial_mass(self) -> float:
        """∫₀^∞ r² h̃₀(r) dr"""
        pass

    @abstractmethod
    def newton_potential(self, a: float) -> float:
        """∫ h̃₀(|w|) |x-w|^(-1) dw at |x| = a"""
        pass

    @abstractmethod
    def sample_shell_radius(self, a: float, rng: np.random.Generator) -> float:
        """Radius with density ∝ r² h̃₀(r) / max(r, a)"""
        pass

    def sample_point(self, rel: Vec3, rng: np.random.Generator) -> Vec3:
        """Point w with density ∝ h̃₀(|w|) |rel - w|^(-1)"""
        a = float(np.sqrt(np.dot(rel, rel)))
        r = self.sample_shell_radius(a, rng)
        return sample_inverse_distance_direction(rel, r, rng)


class InverseSquareProfile(ForcingProfile):
    """h̃₀(r) = r^(-2) (1+r)^(-2), unit radial mass"""

    name = "inverse_square"

    def value(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return 1.0 / (r * r * (1.0 + r) ** 2)

    def radial_mass(self) -> float:
        return 1.0

    def newton_potential(self, a: float) -> float:
        if a <= 0.0:
            return math.inf
        return 4.0 * math.pi * math.log1p(1.0 / a)

    def sample_shell_radius(self, a: float, rng: np.random.Generator) -> float:
        if a <= 0.0:
            raise DomainError("inverse-square forcing law is not normalizable at its center")
        inner = 1.0 / (1.0 + a)
        log_term = math.log1p(1.0 / a)
        outer = log_term - inner
        if rng.random() * (inner + outer) < inner:
            v = rng.random() * a / (1.0 + a)
            return v / (1.0 - v)
        # propose r^-1(1+r)^-1 on (a, ∞), accept with (1+a)/(1+r)
        return rejection_loop(
            lambda: 1.0 / math.expm1(log_term * (1.0 - rng.random())),
            lambda r: rng.random() * (1.0 + r) < 1.0 + a,
            "inverse-square shell radius",
        )


class BallProfile(ForcingProfile):
    """h̃₀(r) = 1[r <= R], the majorant of compactly supported forcing"""

    name = "ball"

    def __init__(self, radius: float):
        if radius <= 0:
            raise DomainError(f"ball radius must be positive, got {radius}")
        self.radius = float(radius)

    def value(self, r: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(r) <= self.radius, 1.0, 0.0)

    def radial_mass(self) -> float:
        return self.radius ** 3 / 3.0

    def newton_potential(self, a: float) -> float:
        big_r = self.radius
        if a >= big_r:
            return 4.0 * math.pi * big_r ** 3 / (3.0 * a)
        return 2.0 * math.pi * (big_r * big_r - a * a / 3.0)

    def sample_shell_radius(self, a: float, rng: np.random.Generator) -> float:
        big_r = self.radius
        if a >= big_r:
            return big_r * rng.random() ** (1.0 / 3.0)
        inner = a * a / 3.0
        outer = 0.5 * (big_r * big_r - a * a)
        if rng.random() * (inner + outer) < inner:
            return a * rng.random() ** (1.0 / 3.0)
        return math.sqrt(a * a + rng.random() * (big_r * big_r - a * a))


class ProfileConfig(CascadeBaseModel):
    """Config block selecting a forcing profile"""
    type: str = Field(..., description="Profile name: inverse_square or ball")
    radius: float = Field(default=1.0, gt=0, description="Support radius for the ball profile")

    def build(self) -> ForcingProfile:
        if self.type == InverseSquareProfile.name:
            return InverseSquareProfile()
        if self.type == BallProfile.name:
            return BallProfile(self.radius)
        raise ValueError(f"Unsupported forcing profile: {self.type}")
