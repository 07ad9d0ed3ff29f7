import logging
import math
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from navier_cascade import quadrature
from navier_cascade.errors import DomainError
from navier_cascade.heat import heat_kernel_radial
from navier_cascade.vecgeom import Vec3

logger = logging.getLogger(__name__)


def norms(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return np.sqrt(np.sum(y * y, axis=-1))


class KernelPair(ABC):
    """A majorizing kernel pair (h, h̃) with constant pair (γ, γ̃)

    Pairs are immutable once built and are shared freely across workers.
    Subclasses supply h, h̃ and the sampler hooks; the potentials default to
    quadrature and are overridden wherever a closed form exists.

    Attributes:
        name: Human-readable description of the construction
        gamma: Installed bound on sup ∫h²(x-y)|y|^-2 dy / h(x)
        gamma_tilde: Installed bound on sup ∫h̃(x-y)|y|^-1 dy / h(x)
        excessive: Whether h is excessive for the 2ν heat semigroup
        heat_ratio_M: Bound on sup ∫h(x-y)K(y,2νt)dy / h(x), if known
    """

    name: str = "kernel"

    def __init__(
        self,
        gamma: float,
        gamma_tilde: float,
        excessive: bool,
        heat_ratio_M: Optional[float] = None,
    ):
        if not gamma > 0:
            raise DomainError(f"γ must be positive, got {gamma}")
        if gamma_tilde < 0:
            raise DomainError(f"γ̃ must be nonnegative, got {gamma_tilde}")
        self.gamma = float(gamma)
        self.gamma_tilde = float(gamma_tilde)
        self.excessive = bool(excessive)
        self.heat_ratio_M = 1.0 if excessive and heat_ratio_M is None else heat_ratio_M

    # --- evaluators ---
    @abstractmethod
    def h(self, y: np.ndarray) -> np.ndarray:
        """h on an array of points (..., 3); +inf at singular points"""
        pass

    @abstractmethod
    def h_tilde(self, y: np.ndarray) -> np.ndarray:
        """h̃ on an array of points (..., 3)"""
        pass

    @property
    def forcing_free(self) -> bool:
        """True when h̃ ≡ 0"""
        return self.gamma_tilde == 0.0

    def h_at(self, x: Vec3) -> float:
        return float(self.h(np.asarray(x, dtype=np.float64)[None, :])[0])

    def h_tilde_at(self, x: Vec3) -> float:
        return float(self.h_tilde(np.asarray(x, dtype=np.float64)[None, :])[0])

    def singular_points(self) -> List[Vec3]:
        """Points where h or h̃ is singular or sharply peaked"""
        return []

    def point_charge(self) -> Optional[Tuple[float, Vec3]]:
        """(k, c) when h(y) = k/|y - c|, else None"""
        return None

    # --- potentials ---
    def square_potential(self, x: Vec3) -> float:
        """∫ h²(x-y) |y|^(-2) dy"""
        return self.square_potential_quadrature(x)

    def newton_potential(self, x: Vec3) -> float:
        """∫ h̃(x-y) |y|^(-1) dy"""
        if self.forcing_free:
            return 0.0
        return self.newton_potential_quadrature(x)

    def heat_convolution(self, x: Vec3, variance: float) -> float:
        """∫ h(y) K(x-y, variance) dy"""
        return self.heat_convolution_quadrature(x, variance)

    def _centers(self, x: Vec3) -> List[Vec3]:
        x = np.asarray(x, dtype=np.float64)
        return [np.zeros(3), x] + [x - c for c in self.singular_points()]

    def square_potential_quadrature(self, x: Vec3, **grid) -> float:
        x = np.asarray(x, dtype=np.float64)

        def integrand(y: np.ndarray) -> np.ndarray:
            hv = self.h(x - y)
            return hv * hv / np.sum(y * y, axis=1)

        return float(quadrature.singular_volume_integral(integrand, self._centers(x), scale=self._scale(x), **grid))

    def newton_potential_quadrature(self, x: Vec3, **grid) -> float:
        x = np.asarray(x, dtype=np.float64)

        def integrand(y: np.ndarray) -> np.ndarray:
            return self.h_tilde(x - y) / norms(y)

        return float(quadrature.singular_volume_integral(integrand, self._centers(x), scale=self._scale(x), **grid))

    def heat_convolution_quadrature(self, x: Vec3, variance: float, **grid) -> float:
        x = np.asarray(x, dtype=np.float64)

        def integrand(y: np.ndarray) -> np.ndarray:
            return self.h(y) * heat_kernel_radial(norms(x - y), variance)

        centers = [x] + list(self.singular_points())
        return float(quadrature.singular_volume_integral(integrand, centers, scale=math.sqrt(variance), **grid))

    def _scale(self, x: Vec3) -> float:
        r = float(np.sqrt(np.dot(x, x)))
        return r if r > 0 else 1.0

    # --- cascade multipliers ---
    def multipliers(self, nu: float, x: Vec3) -> Tuple[float, float]:
        """(m(x), m̃(x)): the potentials divided by 8πν h(x)"""
        hx = self.h_at(x)
        if not math.isfinite(hx):
            raise DomainError("cascade multipliers are undefined where h is infinite")
        denom = 8.0 * math.pi * nu * hx
        m = self.square_potential(x) / denom
        m_tilde = 0.0 if self.forcing_free else self.newton_potential(x) / denom
        return m, m_tilde

    # --- sampler hooks ---
    def sample_z_bilinear(self, x: Vec3, rng: np.random.Generator) -> Vec3:
        raise DomainError(f"kernel pair {self.name} has no bilinear Z sampler")

    def sample_z_forcing(self, x: Vec3, rng: np.random.Generator) -> Vec3:
        if self.forcing_free:
            raise DomainError(f"kernel pair {self.name} has h̃ ≡ 0; the forcing branch is empty")
        raise DomainError(f"kernel pair {self.name} has no forcing Z sampler")

    def sample_endpoint(self, x: Vec3, variance: float, rng: np.random.Generator) -> Optional[Vec3]:
        """Draw from h(y)K(x-y, variance)/∫hK with probability ∫hK / h(x), else None"""
        raise DomainError(f"kernel pair {self.name} has no h-Brownian endpoint sampler")

    @property
    def has_endpoint_sampler(self) -> bool:
        return False

    def describe(self) -> dict:
        return {
            "name": self.name,
            "gamma": self.gamma,
            "gamma_tilde": self.gamma_tilde,
            "excessive": self.excessive,
            "heat_ratio_M": self.heat_ratio_M,
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, γ={self.gamma:.6g}, γ̃={self.gamma_tilde:.6g})"
