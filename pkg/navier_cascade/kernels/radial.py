"""
Radial kernel pairs: h(y) = rho(|y|) with an optional radial forcing profile.

Built-ins:
    h0  |x|^-1, excessive, constants (π³, 4π² ∫r²h̃₀)
    H   (1+|x|²)^-1, not excessive, constants (π², 0), heat ratio 1+3e^(-2/3)
    Hp  (1+|x|)^-p for p ∈ (1,2], constants (π^(4-p)(1+1/√2)^(p-1), 0)
    h1  (1+|x|)^-1, the h0 kernel smoothed by (2π|y|)^-1(1+|y|)^-3
"""
import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import interpolate, special

from navier_cascade import quadrature
from navier_cascade.errors import DomainError
from navier_cascade.kernels.base import KernelPair, norms
from navier_cascade.kernels.profiles import ForcingProfile
from navier_cascade.samplers import RadialBounds, sample_inverse_distance_endpoint, three_part_envelope
from navier_cascade.vecgeom import Vec3

logger = logging.getLogger(__name__)

HEAT_RATIO_H = 1.0 + 3.0 * math.exp(-2.0 / 3.0)


class RadialTable:
    """Cubic spline of log f(a) against log a, built lazily from a 1-D evaluator

    Below the grid the value at the smallest node is used (the tabulated
    potentials are continuous at 0 for bounded kernels); above it the last
    log-log slope is extended.
    """

    def __init__(self, func: Callable[[float], float], lo: float = 1e-3, hi: float = 1e3, n: int = 121):
        self.func = func
        self.lo, self.hi, self.n = lo, hi, n
        self._spline = None

    def _build(self) -> None:
        grid = np.geomspace(self.lo, self.hi, self.n)
        values = np.array([self.func(float(a)) for a in grid])
        self._spline = interpolate.CubicSpline(np.log(grid), np.log(values))
        self._slope = float((np.log(values[-1]) - np.log(values[-2])) / (np.log(grid[-1]) - np.log(grid[-2])))
        self._last = (float(np.log(grid[-1])), float(np.log(values[-1])))

    def __call__(self, a: float) -> float:
        if self._spline is None:
            self._build()
        if a <= self.lo:
            return float(np.exp(self._spline(np.log(self.lo))))
        if a >= self.hi:
            log_a, log_v = self._last
            return float(np.exp(log_v + self._slope * (np.log(a) - log_a)))
        return float(np.exp(self._spline(np.log(a))))


class RadialKernelPair(KernelPair):
    """h(y) = rho(|y|) with rho non-increasing, h̃(y) = h̃₀(|y|) or 0"""

    def __init__(
        self,
        name: str,
        bounds: RadialBounds,
        gamma: float,
        forcing: Optional[ForcingProfile] = None,
        gamma_tilde: float = 0.0,
        excessive: bool = False,
        heat_ratio_M: Optional[float] = None,
    ):
        super().__init__(gamma, gamma_tilde if forcing is not None else 0.0, excessive, heat_ratio_M)
        self.name = name
        self.bounds = bounds
        self.forcing = forcing
        self._square_table = RadialTable(self._square_potential_radial)

    def rho(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def h(self, y: np.ndarray) -> np.ndarray:
        return self.rho(norms(y))

    def h_tilde(self, y: np.ndarray) -> np.ndarray:
        r = norms(y)
        if self.forcing is None:
            return np.zeros_like(r)
        return self.forcing.value(r)

    def singular_points(self):
        return [np.zeros(3)]

    def _square_potential_radial(self, a: float) -> float:
        return quadrature.square_potential_radial(self.rho, a)

    def square_potential(self, x: Vec3) -> float:
        return self._square_table(float(np.sqrt(np.dot(x, x))))

    def newton_potential(self, x: Vec3) -> float:
        if self.forcing is None:
            return 0.0
        return self.forcing.newton_potential(float(np.sqrt(np.dot(x, x))))

    def heat_convolution(self, x: Vec3, variance: float) -> float:
        return quadrature.heat_convolution_radial(self.rho, float(np.sqrt(np.dot(x, x))), variance)

    def sample_z_bilinear(self, x: Vec3, rng: np.random.Generator) -> Vec3:
        return three_part_envelope(np.asarray(x, dtype=np.float64), self.rho, self.bounds).sample(rng)

    def sample_z_forcing(self, x: Vec3, rng: np.random.Generator) -> Vec3:
        if self.forcing is None:
            return super().sample_z_forcing(x, rng)
        x = np.asarray(x, dtype=np.float64)
        return x - self.forcing.sample_point(x, rng)


class InverseDistancePair(RadialKernelPair):
    """h0(x) = |x|^-1 with a radial forcing profile"""

    def __init__(self, forcing: Optional[ForcingProfile] = None):
        gamma_tilde = 4.0 * math.pi ** 2 * forcing.radial_mass() if forcing is not None else 0.0
        super().__init__(
            name="h0" if forcing is None else f"h0[{forcing.name}]",
            bounds=RadialBounds(B=math.inf, A=1.0, C=1.0, q=1.0, scale=0.0),
            gamma=math.pi ** 3,
            forcing=forcing,
            gamma_tilde=gamma_tilde,
            excessive=True,
        )

    def rho(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return 1.0 / r

    def point_charge(self) -> Tuple[float, Vec3]:
        return 1.0, np.zeros(3)

    def square_potential(self, x: Vec3) -> float:
        a = float(np.sqrt(np.dot(x, x)))
        return math.inf if a == 0.0 else math.pi ** 3 / a

    def heat_convolution(self, x: Vec3, variance: float) -> float:
        """|x|^-1 P(|Z| < |x|/√variance) for a standard normal Z"""
        a = float(np.sqrt(np.dot(x, x)))
        if a == 0.0:
            return math.sqrt(2.0 / (math.pi * variance))
        return float(special.erf(a / math.sqrt(2.0 * variance))) / a

    def sample_endpoint(self, x: Vec3, variance: float, rng: np.random.Generator) -> Optional[Vec3]:
        return sample_inverse_distance_endpoint(np.asarray(x, dtype=np.float64), variance, rng)

    @property
    def has_endpoint_sampler(self) -> bool:
        return True


class RationalPair(RadialKernelPair):
    """H(x) = (1+|x|²)^-1, with ∫H²(y)|x-y|^-2 dy = π² H(x)"""

    def __init__(self):
        super().__init__(
            name="H",
            bounds=RadialBounds(B=1.0, A=0.5, C=1.0, q=2.0, scale=1.0),
            gamma=math.pi ** 2,
            excessive=False,
            heat_ratio_M=HEAT_RATIO_H,
        )

    def rho(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        return 1.0 / (1.0 + r * r)

    def square_potential(self, x: Vec3) -> float:
        return math.pi ** 2 / (1.0 + float(np.dot(x, x)))


class PowerPair(RadialKernelPair):
    """H_p(x) = (1+|x|)^-p"""

    def __init__(self, p: float):
        if not 1.0 < p <= 2.0:
            raise DomainError(f"H_p needs p ∈ (1,2], got {p}")
        root = 1.0 + 1.0 / math.sqrt(2.0)
        super().__init__(
            name=f"Hp[{p:g}]",
            bounds=RadialBounds(B=1.0, A=1.0, C=1.0, q=p, scale=1.0),
            gamma=math.pi ** (4.0 - p) * root ** (p - 1.0),
            excessive=False,
            heat_ratio_M=(HEAT_RATIO_H * root) ** (p / 2.0),
        )
        self.p = p

    def rho(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        return (1.0 + r) ** (-self.p)


class RadialDensity:
    """A radial probability density f(|y|) on R³ with ∫ 4πr² f(r) dr = 1"""

    def __init__(self, name: str, pdf: Callable[[np.ndarray], np.ndarray],
                 h0_convolution: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        self.name = name
        self.pdf = pdf
        self.h0_convolution = h0_convolution

    def total_mass(self) -> float:
        return 4.0 * math.pi * quadrature.radial_mass(self.pdf)


def _smoothing_pdf(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 1.0 / (2.0 * np.pi * r * (1.0 + r) ** 3)


def _smoothed_h0(r: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.asarray(r, dtype=np.float64))


SMOOTHING_DENSITY = RadialDensity("smoothing", _smoothing_pdf, h0_convolution=_smoothed_h0)


class SmoothedInverseDistancePair(RadialKernelPair):
    """h0 convolved with a radial probability density F

    The convolved kernel is the Newton potential of F,
    4π ∫ r² f(r) / max(r, |x|) dr, which is bounded by both F's value at 0
    and |x|^-1. Constants are inherited from h0.
    """

    def __init__(self, density: RadialDensity, gamma: float = math.pi ** 3):
        self.density = density
        self._rho_table = None
        if density.h0_convolution is None:
            self._rho_table = RadialTable(self._density_potential)
        sup = float(self._profile(0.0))
        super().__init__(
            name=f"h0*{density.name}",
            bounds=RadialBounds(B=sup, A=1.0, C=1.0, q=1.0, scale=1.0),
            gamma=gamma,
            excessive=True,
        )

    def _density_potential(self, a: float) -> float:
        return quadrature.newton_potential_radial(self.density.pdf, a)

    def _profile(self, a: float) -> float:
        if self.density.h0_convolution is not None:
            return float(self.density.h0_convolution(np.array([a]))[0])
        if a == 0.0:
            return self._density_potential(0.0)
        return self._rho_table(a)

    def rho(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if self.density.h0_convolution is not None:
            return self.density.h0_convolution(r)
        flat = np.array([self._profile(float(v)) for v in np.ravel(r)])
        return flat.reshape(r.shape)

    def singular_points(self):
        return []


def make_h0_pair(h_tilde_0: Optional[ForcingProfile] = None) -> InverseDistancePair:
    """The excessive pair (|x|^-1, h̃₀(|x|))

    Raises:
        DomainError: If ∫r²h̃₀(r)dr diverges
    """
    if h_tilde_0 is not None:
        mass = h_tilde_0.radial_mass()
        if not math.isfinite(mass):
            raise DomainError(f"forcing profile {h_tilde_0.name} has divergent ∫r²h̃₀ dr")
    return InverseDistancePair(h_tilde_0)


def make_H_pair() -> RationalPair:
    return RationalPair()


def make_Hp_pair(p: float) -> PowerPair:
    return PowerPair(p)


def make_h1_pair() -> SmoothedInverseDistancePair:
    """The bounded kernel (1+|x|)^-1"""
    return SmoothedInverseDistancePair(SMOOTHING_DENSITY)
