"""
Closure operations on kernel pairs.

Each operation builds a new KernelPair from existing ones together with an
installed constant pair (γ, γ̃) that bounds the new pair's potentials:

    translate(μ)      h(· - μ)                    (γ, γ̃)
    rotate(A)         h(A ·)                      (γ, γ̃)
    scale(σ)          σh(σ ·), σ³h̃(σ ·)           (γ, γ̃)
    rescale(c, d)     c h, d h̃                    (cγ, dγ̃/c)
    convolve(F)       h0 * F                      (γ, γ̃) of h0
    mixture(p)        Σ p_j h_j                   (Σ p_j γ_j, Σ p_j γ̃_j)
    geo_mean(w)       h1^w h2^(1-w)               (γ1^w γ2^(1-w), γ̃1^w γ̃2^(1-w))
    min               min(h1, h2)                 (γ1 ∨ γ2, γ̃1 ∨ γ̃2)
    equivalent(h2, c) c^-1 h <= h2 <= c h         (c³γ, cγ̃)
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from navier_cascade import quadrature
from navier_cascade.errors import DomainError, SamplerHealthError
from navier_cascade.kernels.base import KernelPair
from navier_cascade.kernels.radial import InverseDistancePair, RadialDensity, SmoothedInverseDistancePair
from navier_cascade.samplers import rejection_loop
from navier_cascade.vecgeom import Mat3, Vec3, as_vec3

logger = logging.getLogger(__name__)


class Translated(KernelPair):
    def __init__(self, base: KernelPair, mu: Vec3):
        super().__init__(base.gamma, base.gamma_tilde, base.excessive, base.heat_ratio_M)
        self.base = base
        self.mu = as_vec3(mu)
        self.name = f"translate({base.name}, {np.round(self.mu, 6).tolist()})"

    def h(self, y):
        return self.base.h(np.asarray(y, dtype=np.float64) - self.mu)

    def h_tilde(self, y):
        return self.base.h_tilde(np.asarray(y, dtype=np.float64) - self.mu)

    def singular_points(self):
        return [c + self.mu for c in self.base.singular_points()]

    def point_charge(self):
        charge = self.base.point_charge()
        return None if charge is None else (charge[0], charge[1] + self.mu)

    def square_potential(self, x):
        return self.base.square_potential(as_vec3(x) - self.mu)

    def newton_potential(self, x):
        return self.base.newton_potential(as_vec3(x) - self.mu)

    def heat_convolution(self, x, variance):
        return self.base.heat_convolution(as_vec3(x) - self.mu, variance)

    def sample_z_bilinear(self, x, rng):
        return self.base.sample_z_bilinear(as_vec3(x) - self.mu, rng)

    def sample_z_forcing(self, x, rng):
        return self.base.sample_z_forcing(as_vec3(x) - self.mu, rng)

    def sample_endpoint(self, x, variance, rng):
        y = self.base.sample_endpoint(as_vec3(x) - self.mu, variance, rng)
        return None if y is None else y + self.mu

    @property
    def has_endpoint_sampler(self):
        return self.base.has_endpoint_sampler


class Rotated(KernelPair):
    """h(A y) for an orthogonal A"""

    def __init__(self, base: KernelPair, matrix: Mat3):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (3, 3) or not np.allclose(matrix @ matrix.T, np.eye(3), atol=1e-10):
            raise DomainError("rotation matrix must be a 3x3 orthogonal matrix")
        super().__init__(base.gamma, base.gamma_tilde, base.excessive, base.heat_ratio_M)
        self.base = base
        self.matrix = matrix
        self.name = f"rotate({base.name})"

    def h(self, y):
        return self.base.h(np.asarray(y, dtype=np.float64) @ self.matrix.T)

    def h_tilde(self, y):
        return self.base.h_tilde(np.asarray(y, dtype=np.float64) @ self.matrix.T)

    def singular_points(self):
        return [self.matrix.T @ c for c in self.base.singular_points()]

    def point_charge(self):
        charge = self.base.point_charge()
        return None if charge is None else (charge[0], self.matrix.T @ charge[1])

    def square_potential(self, x):
        return self.base.square_potential(self.matrix @ as_vec3(x))

    def newton_potential(self, x):
        return self.base.newton_potential(self.matrix @ as_vec3(x))

    def heat_convolution(self, x, variance):
        return self.base.heat_convolution(self.matrix @ as_vec3(x), variance)

    def sample_z_bilinear(self, x, rng):
        return self.matrix.T @ self.base.sample_z_bilinear(self.matrix @ as_vec3(x), rng)

    def sample_z_forcing(self, x, rng):
        return self.matrix.T @ self.base.sample_z_forcing(self.matrix @ as_vec3(x), rng)

    def sample_endpoint(self, x, variance, rng):
        y = self.base.sample_endpoint(self.matrix @ as_vec3(x), variance, rng)
        return None if y is None else self.matrix.T @ y

    @property
    def has_endpoint_sampler(self):
        return self.base.has_endpoint_sampler


class Scaled(KernelPair):
    """(σ h(σ ·), σ³ h̃(σ ·)), which leaves both potential ratios unchanged"""

    def __init__(self, base: KernelPair, sigma: float):
        if not sigma > 0:
            raise DomainError(f"scale factor must be positive, got {sigma}")
        super().__init__(base.gamma, base.gamma_tilde, base.excessive, base.heat_ratio_M)
        self.base = base
        self.sigma = float(sigma)
        self.name = f"scale({base.name}, {sigma:g})"

    def h(self, y):
        return self.sigma * self.base.h(self.sigma * np.asarray(y, dtype=np.float64))

    def h_tilde(self, y):
        return self.sigma ** 3 * self.base.h_tilde(self.sigma * np.asarray(y, dtype=np.float64))

    def singular_points(self):
        return [c / self.sigma for c in self.base.singular_points()]

    def point_charge(self):
        charge = self.base.point_charge()
        return None if charge is None else (charge[0], charge[1] / self.sigma)

    def square_potential(self, x):
        return self.sigma * self.base.square_potential(self.sigma * as_vec3(x))

    def newton_potential(self, x):
        return self.sigma * self.base.newton_potential(self.sigma * as_vec3(x))

    def heat_convolution(self, x, variance):
        return self.sigma * self.base.heat_convolution(self.sigma * as_vec3(x), self.sigma ** 2 * variance)

    def sample_z_bilinear(self, x, rng):
        return self.base.sample_z_bilinear(self.sigma * as_vec3(x), rng) / self.sigma

    def sample_z_forcing(self, x, rng):
        return self.base.sample_z_forcing(self.sigma * as_vec3(x), rng) / self.sigma

    def sample_endpoint(self, x, variance, rng):
        y = self.base.sample_endpoint(self.sigma * as_vec3(x), self.sigma ** 2 * variance, rng)
        return None if y is None else y / self.sigma

    @property
    def has_endpoint_sampler(self):
        return self.base.has_endpoint_sampler


class Rescaled(KernelPair):
    """(c h, d h̃) with constants (cγ, dγ̃/c); samplers are unchanged"""

    def __init__(self, base: KernelPair, c: float, d: float):
        if not (c > 0 and d > 0):
            raise DomainError(f"rescale factors must be positive, got c={c}, d={d}")
        if isinstance(base, Rescaled):
            c, d, base = c * base.c, d * base.d, base.base
        super().__init__(c * base.gamma, d * base.gamma_tilde / c, base.excessive, base.heat_ratio_M)
        self.base = base
        self.c = float(c)
        self.d = float(d)
        self.name = f"rescale({base.name}, c={c:.6g}, d={d:.6g})"

    def h(self, y):
        return self.c * self.base.h(y)

    def h_tilde(self, y):
        return self.d * self.base.h_tilde(y)

    def singular_points(self):
        return self.base.singular_points()

    def point_charge(self):
        charge = self.base.point_charge()
        return None if charge is None else (self.c * charge[0], charge[1])

    def square_potential(self, x):
        return self.c * self.c * self.base.square_potential(x)

    def newton_potential(self, x):
        return self.d * self.base.newton_potential(x)

    def heat_convolution(self, x, variance):
        return self.c * self.base.heat_convolution(x, variance)

    def sample_z_bilinear(self, x, rng):
        return self.base.sample_z_bilinear(x, rng)

    def sample_z_forcing(self, x, rng):
        return self.base.sample_z_forcing(x, rng)

    def sample_endpoint(self, x, variance, rng):
        return self.base.sample_endpoint(x, variance, rng)

    @property
    def has_endpoint_sampler(self):
        return self.base.has_endpoint_sampler


def _pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = float(np.sum(weights))
    if not (math.isfinite(total) and total > 0):
        raise SamplerHealthError(f"component weights are not finite and positive: {weights}")
    return int(rng.choice(len(weights), p=weights / total))


def _accept_loop(propose: Callable[[], Vec3], ratio: Callable[[Vec3], float], rng: np.random.Generator, label: str) -> Vec3:
    return rejection_loop(propose, lambda z: rng.random() < ratio(z), label)


class Mixture(KernelPair):
    """Σ p_j h_j with Σ p_j = 1"""

    def __init__(self, pairs: Sequence[KernelPair], weights: Sequence[float]):
        weights = np.asarray(weights, dtype=np.float64)
        if len(pairs) < 1 or len(pairs) != len(weights):
            raise DomainError("mixture needs one weight per component")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise DomainError(f"mixture weights must be positive and sum to 1, got {weights.tolist()}")
        heat_m = [pair.heat_ratio_M for pair in pairs]
        super().__init__(
            float(np.dot(weights, [pair.gamma for pair in pairs])),
            float(np.dot(weights, [pair.gamma_tilde for pair in pairs])),
            all(pair.excessive for pair in pairs),
            None if any(m is None for m in heat_m) else max(heat_m),
        )
        self.pairs = list(pairs)
        self.weights = weights
        self.name = "mixture(" + ", ".join(f"{w:g}·{pair.name}" for w, pair in zip(weights, pairs)) + ")"

    def h(self, y):
        return sum(w * pair.h(y) for w, pair in zip(self.weights, self.pairs))

    def h_tilde(self, y):
        return sum(w * pair.h_tilde(y) for w, pair in zip(self.weights, self.pairs))

    def singular_points(self):
        return [c for pair in self.pairs for c in pair.singular_points()]

    def square_potential(self, x):
        """∫ (Σ p_j h_j)²(x-y) |y|^-2 dy, exact pair by pair when every h_j is k_j/|· - c_j|"""
        charges = [pair.point_charge() for pair in self.pairs]
        if any(charge is None for charge in charges):
            return super().square_potential(x)
        x = as_vec3(x)
        total = 0.0
        for j, (k_j, c_j) in enumerate(charges):
            for i in range(j, len(charges)):
                k_i, c_i = charges[i]
                overlap = quadrature.inverse_distance_overlap(x - c_j, x - c_i)
                term = self.weights[j] * self.weights[i] * k_j * k_i * overlap
                total += term if i == j else 2.0 * term
        return float(total)

    def newton_potential(self, x):
        return float(sum(w * pair.newton_potential(x) for w, pair in zip(self.weights, self.pairs)))

    def heat_convolution(self, x, variance):
        return float(sum(w * pair.heat_convolution(x, variance) for w, pair in zip(self.weights, self.pairs)))

    def sample_z_bilinear(self, x, rng):
        # envelope Σ p_j h_j² over-covers (Σ p_j h_j)² since Σ p_j = 1
        x = as_vec3(x)
        square = np.array([w * pair.square_potential(x) for w, pair in zip(self.weights, self.pairs)])

        def propose():
            return self.pairs[_pick(square, rng)].sample_z_bilinear(x, rng)

        def ratio(z):
            values = np.array([pair.h_at(x - z) for pair in self.pairs])
            return float(np.dot(self.weights, values) ** 2 / np.dot(self.weights, values ** 2))

        return _accept_loop(propose, ratio, rng, "mixture bilinear Z")

    def sample_z_forcing(self, x, rng):
        if self.forcing_free:
            return super().sample_z_forcing(x, rng)
        newton = np.array([w * pair.newton_potential(x) for w, pair in zip(self.weights, self.pairs)])
        return self.pairs[_pick(newton, rng)].sample_z_forcing(x, rng)

    def sample_endpoint(self, x, variance, rng):
        values = np.array([w * pair.h_at(x) for w, pair in zip(self.weights, self.pairs)])
        return self.pairs[_pick(values, rng)].sample_endpoint(x, variance, rng)

    @property
    def has_endpoint_sampler(self):
        return all(pair.has_endpoint_sampler for pair in self.pairs)


class GeometricMean(KernelPair):
    """h1^w h2^(1-w), h̃1^w h̃2^(1-w)"""

    def __init__(self, first: KernelPair, second: KernelPair, w: float):
        if not 0.0 < w < 1.0:
            raise DomainError(f"geometric-mean weight must lie in (0,1), got {w}")
        heat_m = None
        if first.heat_ratio_M is not None and second.heat_ratio_M is not None:
            heat_m = first.heat_ratio_M ** w * second.heat_ratio_M ** (1.0 - w)
        super().__init__(
            first.gamma ** w * second.gamma ** (1.0 - w),
            first.gamma_tilde ** w * second.gamma_tilde ** (1.0 - w),
            first.excessive and second.excessive,
            heat_m,
        )
        self.first, self.second, self.w = first, second, float(w)
        self.name = f"geo_mean({first.name}, {second.name}, {w:g})"

    def h(self, y):
        with np.errstate(invalid="ignore"):
            return self.first.h(y) ** self.w * self.second.h(y) ** (1.0 - self.w)

    def h_tilde(self, y):
        return self.first.h_tilde(y) ** self.w * self.second.h_tilde(y) ** (1.0 - self.w)

    def singular_points(self):
        return self.first.singular_points() + self.second.singular_points()

    def sample_z_bilinear(self, x, rng):
        # AM-GM: h1^(2w) h2^(2-2w) <= w h1² + (1-w) h2²
        x = as_vec3(x)
        parts = (self.first, self.second)
        square = np.array([self.w * self.first.square_potential(x), (1.0 - self.w) * self.second.square_potential(x)])

        def propose():
            return parts[_pick(square, rng)].sample_z_bilinear(x, rng)

        def ratio(z):
            h1, h2 = self.first.h_at(x - z), self.second.h_at(x - z)
            envelope = self.w * h1 * h1 + (1.0 - self.w) * h2 * h2
            return 0.0 if envelope == 0.0 else (h1 ** self.w * h2 ** (1.0 - self.w)) ** 2 / envelope

        return _accept_loop(propose, ratio, rng, "geometric-mean bilinear Z")

    def sample_z_forcing(self, x, rng):
        if self.forcing_free:
            return super().sample_z_forcing(x, rng)
        x = as_vec3(x)
        parts = (self.first, self.second)
        newton = np.array([self.w * self.first.newton_potential(x), (1.0 - self.w) * self.second.newton_potential(x)])

        def propose():
            return parts[_pick(newton, rng)].sample_z_forcing(x, rng)

        def ratio(z):
            g1, g2 = self.first.h_tilde_at(x - z), self.second.h_tilde_at(x - z)
            envelope = self.w * g1 + (1.0 - self.w) * g2
            return 0.0 if envelope == 0.0 else g1 ** self.w * g2 ** (1.0 - self.w) / envelope

        return _accept_loop(propose, ratio, rng, "geometric-mean forcing Z")


class Minimum(KernelPair):
    """min(h1, h2), min(h̃1, h̃2) with constants (γ1 ∨ γ2, γ̃1 ∨ γ̃2)"""

    def __init__(self, first: KernelPair, second: KernelPair):
        heat_m = None
        if first.heat_ratio_M is not None and second.heat_ratio_M is not None:
            heat_m = max(first.heat_ratio_M, second.heat_ratio_M)
        super().__init__(
            max(first.gamma, second.gamma),
            max(first.gamma_tilde, second.gamma_tilde),
            first.excessive and second.excessive,
            heat_m,
        )
        self.first, self.second = first, second
        self.name = f"min({first.name}, {second.name})"

    def h(self, y):
        return np.minimum(self.first.h(y), self.second.h(y))

    def h_tilde(self, y):
        return np.minimum(self.first.h_tilde(y), self.second.h_tilde(y))

    def singular_points(self):
        return self.first.singular_points() + self.second.singular_points()

    def sample_z_bilinear(self, x, rng):
        x = as_vec3(x)
        part = min((self.first, self.second), key=lambda pair: pair.square_potential(x))

        def ratio(z):
            hk = part.h_at(x - z)
            return 0.0 if hk == 0.0 else (min(self.first.h_at(x - z), self.second.h_at(x - z)) / hk) ** 2

        return _accept_loop(lambda: part.sample_z_bilinear(x, rng), ratio, rng, "minimum bilinear Z")

    def sample_z_forcing(self, x, rng):
        if self.forcing_free:
            return super().sample_z_forcing(x, rng)
        x = as_vec3(x)
        candidates = [pair for pair in (self.first, self.second) if not pair.forcing_free]
        part = min(candidates, key=lambda pair: pair.newton_potential(x))

        def ratio(z):
            gk = part.h_tilde_at(x - z)
            return 0.0 if gk == 0.0 else min(self.first.h_tilde_at(x - z), self.second.h_tilde_at(x - z)) / gk

        return _accept_loop(lambda: part.sample_z_forcing(x, rng), ratio, rng, "minimum forcing Z")


class Equivalent(KernelPair):
    """(h2, h̃) for a kernel h2 with c^-1 h <= h2 <= c h; constants (c³γ, cγ̃)

    The equivalence itself is the caller's claim; ``check_equivalence``
    samples it on check points.
    """

    def __init__(self, base: KernelPair, other: KernelPair, c: float):
        if not c >= 1.0:
            raise DomainError(f"equivalence constant must be >= 1, got {c}")
        heat_m = None if base.heat_ratio_M is None else c * c * base.heat_ratio_M
        super().__init__(c ** 3 * base.gamma, c * base.gamma_tilde, other.excessive, heat_m)
        self.base, self.other, self.c = base, other, float(c)
        self.name = f"equivalent({base.name} ~ {other.name}, c={c:g})"

    def check_equivalence(self, check_points: np.ndarray) -> float:
        """Largest violation factor of c^-1 h <= h2 <= c h over the points (<= 1 means it held)"""
        h = self.base.h(check_points)
        h2 = self.other.h(check_points)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where((h > 0) & np.isfinite(h) & np.isfinite(h2), h2 / h, 1.0)
        return float(max(np.max(ratio), np.max(1.0 / ratio)) / self.c)

    def h(self, y):
        return self.other.h(y)

    def h_tilde(self, y):
        return self.base.h_tilde(y)

    def singular_points(self):
        return self.other.singular_points() + self.base.singular_points()

    def square_potential(self, x):
        return self.other.square_potential(x)

    def newton_potential(self, x):
        return self.base.newton_potential(x)

    def heat_convolution(self, x, variance):
        return self.other.heat_convolution(x, variance)

    def sample_z_bilinear(self, x, rng):
        return self.other.sample_z_bilinear(x, rng)

    def sample_z_forcing(self, x, rng):
        return self.base.sample_z_forcing(x, rng)

    def sample_endpoint(self, x, variance, rng):
        return self.other.sample_endpoint(x, variance, rng)

    @property
    def has_endpoint_sampler(self):
        return self.other.has_endpoint_sampler


# --- Operations ----------------------------------------------------------------

def translate(pair: KernelPair, mu: Vec3) -> KernelPair:
    return Translated(pair, mu)


def rotate(pair: KernelPair, matrix: Mat3) -> KernelPair:
    return Rotated(pair, matrix)


def scale(pair: KernelPair, sigma: float) -> KernelPair:
    return Scaled(pair, sigma)


def rescale(pair: KernelPair, c: float, d: float = 1.0) -> KernelPair:
    return Rescaled(pair, c, d)


def convolve(pair: KernelPair, density: RadialDensity) -> KernelPair:
    """Smooth the h0 kernel by a radial probability density

    Raises:
        DomainError: If pair is not a forcing-free h0 pair, or density is not
            a probability density
    """
    if not isinstance(pair, InverseDistancePair) or not pair.forcing_free:
        raise DomainError("convolution is supported for the forcing-free h0 pair only")
    mass = density.total_mass()
    if abs(mass - 1.0) > 1e-6:
        raise DomainError(f"convolution density must have unit mass, got {mass:.8g}")
    return SmoothedInverseDistancePair(density, gamma=pair.gamma)


def mixture(pairs: Sequence[KernelPair], weights: Sequence[float]) -> KernelPair:
    return Mixture(pairs, weights)


def geo_mean(first: KernelPair, second: KernelPair, w: float) -> KernelPair:
    return GeometricMean(first, second, w)


def minimum(first: KernelPair, second: KernelPair) -> KernelPair:
    return Minimum(first, second)


def equivalent(pair: KernelPair, other: KernelPair, c: float) -> KernelPair:
    return Equivalent(pair, other, c)


ALGEBRA_OPS: Dict[str, Callable[..., KernelPair]] = {
    "translate": lambda pair, mu: translate(pair, mu),
    "rotate": lambda pair, matrix: rotate(pair, matrix),
    "scale": lambda pair, sigma: scale(pair, sigma),
    "rescale": lambda pair, c, d=1.0: rescale(pair, c, d),
    "convolve": lambda pair, density: convolve(pair, density),
    "mixture": lambda pair, others, weights: mixture([pair, *others], weights),
    "geo_mean": lambda pair, other, w: geo_mean(pair, other, w),
    "min": lambda pair, other: minimum(pair, other),
    "equivalent": lambda pair, other, c: equivalent(pair, other, c),
}


def kernel_algebra(op: str, pair: KernelPair, **params) -> KernelPair:
    """Apply a closure operation by name

    Raises:
        DomainError: For an unknown operation or invalid parameters
    """
    try:
        builder = ALGEBRA_OPS[op]
    except KeyError:
        raise DomainError(f"unknown kernel operation '{op}'; expected one of {sorted(ALGEBRA_OPS)}")
    try:
        result = builder(pair, **params)
    except TypeError as e:
        raise DomainError(f"bad parameters for kernel operation '{op}': {e}")
    logger.debug(f"kernel_algebra {op}: {result!r}")
    return result


def fit_to_hypotheses(pair: KernelPair, nu: float, p: float) -> KernelPair:
    """Rescale so that γ = 8πνp/11 and γ̃ = 2πν(1-p) exactly

    The cascade multipliers then satisfy 11m/p <= 1 and 4m̃/(1-p) <= 1.
    """
    if not nu > 0:
        raise DomainError(f"ν must be positive, got {nu}")
    if not 0.0 < p <= 0.5:
        raise DomainError(f"p must lie in (0,1/2], got {p}")
    c = 8.0 * math.pi * nu * p / (11.0 * pair.gamma)
    d = 1.0
    if pair.gamma_tilde > 0:
        d = 2.0 * math.pi * nu * (1.0 - p) * c / pair.gamma_tilde
    return Rescaled(pair, c, d)


def standardize(pair: KernelPair) -> KernelPair:
    """Rescale to the standard constant pair (1, 1), or (1, 0) when h̃ ≡ 0"""
    c = 1.0 / pair.gamma
    d = 1.0 if pair.gamma_tilde == 0.0 else 1.0 / (pair.gamma * pair.gamma_tilde)
    return Rescaled(pair, c, d)
