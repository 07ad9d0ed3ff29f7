"""
Quadrature for the singular integrals of the cascade.

Two families live here:

* one-dimensional radial reductions for radial kernels, handed to
  ``scipy.integrate.quad`` with the log-singularity at ``|x|`` split out;
* a partitioned 3-D rule for arbitrary integrands with point singularities:
  every singular center gets its own log-radial × product-Gauss spherical
  grid, and a partition of unity w_k ∝ |y - c_k|^(-2) hands each piece of
  the integrand to the grid that resolves it.
"""
import logging
import math
import warnings
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from navier_cascade.errors import DomainError, NumericError

logger = logging.getLogger(__name__)

RadialFn = Callable[[np.ndarray], np.ndarray]


def quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Optional[Sequence[float]] = None,
    epsabs: float = 1e-13,
    epsrel: float = 1e-10,
    limit: int = 400,
) -> float:
    """scipy quad with non-convergence turned into NumericError

    Raises:
        NumericError: If quad reports a failure and its error estimate is
            larger than 1e-6 relative
    """
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit, "full_output": 1}
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inner = [p for p in points if a < p < b]
        if inner:
            kwargs["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(func, a, b, **kwargs)
    value, abserr = result[0], result[1]
    if len(result) == 4 and abserr > 1e-6 * max(abs(value), 1e-300) and abserr > epsabs * 1e3:
        raise NumericError(
            f"quadrature on [{a}, {b}] did not converge: value={value:.6e}, "
            f"error estimate={abserr:.3e} ({result[3]})"
        )
    return float(value)


def split_quad(func: Callable[[float], float], breaks: Iterable[float], upper: float = math.inf) -> float:
    """Integrate func over [0, upper] as a sum over the panels cut at breaks"""
    edges = sorted({0.0, *[b for b in breaks if 0.0 < b < upper]})
    edges.append(upper)
    return sum(quad(func, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))


# --- Radial reductions -------------------------------------------------------

def square_potential_radial(rho: RadialFn, a: float) -> float:
    """∫ rho(|x-y|)² |y|^(-2) dy for |x| = a

    The angular average of |x - s ω|^(-2) is ln((a+s)/|a-s|)/(2as), which
    leaves (2π/a) ∫ s rho(s)² ln((a+s)/|a-s|) ds.
    """
    if a <= 0.0:
        return 4.0 * math.pi * split_quad(lambda s: float(rho(np.float64(s))) ** 2, [1.0])

    def integrand(s: float) -> float:
        if s == a:
            return 0.0
        value = float(rho(np.float64(s)))
        return s * value * value * math.log((a + s) / abs(a - s))

    return 2.0 * math.pi / a * split_quad(integrand, [a / 2.0, a, 2.0 * a])


def newton_potential_radial(f: RadialFn, a: float) -> float:
    """∫ f(|w|) |x-w|^(-1) dw for |x| = a (shell theorem: 4π ∫ s² f(s)/max(s,a) ds)"""

    def integrand(s: float) -> float:
        return s * s * float(f(np.float64(s))) / max(s, a)

    return 4.0 * math.pi * split_quad(integrand, [a, 1.0] if a > 0 else [1.0])


def heat_convolution_radial(rho: RadialFn, a: float, variance: float) -> float:
    """∫ rho(|y|) K(x-y, variance) dy for |x| = a"""
    if variance <= 0:
        raise DomainError(f"variance must be positive, got {variance}")
    sd = math.sqrt(variance)
    norm = (2.0 * math.pi * variance) ** -1.5
    if a <= 0.0:
        def integrand(r: float) -> float:
            return 4.0 * math.pi * r * r * float(rho(np.float64(r))) * norm * math.exp(-r * r / (2.0 * variance))
    else:
        def integrand(r: float) -> float:
            # 4π r² ρ(r) K̄(r), K̄ the angular average written without overflow
            kernel = math.exp(-((r - a) ** 2) / (2.0 * variance)) - math.exp(-((r + a) ** 2) / (2.0 * variance))
            return 2.0 * math.pi * variance / a * r * float(rho(np.float64(r))) * norm * kernel
    upper = a + 40.0 * sd
    breaks = [max(a - 8.0 * sd, 0.0), max(a - sd, 0.0), a, a + sd, a + 8.0 * sd]
    return split_quad(integrand, breaks, upper=upper)


def inverse_distance_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """∫ |a-y|^-1 |b-y|^-1 |y|^-2 dy

    Expanding both inverse distances in Legendre series and integrating the
    radius in closed form leaves one dimension: with A = |a| <= B = |b| and
    c the cosine between a and b,

        8π/√(AB) ∫_0^√(A/B) ln(1/u) (1 - 2cu² + u⁴)^(-1/2) du,

    which is π³/A when a = b.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    A, B = float(np.sqrt(np.dot(a, a))), float(np.sqrt(np.dot(b, b)))
    if A == 0.0 or B == 0.0:
        return math.inf
    if A > B:
        A, B = B, A
    c = min(1.0, max(-1.0, float(np.dot(a, b)) / (A * B)))
    s = math.sqrt(A / B)
    gap = 1.0 - c * c

    def integrand(u: float) -> float:
        return -math.log(u) / math.sqrt((u * u - c) ** 2 + gap)

    # the denominator is smallest at u = √c
    peak = [math.sqrt(c)] if c > 0.0 else None
    return 8.0 * math.pi / math.sqrt(A * B) * quad(integrand, 0.0, s, points=peak)


def radial_mass(f: RadialFn, lo: float = 0.0, hi: float = math.inf) -> float:
    """∫ r² f(r) dr over [lo, hi]"""

    def integrand(r: float) -> float:
        return r * r * float(f(np.float64(r)))

    if lo <= 0.0:
        return split_quad(integrand, [1.0], upper=hi)
    return quad(integrand, lo, hi)


# --- Grids ----------------------------------------------------------------------

@lru_cache(maxsize=32)
def sphere_grid(n_theta: int = 24, n_phi: int = 48) -> Tuple[np.ndarray, np.ndarray]:
    """Product Gauss-Legendre (in cos θ) × trapezoid (in φ) rule on S²

    Returns:
        (directions of shape (n_theta*n_phi, 3), weights summing to 4π)
    """
    cos_t, w_t = special.roots_legendre(n_theta)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_t = np.sqrt(1.0 - cos_t ** 2)
    dirs = np.stack(
        [
            np.outer(sin_t, np.cos(phi)).ravel(),
            np.outer(sin_t, np.sin(phi)).ravel(),
            np.repeat(cos_t, n_phi),
        ],
        axis=1,
    )
    weights = np.repeat(w_t, n_phi) * (2.0 * np.pi / n_phi)
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def log_radial_nodes(r_lo: float, r_hi: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in u = ln r

    Returns:
        (radii, weights) for ∫ f(r) dr, the Jacobian r already folded in
    """
    x, w = special.roots_legendre(n)
    lo, hi = math.log(r_lo), math.log(r_hi)
    u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    r = np.exp(u)
    return r, 0.5 * (hi - lo) * w * r


def time_nodes(t: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ∫₀ᵗ f(s) ds when f may blow up like s^(-1/2)

    Gauss-Jacobi with weight (1+x)^(-1/2) absorbs the singularity at s = 0;
    the returned weights already include s^(1/2) so that Σ W_i f(s_i)
    approximates the integral directly.
    """
    if t <= 0:
        raise DomainError(f"time horizon must be positive, got {t}")
    x, w = special.roots_jacobi(n, 0.0, -0.5)
    s = 0.5 * t * (1.0 + x)
    return s, math.sqrt(0.5 * t) * w * np.sqrt(s)


# --- Partitioned 3-D rule ---------------------------------------------------------

def singular_volume_integral(
    func: Callable[[np.ndarray], np.ndarray],
    centers: Sequence[np.ndarray],
    scale: float = 1.0,
    n_radial: int = 320,
    n_theta: int = 32,
    n_phi: int = 64,
    span: float = 1e7,
    chunk: int = 200_000,
) -> np.ndarray:
    """∫ func(y) dy over R³ for integrands singular only at the given centers

    Args:
        func: Vectorized integrand, (N, 3) -> (N,) or (N, k)
        centers: Points carrying integrable singularities or sharp features
        scale: Length scale of the integrand; radii run over [scale/span, scale*span]
        n_radial: Gauss-Legendre nodes in ln r per center
        n_theta, n_phi: Spherical product grid size

    Returns:
        The integral, scalar array or length-k vector
    """
    centers = [np.asarray(c, dtype=np.float64) for c in centers]
    if not centers:
        centers = [np.zeros(3)]
    # merge coincident centers so the partition weights stay finite
    unique = []
    for c in centers:
        if not any(np.allclose(c, d, rtol=0.0, atol=1e-12 * max(scale, 1.0)) for d in unique):
            unique.append(c)
    dirs, w_ang = sphere_grid(n_theta, n_phi)
    radii, w_rad = log_radial_nodes(scale / span, scale * span, n_radial)
    offsets = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (w_rad[:, None] * radii[:, None] ** 2 * w_ang[None, :]).ravel()

    total = None
    for k, c in enumerate(unique):
        for start in range(0, offsets.shape[0], chunk):
            y = c + offsets[start:start + chunk]
            wk = weights[start:start + chunk]
            if len(unique) > 1:
                inv = np.stack([1.0 / np.sum((y - d) ** 2, axis=1) for d in unique], axis=0)
                part = inv[k] / np.sum(inv, axis=0)
            else:
                part = 1.0
            values = np.asarray(func(y), dtype=np.float64)
            factor = wk * part
            if values.ndim == 1:
                contrib = np.sum(np.where(np.isfinite(values), values, 0.0) * factor)
            else:
                contrib = np.sum(np.where(np.isfinite(values), values, 0.0) * factor[:, None], axis=0)
            total = contrib if total is None else total + contrib
    return np.asarray(total)
