"""
Heat kernel, Gaussian ball mass and the Oseen-type tensor Γ.

K(y, t) is the transition density of 3-D Brownian motion at time t,
(2πt)^(-3/2) exp(-|y|²/2t). The viscous problem evaluates it at 2νs.
"""
import math

import numpy as np
from scipy import special

from navier_cascade.errors import DomainError
from navier_cascade.vecgeom import Mat3, Vec3, norm, unit

# ball_mass switches to its power series below this value of r/(2√(νs)).
SERIES_SWITCH = 1e-4


def heat_kernel(y: Vec3, t: float) -> float:
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    r2 = float(np.dot(y, y))
    return (2.0 * math.pi * t) ** -1.5 * math.exp(-r2 / (2.0 * t))


def heat_kernel_radial(r: np.ndarray, t: float) -> np.ndarray:
    """Vectorized K as a function of |y|"""
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    r = np.asarray(r, dtype=np.float64)
    return (2.0 * np.pi * t) ** -1.5 * np.exp(-r * r / (2.0 * t))


def ball_mass(r: float, nu_s: float) -> float:
    """Mass of the ball {|y| <= r} under K(·, 2νs)

    Args:
        r: Ball radius
        nu_s: The product ν·s

    Returns:
        erf(z) - (2/√π) z exp(-z²) with z = r/(2√(νs)), a value in [0, 1]
    """
    if r < 0:
        raise DomainError(f"ball radius must be nonnegative, got {r}")
    if nu_s <= 0:
        raise DomainError(f"ball_mass needs ν·s > 0, got {nu_s}")
    z = r / (2.0 * math.sqrt(nu_s))
    if z < SERIES_SWITCH:
        # (2/√π)(2z³/3 - 2z⁵/5 + z⁷/7); the two leading terms cancel otherwise
        z2 = z * z
        return (2.0 / math.sqrt(math.pi)) * z * z2 * (2.0 / 3.0 - z2 * (0.4 - z2 / 7.0))
    mass = float(special.erf(z)) - (2.0 / math.sqrt(math.pi)) * z * math.exp(-z * z)
    return min(max(mass, 0.0), 1.0)


def ball_mass_array(r: np.ndarray, nu_s) -> np.ndarray:
    """Vectorized ball_mass over radii (and optionally matching ν·s values)"""
    r = np.asarray(r, dtype=np.float64)
    nu_s = np.broadcast_to(np.asarray(nu_s, dtype=np.float64), r.shape)
    z = r / (2.0 * np.sqrt(nu_s))
    z2 = z * z
    series = (2.0 / np.sqrt(np.pi)) * z * z2 * (2.0 / 3.0 - z2 * (0.4 - z2 / 7.0))
    direct = special.erf(z) - (2.0 / np.sqrt(np.pi)) * z * np.exp(-z2)
    return np.clip(np.where(z < SERIES_SWITCH, series, direct), 0.0, 1.0)


def gamma_kernel(x: Vec3, s: float, nu: float) -> Mat3:
    """Γ(x, s) = K(x, 2νs) P_x - (4π)^(-1) |x|^(-3) (I - 3ee^t) ball_mass(|x|, νs)

    Raises:
        DomainError: At x = 0 or for s <= 0
    """
    if s <= 0 or nu <= 0:
        raise DomainError(f"Γ needs s > 0 and ν > 0, got s={s}, ν={nu}")
    r = norm(x)
    e = unit(x)
    outer = np.outer(e, e)
    eye = np.eye(3)
    k = heat_kernel(x, 2.0 * nu * s)
    far = ball_mass(r, nu * s) / (4.0 * math.pi * r ** 3)
    gamma = k * (eye - outer) - far * (eye - 3.0 * outer)
    # symmetrize away round-off from the outer product
    return 0.5 * (gamma + gamma.T)
