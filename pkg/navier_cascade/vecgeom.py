"""
Exact 3-vector geometry for the cascade.

Vectors are plain ``numpy`` arrays of shape (3,). Every function returns a
fresh array; inputs are never modified.
"""
import numpy as np
import numpy.typing as npt

from navier_cascade.errors import DomainError

Vec3 = npt.NDArray[np.float64]
Mat3 = npt.NDArray[np.float64]

# Below this norm a vector is treated as zero.
ZERO_NORM = 1e-300


def vec3(x1: float, x2: float, x3: float) -> Vec3:
    return np.array([x1, x2, x3], dtype=np.float64)


def as_vec3(value) -> Vec3:
    """Coerce a sequence to a float64 vector of length 3"""
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise DomainError(f"expected a 3-vector, got shape {arr.shape}")
    return arr.copy()


def norm(v: Vec3) -> float:
    return float(np.sqrt(np.dot(v, v)))


def unit(y: Vec3) -> Vec3:
    """Return e_y = y/|y|

    Raises:
        DomainError: If |y| is zero
    """
    r = norm(y)
    if r < ZERO_NORM:
        raise DomainError("unit vector of the zero vector is undefined")
    return y / r


def proj_perp(y: Vec3, u: Vec3) -> Vec3:
    """Project u onto the plane perpendicular to y: P_y u = u - (u·e)e"""
    e = unit(y)
    return u - np.dot(u, e) * e


def reflect(y: Vec3, u: Vec3) -> Vec3:
    """Apply (I - 3 e e^t) to u"""
    e = unit(y)
    return u - 3.0 * np.dot(u, e) * e


def b1(y: Vec3, u: Vec3, v: Vec3) -> Vec3:
    """b1(y; u, v) = (u·e) P_y v + (v·e) P_y u

    Symmetric and bilinear in (u, v), bounded by |u||v|.
    """
    e = unit(y)
    ue = np.dot(u, e)
    ve = np.dot(v, e)
    return ue * (v - ve * e) + ve * (u - ue * e)


def b2(y: Vec3, u: Vec3, v: Vec3) -> Vec3:
    """b2(y; u, v) = b1(y; u, v) + (u·(I - 3ee^t)v) e, bounded by 2|u||v|"""
    e = unit(y)
    ue = np.dot(u, e)
    ve = np.dot(v, e)
    scalar = np.dot(u, v) - 3.0 * ue * ve
    return ue * (v - ve * e) + ve * (u - ue * e) + scalar * e


def projection_matrix(y: Vec3) -> Mat3:
    """Matrix form of P_y"""
    e = unit(y)
    return np.eye(3) - np.outer(e, e)


def reflection_matrix(y: Vec3) -> Mat3:
    """Matrix form of I - 3 e_y e_y^t"""
    e = unit(y)
    return np.eye(3) - 3.0 * np.outer(e, e)


def orthonormal_frame(e: Vec3) -> Mat3:
    """Rotation matrix whose third column is the unit vector e

    Used to turn draws made about the x3-axis into draws about e.
    """
    e = unit(e)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a = helper - np.dot(helper, e) * e
    a /= norm(a)
    b = np.cross(e, a)
    return np.column_stack((a, b, e))
