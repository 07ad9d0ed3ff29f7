"""
Picard oracle: deterministic fixed-point iteration of the integral equation

    u(x,t) = ∫u₀(x-y)K(y,2νt)dy
             + ∫₀ᵗ∫ [k₁(z,s) b₁(z; w, w) + k₂(z,s) b₂(z; w, w) + Γ(z,s) g(x-z, t-s)] dz ds,
    w = u(x-z, t-s),
    k₁(z,s) = |z|/(4νs) K(z,2νs),   k₂(z,s) = K(z,2νs)/|z| - 3 M(|z|,νs)/(4π|z|⁴),

with M the Gaussian ball mass. These weights are the cascade's branch
densities multiplied out, so the oracle and the Monte Carlo estimator
target the same solution.

The field lives on a Cartesian box with linear interpolation in space and
time; outside the box it is replaced by the heat term. The time integral
uses Gauss-Jacobi nodes that absorb the s^(-1/2) singularity and the space
integral a log-radial × spherical product rule scaled by √(2νs).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import interpolate, special

from navier_cascade import quadrature
from navier_cascade.cascade import ProblemSpec
from navier_cascade.engine import SpaceTimePoint, grid_evaluate
from navier_cascade.errors import ContractionError, DomainError
from navier_cascade.fixtures import VelocityField
from navier_cascade.heat import ball_mass_array, heat_kernel_radial
from navier_cascade.models.config import OracleConfig
from navier_cascade.models.report import ComparisonPoint, ComparisonReport, PicardSweep
from navier_cascade.vecgeom import Mat3, Vec3, as_vec3, norm

logger = logging.getLogger(__name__)

# consecutive expanding sweeps tolerated before giving up
MAX_EXPANDING_SWEEPS = 3
TARGET_BATCH = 64


@dataclass
class FieldGrid:
    """Velocity samples on a symmetric box [-L, L]³ at time levels 0 = t_0 < ... < t_K"""

    axis: np.ndarray
    times: np.ndarray
    values: np.ndarray
    n_radial: int = 24
    n_time_quad: int = 6
    n_theta: int = 8
    n_phi: int = 16
    _interp: Optional[interpolate.RegularGridInterpolator] = field(default=None, repr=False)

    @classmethod
    def box(cls, half_width: float, n_space: int, t_max: float, n_time: int, **rules) -> "FieldGrid":
        axis = np.linspace(-half_width, half_width, n_space)
        times = np.linspace(0.0, t_max, n_time + 1)
        values = np.zeros((n_space, n_space, n_space, n_time + 1, 3))
        return cls(axis, times, values, **rules)

    @classmethod
    def from_config(cls, config: OracleConfig, refine: int = 1) -> "FieldGrid":
        """Grid from a config block; refine=2 halves the spatial spacing"""
        n_space = (config.n_space - 1) * refine + 1
        return cls.box(config.half_width, n_space, config.t_max, config.n_time,
                       n_radial=config.n_radial * refine, n_time_quad=config.n_time_quad * refine)

    @property
    def half_width(self) -> float:
        return float(self.axis[-1])

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape[:4]

    def nodes(self) -> np.ndarray:
        """Spatial nodes, (n³, 3), in C order of the value array"""
        g = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([c.ravel() for c in g], axis=1)

    def volume_weights(self) -> np.ndarray:
        """Trapezoid weights of the spatial nodes; they sum to (2L)³"""
        w = np.full(self.axis.size, self.axis[1] - self.axis[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return np.einsum("i,j,k->ijk", w, w, w).ravel()

    def with_values(self, values: np.ndarray) -> "FieldGrid":
        return FieldGrid(self.axis, self.times, values, self.n_radial, self.n_time_quad, self.n_theta, self.n_phi)

    def interpolate(self, points: np.ndarray, t: float, outside: Callable[[np.ndarray, float], np.ndarray]) -> np.ndarray:
        """Field at points and time t (0 <= t <= t_K); `outside` supplies values off the box"""
        if self._interp is None:
            self._interp = interpolate.RegularGridInterpolator(
                (self.axis, self.axis, self.axis, self.times), self.values
            )
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        out = np.empty_like(points)
        inside = np.all(np.abs(points) <= self.half_width, axis=1)
        if np.any(inside):
            query = np.column_stack([points[inside], np.full(int(inside.sum()), min(max(t, 0.0), self.times[-1]))])
            out[inside] = self._interp(query)
        if not np.all(inside):
            out[~inside] = outside(points[~inside], t)
        return out


def heat_by_quadrature(u0: VelocityField, x: Vec3, t: float, nu: float) -> Vec3:
    """∫ u₀(x-y) K(y, 2νt) dy by the partitioned 3-D rule"""
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    return np.asarray(u0.heat_quadrature(as_vec3(x), 2.0 * nu * t))


def _heat_term(spec: ProblemSpec, points: np.ndarray, t: float) -> np.ndarray:
    u0 = spec.data.u0
    if t <= 0.0:
        return u0.value(points)
    if u0.has_closed_heat:
        return u0.heat(points, 2.0 * spec.nu * t)
    return np.stack([u0.heat_quadrature(p, 2.0 * spec.nu * t) for p in points])


def _outside(spec: ProblemSpec) -> Callable[[np.ndarray, float], np.ndarray]:
    def fill(points: np.ndarray, t: float) -> np.ndarray:
        if spec.data.u0.has_closed_heat or t <= 0.0:
            return _heat_term(spec, points, t)
        return np.zeros_like(points)

    return fill


def _space_rule(grid: FieldGrid, variance: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes z and weights for ∫ f(z) dz, refined at z = 0 on the scale √variance"""
    sd = math.sqrt(variance)
    r_hi = max(8.0 * sd, 4.0 * grid.half_width)
    radii, w_rad = quadrature.log_radial_nodes(1e-3 * sd, r_hi, grid.n_radial)
    dirs, w_ang = quadrature.sphere_grid(grid.n_theta, grid.n_phi)
    z = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (w_rad[:, None] * radii[:, None] ** 2 * w_ang[None, :]).ravel()
    return z, weights


def apply_picard_map(grid: FieldGrid, spec: ProblemSpec, x: np.ndarray, t: float) -> np.ndarray:
    """One application of the integral map, reading the previous iterate from grid

    Args:
        grid: Field of the previous iterate
        spec: The problem (ν, u₀, g)
        x: Target points, (N, 3)
        t: Target time, 0 < t <= the grid's last level

    Returns:
        (N, 3) values of the mapped field
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    if not 0.0 < t <= grid.times[-1] * (1.0 + 1e-12):
        raise DomainError(f"target time {t} outside (0, {grid.times[-1]}]")
    nu = spec.nu
    outside = _outside(spec)
    forcing = spec.data.g
    result = _heat_term(spec, x, t)

    s_nodes, s_weights = quadrature.time_nodes(t, grid.n_time_quad)
    for s, ws in zip(s_nodes, s_weights):
        z, wz = _space_rule(grid, 2.0 * nu * s)
        r = np.sqrt(np.sum(z * z, axis=1))
        e = z / r[:, None]
        kern = heat_kernel_radial(r, 2.0 * nu * s)
        mass = ball_mass_array(r, nu * s)
        k1 = r / (4.0 * nu * s) * kern
        k2 = kern / r - 3.0 * mass / (4.0 * math.pi * r ** 4)
        far = mass / (4.0 * math.pi * r ** 3)

        for start in range(0, x.shape[0], TARGET_BATCH):
            xb = x[start:start + TARGET_BATCH]
            pts = (xb[:, None, :] - z[None, :, :]).reshape(-1, 3)
            w = grid.interpolate(pts, t - s, outside).reshape(xb.shape[0], z.shape[0], 3)
            we = np.einsum("nmi,mi->nm", w, e)
            perp = w - we[..., None] * e[None, :, :]
            bil1 = 2.0 * we[..., None] * perp
            scalar = np.einsum("nmi,nmi->nm", w, w) - 3.0 * we * we
            bil2 = bil1 + scalar[..., None] * e[None, :, :]
            integrand = (k1 * wz)[None, :, None] * bil1 + (k2 * wz)[None, :, None] * bil2
            if not forcing.is_zero:
                g = forcing.value(pts, t - s).reshape(w.shape)
                ge = np.einsum("nmi,mi->nm", g, e)
                gamma_g = kern[None, :, None] * (g - ge[..., None] * e) - far[None, :, None] * (g - 3.0 * ge[..., None] * e)
                integrand = integrand + wz[None, :, None] * gamma_g
            result[start:start + TARGET_BATCH] += ws * integrand.sum(axis=1)
    return result


def picard_solve(spec: ProblemSpec, grid: FieldGrid, iters: int) -> Tuple[FieldGrid, List[PicardSweep]]:
    """Jacobi sweeps u_k = Φ(u_(k-1)) from u_0 = heat term

    Raises:
        ContractionError: If sup|u_k - u_(k-1)| grows for three consecutive sweeps
    """
    if iters < 1:
        raise DomainError(f"iters must be >= 1, got {iters}")
    nodes = grid.nodes()
    n = grid.axis.size
    h = spec.pair.h(nodes)
    values = np.zeros_like(grid.values)
    for k, t in enumerate(grid.times):
        values[:, :, :, k, :] = _heat_term(spec, nodes, t).reshape(n, n, n, 3)
    current = grid.with_values(values)

    sweeps: List[PicardSweep] = []
    expanding = 0
    previous_change = None
    for sweep in range(1, iters + 1):
        updated = values.copy()
        for k, t in enumerate(grid.times):
            if k == 0:
                continue
            updated[:, :, :, k, :] = apply_picard_map(current, spec, nodes, t).reshape(n, n, n, 3)
        change = float(np.max(np.abs(updated - values)))
        ratio = None if not previous_change else change / previous_change
        expanding = expanding + 1 if ratio is not None and ratio > 1.0 else 0
        u_norm = np.sqrt(np.sum(updated[:, :, :, 1:, :] ** 2, axis=-1)).reshape(-1, len(grid.times) - 1)
        finite = np.isfinite(h) & (h > 0)
        over_h = float(np.max(u_norm[finite] / h[finite][:, None])) if np.any(finite) else 0.0
        sweeps.append(PicardSweep(sweep=sweep, sup_change=change, ratio=ratio, max_u_over_h=over_h))
        logger.info(f"Picard sweep {sweep}: sup change {change:.3e}, ratio {ratio}, max|u|/h {over_h:.4g}")
        if over_h > spec.epsilon:
            logger.warning(f"Picard iterate exceeds the a priori bound: max|u|/h={over_h:.4g} > ε={spec.epsilon}")
        values = updated
        current = grid.with_values(values)
        if expanding >= MAX_EXPANDING_SWEEPS:
            raise ContractionError(f"Picard iterates expanded for {expanding} consecutive sweeps (last ratio {ratio:.3g})")
        if change == 0.0:
            break
        previous_change = change
    return current, sweeps


def gamma_fourier(x: Vec3, s: float, nu: float) -> Mat3:
    """Γ(x,s) = (2π)^(-3) ∫ e^(iξ·x) e^(-νs|ξ|²) P_ξ dξ, the angular part done with spherical Bessel functions"""
    x = as_vec3(x)
    a = norm(x)
    if a == 0.0 or s <= 0 or nu <= 0:
        raise DomainError("gamma_fourier needs x != 0, s > 0 and ν > 0")
    e = x / a
    k_max = math.sqrt(60.0 / (nu * s))

    def radial(k: float, part: str) -> float:
        weight = k * k * math.exp(-nu * s * k * k)
        ka = k * a
        if part == "iso":
            if ka < 1e-8:
                return weight * (1.0 - 1.0 / 3.0)
            return weight * (special.spherical_jn(0, ka) - special.spherical_jn(1, ka) / ka)
        return weight * special.spherical_jn(2, ka)

    iso = quadrature.quad(lambda k: radial(k, "iso"), 0.0, k_max, limit=2000)
    aniso = quadrature.quad(lambda k: radial(k, "aniso"), 0.0, k_max, limit=2000)
    scale = 4.0 * math.pi / (2.0 * math.pi) ** 3
    return scale * (iso * np.eye(3) + aniso * np.outer(e, e))


def oracle_tolerance(spec: ProblemSpec, config: OracleConfig, points: Sequence[SpaceTimePoint]) -> Tuple[np.ndarray, float, List[PicardSweep]]:
    """Oracle values at points plus a grid-halving tolerance

    Returns:
        (values (N,3) on the refined grid, max |fine - coarse| over points and components, sweeps of the fine solve)
    """
    coarse, _ = picard_solve(spec, FieldGrid.from_config(config), config.sweeps)
    fine, sweeps = picard_solve(spec, FieldGrid.from_config(config, refine=2), config.sweeps)
    fine_values, coarse_values = [], []
    for x, t in points:
        fine_values.append(apply_picard_map(fine, spec, as_vec3(x)[None, :], t)[0])
        coarse_values.append(apply_picard_map(coarse, spec, as_vec3(x)[None, :], t)[0])
    fine_values = np.array(fine_values)
    tolerance = float(np.max(np.abs(fine_values - np.array(coarse_values))))
    logger.info(f"Oracle grid-halving tolerance {tolerance:.3e}")
    return fine_values, tolerance, sweeps


def compare_mc_oracle(
    points: Sequence[SpaceTimePoint],
    spec: ProblemSpec,
    n: int,
    seed: int,
    config: Optional[OracleConfig] = None,
    workers: int = 1,
) -> ComparisonReport:
    """Monte Carlo against Picard: |u_MC - u_oracle| <= 3 stderr + oracle tolerance per component"""
    config = config or OracleConfig(t_max=max(t for _, t in points))
    if max(t for _, t in points) > config.t_max:
        raise DomainError("oracle t_max must cover every check time")
    oracle_values, tolerance, sweeps = oracle_tolerance(spec, config, points)
    reports = grid_evaluate(points, spec, n, seed, workers)
    rows = []
    for (x, t), report, u_oracle in zip(points, reports, oracle_values):
        budget = 3.0 * np.asarray(report.stderr) + tolerance
        diff = np.abs(np.asarray(report.u) - u_oracle)
        rows.append(ComparisonPoint(
            x=report.x, t=t, u_mc=report.u, stderr_mc=report.stderr, u_oracle=u_oracle.tolist(),
            oracle_tolerance=tolerance, budget=budget.tolist(), passed=(diff <= budget).tolist(),
        ))
    passed = all(all(row.passed) for row in rows)
    return ComparisonReport(points=rows, sweeps=sweeps, oracle_tolerance=tolerance, passed=passed)
