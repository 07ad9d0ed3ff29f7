"""
The tree-indexed recursion behind u(x,t) = h(x) E[Ξ(t)].

Each node v, started at its parent's location X_v̄ with remaining time
t - S_v, draws a branch type κ, a jump pair (Y, Z) and a waiting time τ and
evaluates to

    d_v + 1[κ<=3, τ<=t-S_v] (11 m(X_v̄)/p) B_v(child values at t-S_v-τ)
        + 1[κ>=4, τ<=t-S_v] (4 m̃(X_v̄)/(1-p)) C_v φ(X_v, t-S_v-τ)

where X_v = X_v̄ - Z_v and d_v is m0(X_v̄, t-S_v) for Ξ or χ₀ at an
h-Brownian endpoint for Υ. Trees are walked with an explicit stack; every
node draws from its own stream, addressed by its path from the root.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from navier_cascade.errors import ConfigError, DataError, DomainError
from navier_cascade.fixtures import build_forcing, build_velocity
from navier_cascade.kernels import AdmissiblePair, KernelPair, build_kernel, check_admissibility, default_check_points
from navier_cascade.kernels.algebra import fit_to_hypotheses
from navier_cascade.models.config import AdmissibilityMode, CascadeMode, RunConfig
from navier_cascade.samplers import (
    TRAP,
    RngStream,
    sample_hbm_endpoint,
    sample_kappa,
    sample_waiting_time,
    sample_Y_given_Z,
)
from navier_cascade.vecgeom import Vec3, as_vec3, b1, b2, proj_perp, reflect

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_CAP = 10_000
# relative slack when comparing installed constants with the hypotheses
HYPOTHESIS_RTOL = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """Everything a cascade needs: ν, p, the kernel pair and the data"""

    nu: float
    p: float
    pair: KernelPair
    data: AdmissiblePair
    mode: CascadeMode = CascadeMode.XI

    def __post_init__(self):
        check_hypotheses(self)

    @property
    def epsilon(self) -> float:
        return self.data.epsilon

    @property
    def gamma_bound(self) -> float:
        return 8.0 * math.pi * self.nu * self.p / 11.0

    @property
    def gamma_tilde_bound(self) -> float:
        return 2.0 * math.pi * self.nu * (1.0 - self.p)


def check_hypotheses(spec: ProblemSpec) -> None:
    """Raise ConfigError naming the first hypothesis the problem violates"""
    if not spec.nu > 0:
        raise ConfigError(f"ν must be positive, got {spec.nu}", "ν > 0")
    if not 0.0 < spec.p <= 0.5:
        raise ConfigError(f"p must lie in (0,1/2], got {spec.p}", "p ∈ (0,1/2]")
    data = spec.data
    if not 0.0 <= data.alpha < 1.0:
        raise ConfigError(f"α must lie in [0,1), got {data.alpha}", "α ∈ [0,1)")
    if not 0.0 < data.epsilon <= 1.0 - data.alpha:
        raise ConfigError(f"ε={data.epsilon} with α={data.alpha}", "ε ∈ (0, 1-α]")
    if not 0.0 < data.beta <= 1.0 - data.alpha:
        raise ConfigError(f"β={data.beta} with α={data.alpha}", "β ∈ (0, 1-α]")
    pair = spec.pair
    if pair.gamma > spec.gamma_bound * (1.0 + HYPOTHESIS_RTOL):
        raise ConfigError(
            f"γ > 8πνp/11: γ={pair.gamma:.6g}, 8πνp/11={spec.gamma_bound:.6g} "
            f"(set rescale to fit the pair)",
            "γ ≤ 8πνp/11",
        )
    if pair.gamma_tilde > spec.gamma_tilde_bound * (1.0 + HYPOTHESIS_RTOL):
        raise ConfigError(
            f"γ̃ > 2πν(1-p): γ̃={pair.gamma_tilde:.6g}, 2πν(1-p)={spec.gamma_tilde_bound:.6g}",
            "γ̃ ≤ 2πν(1-p)",
        )
    if not data.g.is_zero and pair.forcing_free:
        raise ConfigError("forcing is nonzero but the pair has h̃ ≡ 0", "|g| ≤ βε h̃")
    if spec.mode == CascadeMode.UPSILON:
        if not pair.excessive:
            raise ConfigError(f"kernel pair {pair.name} is not excessive", "h excessive")
        if not pair.has_endpoint_sampler:
            raise ConfigError(f"kernel pair {pair.name} has no h-Brownian endpoint sampler", "h excessive")


def build_problem_spec(config: RunConfig, check_data: bool = True) -> ProblemSpec:
    """RunConfig -> ProblemSpec, fitting constants on request and checking the data

    Raises:
        ConfigError: On the first violated hypothesis
    """
    try:
        pair = build_kernel(config.kernel)
        if config.rescale:
            pair = fit_to_hypotheses(pair, config.nu, config.p)
        u0 = build_velocity(config.u0.fixture, config.u0.amplitude, config.u0.params)
        g = build_forcing(config.forcing.fixture, config.forcing.amplitude, config.forcing.params)
        data = AdmissiblePair(u0, g, config.alpha, config.beta, config.epsilon)
    except (DomainError, ValueError) as e:
        raise ConfigError(str(e))
    spec = ProblemSpec(config.nu, config.p, pair, data, config.mode)
    logger.info(f"Problem: {pair!r}, ν={config.nu}, p={config.p}, mode={config.mode.value}")

    if check_data:
        mode = config.admissibility_mode
        if mode in (AdmissibilityMode.HEAT, AdmissibilityMode.STANDARD) and not u0.has_closed_heat:
            logger.warning(f"Skipping the {mode.value} data check: {u0.name} has no closed-form heat convolution")
            return spec
        report = check_admissibility(data, pair, mode, default_check_points(), nu=config.nu)
        if not report.passed:
            if report.u_ratio > report.u_bound or mode == AdmissibilityMode.STANDARD:
                raise ConfigError(f"velocity ratio {report.u_ratio:.6g} against bound {report.u_bound:.6g} "
                                  f"({report.caveat})", VELOCITY_HYPOTHESES[mode])
            raise ConfigError(f"forcing ratio {report.g_ratio:.6g} exceeds {report.g_bound:.6g} "
                              f"({report.caveat})", "sup|g|/h̃ ≤ βε")
    return spec


VELOCITY_HYPOTHESES = {
    AdmissibilityMode.POINTWISE: "sup|u₀|/h ≤ αε",
    AdmissibilityMode.HEAT: "sup|u₀∗K|/h ≤ αε",
    AdmissibilityMode.BOUNDED_HEAT: "sup|u₀|/h ≤ αε/M",
    AdmissibilityMode.STANDARD: "|u₀∗K| < πνh/11 and |g| < (πν)²h̃/11",
}


@dataclass(frozen=True)
class NodeEnsemble:
    """The random quantities one node drew"""

    path: Tuple[int, ...]
    origin: Vec3
    X: Vec3
    Y: Vec3
    Z: Vec3
    tau: float
    kappa: int
    S: float
    depth: int


@dataclass
class CascadeOutcome:
    value: Vec3
    nodes: int
    max_depth: int
    truncated: bool
    ensembles: Optional[List[NodeEnsemble]] = None


# --- Node terms -------------------------------------------------------------------

def m0(x: Vec3, t: float, spec: ProblemSpec) -> Vec3:
    """∫ u₀(x-y) K(y, 2νt) dy / h(x); zero where h is infinite"""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    hx = spec.pair.h_at(x)
    if not math.isfinite(hx):
        return np.zeros(3)
    if hx <= 0.0:
        raise DomainError("h must be strictly positive")
    return np.asarray(spec.data.u0_heat(x, 2.0 * spec.nu * t), dtype=np.float64) / hx


def chi0(y, spec: ProblemSpec) -> Vec3:
    """u₀(y)/h(y), with χ₀(TRAP) = 0"""
    if y is TRAP:
        return np.zeros(3)
    hy = spec.pair.h_at(y)
    if not math.isfinite(hy):
        return np.zeros(3)
    return spec.data.u0.value_at(y) / hy


def apply_B(kappa: int, z: Vec3, a: Vec3, b: Vec3) -> Vec3:
    """b1 for κ=1, +b2/2 for κ=2, -b2/2 for κ=3"""
    if kappa == 1:
        return b1(z, a, b)
    if kappa == 2:
        return 0.5 * b2(z, a, b)
    if kappa == 3:
        return -0.5 * b2(z, a, b)
    raise DomainError(f"B is defined for κ ∈ {{1,2,3}}, got {kappa}")


def apply_C(kappa: int, z: Vec3, phi: Vec3) -> Vec3:
    """P_z φ for κ=4, -(I - 3 e_z e_z^t) φ / 2 for κ=5"""
    if kappa == 4:
        return proj_perp(z, phi)
    if kappa == 5:
        return -0.5 * reflect(z, phi)
    raise DomainError(f"C is defined for κ ∈ {{4,5}}, got {kappa}")


def forcing_ratio(x: Vec3, s: float, spec: ProblemSpec, path: Tuple[int, ...]) -> Vec3:
    """φ = g(x,s)/h̃(x), with φ = 0 where both vanish"""
    g = spec.data.g.value_at(x, s)
    h_tilde = spec.pair.h_tilde_at(x)
    if h_tilde == 0.0:
        if np.any(g != 0.0):
            raise DataError("g is nonzero where h̃ vanishes (data not admissible)", path)
        return np.zeros(3)
    if not math.isfinite(h_tilde):
        return np.zeros(3)
    return g / h_tilde


# --- Evaluation -------------------------------------------------------------------

class _Frame:
    __slots__ = ("path", "origin", "t_rem", "depth", "S", "parent", "slot", "data", "kappa", "z",
                 "children")

    def __init__(self, path, origin, t_rem, depth, S, parent, slot):
        self.path = path
        self.origin = origin
        self.t_rem = t_rem
        self.depth = depth
        self.S = S
        self.parent = parent
        self.slot = slot
        self.data = None
        self.kappa = None
        self.z = None
        self.children = None


def _data_term(frame: _Frame, spec: ProblemSpec, mode: CascadeMode, rng: np.random.Generator) -> Vec3:
    if mode == CascadeMode.XI:
        return m0(frame.origin, frame.t_rem, spec)
    if frame.t_rem <= 0.0:
        return chi0(frame.origin, spec)
    endpoint = sample_hbm_endpoint(frame.origin, frame.t_rem, spec.pair, spec.nu, rng)
    return chi0(endpoint, spec)


def evaluate_cascade(
    x: Vec3,
    t: float,
    spec: ProblemSpec,
    stream: RngStream,
    depth_cap: int = DEFAULT_DEPTH_CAP,
    mode: Optional[CascadeMode] = None,
    record: bool = False,
    right_first: bool = False,
) -> CascadeOutcome:
    """Evaluate one cascade rooted at (x, t)

    Args:
        x, t: Root point and time
        spec: The problem: ν, p, kernel pair and data
        stream: Root stream; node v draws from stream.path + path(v)
        depth_cap: Nodes at this depth keep only their data term. The outcome is truncated
            only if such a node would have branched or added a forcing term
        mode: Ξ or Υ; defaults to spec.mode
        record: Keep a NodeEnsemble for every node that drew
        right_first: Walk the second child before the first

    Raises:
        DataError: If a node meets inadmissible data or a non-finite value
    """
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    mode = spec.mode if mode is None else CascadeMode(mode)
    if mode == CascadeMode.UPSILON and not spec.pair.excessive:
        raise DomainError(f"Υ needs an excessive pair; {spec.pair.name} is not")
    pair, nu, p = spec.pair, spec.nu, spec.p
    ensembles: Optional[List[NodeEnsemble]] = [] if record else None

    root = _Frame((), as_vec3(x), float(t), 0, 0.0, None, 0)
    stack = [root]
    result = None
    nodes = 0
    max_depth = 0
    truncated = False

    def finish(frame: _Frame, value: Vec3) -> None:
        nonlocal result
        if not np.all(np.isfinite(value)):
            raise DataError("non-finite node value", frame.path)
        stack.pop()
        if frame.parent is None:
            result = value
        else:
            frame.parent.children[frame.slot] = value

    while stack:
        frame = stack[-1]
        if frame.children is not None:
            m, _ = pair.multipliers(nu, frame.origin)
            left, right = frame.children
            finish(frame, frame.data + (11.0 * m / p) * apply_B(frame.kappa, frame.z, left, right))
            continue

        nodes += 1
        max_depth = max(max_depth, frame.depth)
        rng = RngStream(stream.seed, stream.path + frame.path).generator()
        try:
            frame.data = _data_term(frame, spec, mode, rng)
            kappa = sample_kappa(p, rng)
            if kappa >= 4 and pair.forcing_free:
                # m̃ = 0: the forcing leaf adds nothing to its data term
                finish(frame, frame.data)
                continue
            if kappa <= 3:
                z = pair.sample_z_bilinear(frame.origin, rng)
            else:
                z = pair.sample_z_forcing(frame.origin, rng)
            y = sample_Y_given_Z(z, rng)
            tau = sample_waiting_time(kappa, y, z, nu, rng)
            position = frame.origin - z
            if ensembles is not None:
                ensembles.append(NodeEnsemble(frame.path, frame.origin, position, y, z, tau, kappa,
                                              frame.S, frame.depth))

            if tau > frame.t_rem:
                finish(frame, frame.data)
            elif frame.depth >= depth_cap:
                # the B or C increment of this node is dropped
                truncated = True
                finish(frame, frame.data)
            elif kappa >= 4:
                _, m_tilde = pair.multipliers(nu, frame.origin)
                phi = forcing_ratio(position, frame.t_rem - tau, spec, frame.path)
                finish(frame, frame.data + (4.0 * m_tilde / (1.0 - p)) * apply_C(kappa, z, phi))
            else:
                frame.kappa, frame.z = kappa, z
                frame.children = [None, None]
                t_child = frame.t_rem - tau
                kids = [
                    _Frame(frame.path + (i,), position, t_child, frame.depth + 1, frame.S + tau, frame, i)
                    for i in (0, 1)
                ]
                stack.extend(kids if right_first else kids[::-1])
        except DataError as e:
            if not e.node_path:
                raise DataError(e.message, frame.path, e.cascade_index)
            raise

    return CascadeOutcome(result, nodes, max_depth, truncated, ensembles)


def eval_Xi(x: Vec3, t: float, spec: ProblemSpec, stream: RngStream,
            depth_cap: int = DEFAULT_DEPTH_CAP, record: bool = False) -> CascadeOutcome:
    """One draw of Ξ(t) at x"""
    return evaluate_cascade(x, t, spec, stream, depth_cap, CascadeMode.XI, record)


def eval_Upsilon(x: Vec3, t: float, spec: ProblemSpec, stream: RngStream,
                 depth_cap: int = DEFAULT_DEPTH_CAP, record: bool = False) -> CascadeOutcome:
    """One draw of Υ(t) at x; the pair must be excessive"""
    if not spec.pair.excessive:
        raise DomainError(f"Υ needs an excessive pair; {spec.pair.name} is not")
    return evaluate_cascade(x, t, spec, stream, depth_cap, CascadeMode.UPSILON, record)
