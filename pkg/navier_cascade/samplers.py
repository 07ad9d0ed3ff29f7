"""
Exact samplers for the cascade's random ingredients.

Randomness is addressed, not streamed: every tree node owns an ``RngStream``
(master seed, cascade key, node path) that expands through ``SeedSequence``
into a Philox generator. Two nodes never share draws and a node's draws do
not depend on the order in which the tree is explored.
"""
import hashlib
import logging
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from navier_cascade.errors import DomainError, SamplerHealthError
from navier_cascade.vecgeom import Vec3, norm, orthonormal_frame

if TYPE_CHECKING:
    from navier_cascade.kernels.base import KernelPair

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Rejection samplers must accept at least MIN_ACCEPTANCE_RATE of their proposals,
# counted over consecutive windows of HEALTH_WINDOW proposals.
HEALTH_WINDOW = 10_000
MIN_ACCEPTANCE_RATE = 1e-3
PROPOSAL_BATCH = 32


class Branch(str, Enum):
    BILINEAR = "bilinear"
    FORCING = "forcing"


class _Trap:
    """The cemetery state θ of the h-Brownian motion"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TRAP"

    def __reduce__(self):
        return (_Trap, ())


TRAP = _Trap()


def stream_seed(master_seed: int, *keys: int) -> int:
    """Fold a master seed and integer keys into a 64-bit stream seed"""
    digest = hashlib.blake2b(digest_size=8)
    digest.update(struct.pack("<Q", master_seed & 0xFFFFFFFFFFFFFFFF))
    for key in keys:
        digest.update(struct.pack("<Q", key & 0xFFFFFFFFFFFFFFFF))
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Address of a random stream: a 64-bit seed plus a tree-node path"""

    seed: int
    path: Tuple[int, ...] = field(default_factory=tuple)

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.path + (index,))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))


# --- Branch type and waiting times ---------------------------------------------

def kappa_probabilities(p: float) -> np.ndarray:
    if not 0.0 < p <= 0.5:
        raise DomainError(f"branch probability must satisfy p ∈ (0,1/2], got {p}")
    q = 0.5 * (1.0 - p)
    return np.array([p / 11.0, 4.0 * p / 11.0, 6.0 * p / 11.0, q, q])


def sample_kappa(p: float, rng: np.random.Generator) -> int:
    """Draw the branch type κ ∈ {1,...,5}; {κ <= 3} has probability exactly p"""
    if not 0.0 < p <= 0.5:
        raise DomainError(f"branch probability must satisfy p ∈ (0,1/2], got {p}")
    u = rng.random()
    if u < p:
        # κ ∈ {1,2,3} split 1:4:6 inside the branching event
        v = u * 11.0 / p
        return 1 if v < 1.0 else (2 if v < 5.0 else 3)
    return 4 if u < p + 0.5 * (1.0 - p) else 5


def sample_tau1(a: float, nu: float, rng: np.random.Generator) -> float:
    """Waiting time with density (4πν)^(-1/2) a s^(-3/2) exp(-a²/4νs)

    s = a²/(4νW) with W ~ Gamma(1/2), drawn as N²/2.
    """
    n = rng.standard_normal()
    w = 0.5 * n * n
    if w == 0.0:
        return math.inf
    return a * a / (4.0 * nu * w)


def sample_tau0(a: float, nu: float, rng: np.random.Generator) -> float:
    """Waiting time with density a³ s^(-5/2) exp(-a²/4νs) / (4√π ν^(3/2))

    s = a²/(4νG) with G ~ Gamma(3/2), drawn as N²/2 + Exp(1).
    """
    n = rng.standard_normal()
    g = 0.5 * n * n + rng.standard_exponential()
    return a * a / (4.0 * nu * g)


def sample_tau0_first_passage(a: float, nu: float, rng: np.random.Generator) -> float:
    """The same law as sample_tau0, built as (Σ 1/T_i)^(-1) over three first-passage times"""
    inverse = 0.0
    for _ in range(3):
        t = sample_tau1(a, nu, rng)
        inverse += 0.0 if math.isinf(t) else 1.0 / t
    return math.inf if inverse == 0.0 else 1.0 / inverse


def sample_waiting_time(kappa: int, y: Vec3, z: Vec3, nu: float, rng: np.random.Generator) -> float:
    """τ given the branch type: f₀(·|Z) for κ=1, f₁(·|Z) for κ∈{2,4}, f₁(·|Y) for κ∈{3,5}"""
    if kappa == 1:
        return sample_tau0(norm(z), nu, rng)
    if kappa in (2, 4):
        return sample_tau1(norm(z), nu, rng)
    if kappa in (3, 5):
        return sample_tau1(norm(y), nu, rng)
    raise DomainError(f"κ must lie in {{1,...,5}}, got {kappa}")


# --- Directions and spatial pairs ---------------------------------------------

def uniform_direction(rng: np.random.Generator) -> Vec3:
    while True:
        v = rng.standard_normal(3)
        r = norm(v)
        if r > 1e-12:
            return v / r


def uniform_directions(rng: np.random.Generator, k: int) -> np.ndarray:
    v = rng.standard_normal((k, 3))
    r = np.sqrt(np.sum(v * v, axis=1))
    r = np.where(r > 1e-12, r, 1.0)
    return v / r[:, None]


def sample_Y_given_Z(z: Vec3, rng: np.random.Generator) -> Vec3:
    """Y with density |y|^(-1) 1[|y| < |z|] / (2π|z|²)"""
    r = norm(z)
    if r < 1e-300:
        raise DomainError("Y | Z is undefined at Z = 0")
    return r * math.sqrt(rng.random()) * uniform_direction(rng)


def sample_Z(x: Vec3, pair: "KernelPair", branch: Branch, rng: np.random.Generator) -> Vec3:
    """Draw Z from the bilinear marginal ∝ |z|^(-2) h²(x-z) or the forcing marginal ∝ |z|^(-1) h̃(x-z)"""
    if branch == Branch.BILINEAR:
        return pair.sample_z_bilinear(x, rng)
    if branch == Branch.FORCING:
        return pair.sample_z_forcing(x, rng)
    raise DomainError(f"unknown branch {branch}")


def sample_hbm_endpoint(x: Vec3, t: float, pair: "KernelPair", nu: float, rng: np.random.Generator):
    """Endpoint of the h-Brownian motion started at x after time t, or TRAP

    Raises:
        DomainError: If the pair is not excessive or h(x) is infinite
    """
    if not pair.excessive:
        raise DomainError(f"kernel pair {pair.name} is not excessive; h-Brownian motion is undefined")
    if t <= 0:
        raise DomainError(f"endpoint time must be positive, got {t}")
    if not math.isfinite(pair.h_at(x)):
        raise DomainError("h-Brownian motion cannot start where h is infinite")
    y = pair.sample_endpoint(x, 2.0 * nu * t, rng)
    return TRAP if y is None else y


def direction_about(axis: Vec3, cos_theta: float, rng: np.random.Generator) -> Vec3:
    """Unit vector at polar cosine cos_theta from axis, uniform azimuth"""
    cos_theta = min(max(cos_theta, -1.0), 1.0)
    sin_theta = math.sqrt(max(0.0, 1.0 - cos_theta * cos_theta))
    phi = 2.0 * math.pi * rng.random()
    local = np.array([sin_theta * math.cos(phi), sin_theta * math.sin(phi), cos_theta])
    return orthonormal_frame(axis) @ local


def sample_inverse_distance_direction(rel: Vec3, r: float, rng: np.random.Generator) -> Vec3:
    """Point w with |w| = r and direction density ∝ |rel - w|^(-1) on the sphere

    |rel - w| turns out uniform on [|a-r|, a+r], a = |rel|, which inverts
    to the polar cosine directly.
    """
    a = norm(rel)
    if a < 1e-300 or r == 0.0:
        return r * uniform_direction(rng)
    lo, hi = abs(a - r), a + r
    s = lo + (hi - lo) * rng.random()
    cos_theta = (a * a + r * r - s * s) / (2.0 * a * r)
    return r * direction_about(rel, cos_theta, rng)


def sample_vmf_cosine(kappa: float, rng: np.random.Generator) -> float:
    """Polar cosine of a von Mises-Fisher draw on S² with concentration kappa"""
    u = rng.random()
    if kappa < 1e-10:
        return 2.0 * u - 1.0
    return 1.0 + math.log1p((1.0 - u) * math.expm1(-2.0 * kappa)) / kappa


def sample_inverse_distance_endpoint(rel: Vec3, variance: float, rng: np.random.Generator) -> Optional[Vec3]:
    """Endpoint law ∝ |y|^(-1) K(rel - y, variance), None on the trap event

    The radius is a 1-D Brownian motion started at |rel| and killed at 0:
    propose a + √v N, trap when it is negative or when the bridge crosses
    zero (probability exp(-2ar/v)). The direction given the radius is von
    Mises-Fisher about rel with concentration a r / v.
    """
    a = norm(rel)
    sd = math.sqrt(variance)
    r = a + sd * rng.standard_normal()
    if r <= 0.0:
        return None
    if rng.random() < math.exp(-2.0 * a * r / variance):
        return None
    cos_theta = sample_vmf_cosine(a * r / variance, rng)
    return r * direction_about(rel, cos_theta, rng)


# --- Rejection envelopes ---------------------------------------------------------

@dataclass(frozen=True)
class PowerLawPiece:
    """Radial envelope coef·|w|^power on lo <= |w| < hi around a center

    The mass is taken in R³ volume measure, 4π coef ∫ r^(power+2) dr.
    """

    lo: float
    hi: float
    coef: float
    power: float

    @property
    def _m(self) -> float:
        return self.power + 3.0

    def mass(self) -> float:
        m = self._m
        if abs(m) < 1e-12:
            return 4.0 * math.pi * self.coef * math.log(self.hi / self.lo)
        hi_m = 0.0 if math.isinf(self.hi) else self.hi ** m
        lo_m = 0.0 if self.lo == 0.0 else self.lo ** m
        return 4.0 * math.pi * self.coef * (hi_m - lo_m) / m

    def sample_radius(self, u: np.ndarray) -> np.ndarray:
        m = self._m
        if abs(m) < 1e-12:
            return self.lo * (self.hi / self.lo) ** u
        hi_m = 0.0 if math.isinf(self.hi) else self.hi ** m
        lo_m = 0.0 if self.lo == 0.0 else self.lo ** m
        return (lo_m + u * (hi_m - lo_m)) ** (1.0 / m)

    def value(self, r: np.ndarray) -> np.ndarray:
        inside = (r >= self.lo) & (r < self.hi)
        safe = np.where(inside & (r > 0), r, 1.0)
        return np.where(inside, self.coef * safe ** self.power, 0.0)


@dataclass(frozen=True)
class RadialBounds:
    """Majorants of a radially non-increasing profile: rho(r) <= min(B, A/r, C r^(-q))

    Attributes:
        B: sup of the profile (inf for singular kernels)
        A: coefficient of the 1/r bound
        C, q: coefficient and power (q >= 1) of the tail bound
        scale: length below which the tail bound is not used at the origin
    """

    B: float
    A: float
    C: float
    q: float
    scale: float = 1.0

    def square_pieces(self, lo: float, hi: float, factor: float = 1.0) -> List[PowerLawPiece]:
        """Pieces of factor·min(B², A² r^-2, C² r^-2q) on [lo, hi)"""
        laws = []
        if math.isfinite(self.B):
            laws.append((self.B ** 2, 0.0))
        if self.q > 1.0:
            laws.append((self.A ** 2, -2.0))
            laws.append((self.C ** 2, -2.0 * self.q))
        else:
            laws.append((min(self.A, self.C) ** 2, -2.0))
        cuts = {lo, hi}
        for i, (ci, pi) in enumerate(laws):
            for cj, pj in laws[i + 1:]:
                # ci r^pi = cj r^pj
                r = (cj / ci) ** (1.0 / (pi - pj))
                if lo < r < hi:
                    cuts.add(r)
        edges = sorted(cuts)
        pieces = []
        for left, right in zip(edges[:-1], edges[1:]):
            mid = 0.5 * right if left == 0.0 else (2.0 * left if math.isinf(right) else math.sqrt(left * right))
            coef, power = min(laws, key=lambda law: law[0] * mid ** law[1])
            pieces.append(PowerLawPiece(left, right, factor * coef, power))
        return pieces


class AcceptanceMonitor:
    """Proposal and acceptance counts of one rejection sampler over consecutive windows

    Counts carry over between draws, so a sampler that accepts rarely but
    regularly is caught as well as one that stops accepting.
    """

    def __init__(self, label: str, window: int = HEALTH_WINDOW, min_rate: float = MIN_ACCEPTANCE_RATE):
        self.label = label
        self.window = window
        self.min_rate = min_rate
        self.proposed = 0
        self.accepted = 0

    def record(self, proposed: int, accepted: int) -> None:
        """Add a batch; raise SamplerHealthError when a full window falls below min_rate"""
        self.proposed += proposed
        self.accepted += accepted
        if self.proposed < self.window:
            return
        proposed, accepted = self.proposed, self.accepted
        self.proposed = self.accepted = 0
        if accepted < self.min_rate * proposed:
            raise SamplerHealthError(
                f"{self.label}: {accepted} acceptances in {proposed} proposals, below the "
                f"{self.min_rate:g} floor; the envelope does not match the target"
            )


_MONITORS: Dict[str, AcceptanceMonitor] = {}


def acceptance_monitor(label: str) -> AcceptanceMonitor:
    """The per-process monitor shared by every rejection sampler with this label"""
    if label not in _MONITORS:
        _MONITORS[label] = AcceptanceMonitor(label)
    return _MONITORS[label]


def rejection_loop(propose: Callable[[], T], accept: Callable[[T], bool], label: str) -> T:
    """Draw single proposals until one is accepted, reporting each to the label's monitor"""
    monitor = acceptance_monitor(label)
    while True:
        candidate = propose()
        if accept(candidate):
            monitor.record(1, 1)
            return candidate
        monitor.record(1, 0)


class EnvelopeSampler:
    """Rejection sampler for a 3-D density known up to a constant

    The envelope is a finite mixture of PowerLawPieces, each centered at
    some point. Proposals are drawn in fixed-size batches so that the
    consumed random numbers depend only on the generator state.
    """

    def __init__(
        self,
        components: Sequence[Tuple[Vec3, PowerLawPiece]],
        target: Callable[[np.ndarray], np.ndarray],
        label: str = "envelope",
    ):
        self.centers = np.array([c for c, _ in components], dtype=np.float64).reshape(-1, 3)
        self.pieces = [piece for _, piece in components]
        masses = np.array([piece.mass() for piece in self.pieces])
        if not np.all(np.isfinite(masses)) or masses.sum() <= 0.0:
            raise SamplerHealthError(f"{label}: envelope mass is not finite and positive ({masses})")
        self.weights = masses / masses.sum()
        self.total_mass = float(masses.sum())
        self.target = target
        self.label = label

    def envelope(self, z: np.ndarray) -> np.ndarray:
        total = np.zeros(z.shape[0])
        for center, piece in zip(self.centers, self.pieces):
            r = np.sqrt(np.sum((z - center) ** 2, axis=1))
            total += piece.value(r)
        return total

    def propose(self, rng: np.random.Generator, k: int) -> np.ndarray:
        which = rng.choice(len(self.pieces), size=k, p=self.weights)
        u = rng.random(k)
        dirs = uniform_directions(rng, k)
        radii = np.empty(k)
        for j in np.unique(which):
            mask = which == j
            radii[mask] = self.pieces[j].sample_radius(u[mask])
        return self.centers[which] + radii[:, None] * dirs

    def sample(self, rng: np.random.Generator) -> Vec3:
        monitor = acceptance_monitor(self.label)
        while True:
            z = self.propose(rng, PROPOSAL_BATCH)
            accept_u = rng.random(PROPOSAL_BATCH)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = self.target(z) / self.envelope(z)
            ratio = np.where(np.isfinite(ratio), ratio, 0.0)
            hits = np.flatnonzero(accept_u < ratio)
            if hits.size:
                # proposals after the first hit are discarded, not rejected
                monitor.record(int(hits[0]) + 1, 1)
                return z[hits[0]].copy()
            monitor.record(PROPOSAL_BATCH, 0)


def three_part_envelope(
    x: Vec3,
    profile: Callable[[np.ndarray], np.ndarray],
    bounds: RadialBounds,
) -> EnvelopeSampler:
    """Envelope sampler for the density ∝ |z|^(-2) rho(|x-z|)² of a radial kernel

    Regions, with a = |x| and Ro = max(2a, scale):
      |z| < Ro:        rho(a/2)² |z|^-2 (inverse-square cap around 0; off the
                       ball around x, |x-z| >= a/2)
      |x-z| < a/2:     (2/a)² min(B², A²r^-2, C²r^-2q), r = |x-z| (cap around x)
      |z| >= Ro:       C² c^-2q |z|^(-2-2q), since |x-z| >= c|z| with c = 1 - a/Ro
    """
    a = norm(x)

    def target(z: np.ndarray) -> np.ndarray:
        rz2 = np.sum(z * z, axis=1)
        rho = profile(np.sqrt(np.sum((x - z) ** 2, axis=1)))
        return rho * rho / rz2

    origin = np.zeros(3)
    if a < 1e-300:
        if not math.isfinite(bounds.B):
            raise DomainError("bilinear Z law is not normalizable at a singular point of h")
        ro = max(bounds.scale, (bounds.C / bounds.B) ** (1.0 / bounds.q))
        comps = [
            (origin, PowerLawPiece(0.0, ro, bounds.B ** 2, -2.0)),
            (origin, PowerLawPiece(ro, math.inf, bounds.C ** 2, -2.0 - 2.0 * bounds.q)),
        ]
        return EnvelopeSampler(comps, target, label="bilinear Z at origin")

    half = 0.5 * a
    ro = max(2.0 * a, bounds.scale)
    c = 1.0 - a / ro
    cap = float(profile(np.array([half]))[0]) ** 2
    comps = [(origin, PowerLawPiece(0.0, ro, cap, -2.0))]
    comps += [(x, piece) for piece in bounds.square_pieces(0.0, half, factor=1.0 / (half * half))]
    comps.append((origin, PowerLawPiece(ro, math.inf, bounds.C ** 2 * c ** (-2.0 * bounds.q), -2.0 - 2.0 * bounds.q)))
    return EnvelopeSampler(comps, target, label="bilinear Z")
