"""
Verification suites: geometry, heat, kernels, samplers, cascade, oracle.

Every check returns a CheckResult carrying the observed statistic and the
requirement it was held to; the CLI exits non-zero when any check fails.
Statistical checks use the 1% level.
"""
import logging
import math
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from navier_cascade import quadrature
from navier_cascade.cascade import ProblemSpec, build_problem_spec, evaluate_cascade
from navier_cascade.engine import grid_evaluate
from navier_cascade.heat import ball_mass, gamma_kernel, heat_kernel
from navier_cascade.kernels import KernelPair, default_check_points, make_h0_pair, make_H_pair
from navier_cascade.kernels.profiles import BallProfile
from navier_cascade.models.config import CascadeMode, OracleConfig, RunConfig
from navier_cascade.models.report import CheckResult
from navier_cascade.oracle import FieldGrid, compare_mc_oracle, gamma_fourier, heat_by_quadrature, picard_solve
from navier_cascade.samplers import (
    kappa_probabilities,
    RngStream,
    sample_hbm_endpoint,
    sample_kappa,
    sample_tau0,
    sample_tau0_first_passage,
    sample_tau1,
    stream_seed,
    TRAP,
)
from navier_cascade.vecgeom import b1, b2, norm, projection_matrix, reflect, reflection_matrix

logger = logging.getLogger(__name__)

LEVEL = 0.01

_SMALL_DATA: Dict[str, Any] = {
    "nu": 1.0,
    "p": 0.5,
    "epsilon": 0.2,
    "alpha": 0.5,
    "beta": 0.5,
    "kernel": {"type": "h0", "params": {"forcing_profile": {"type": "ball", "radius": 1.0}}},
    "u0": {"fixture": "gaussian_vortex", "amplitude": 0.004, "params": {"sigma": 1.0}},
    "forcing": {"fixture": "ball_vortex", "amplitude": 0.0007, "params": {"radius": 1.0}},
    "rescale": True,
    "n": 2000,
    "seed": 7,
    "oracle": {"half_width": 3.0, "n_space": 7, "n_time": 2, "t_max": 0.5, "sweeps": 4, "n_radial": 16, "n_time_quad": 4},
}

# Configs the suites run against; configs/*.json ship the same blocks
REFERENCE_CONFIGS: Dict[str, Dict[str, Any]] = {
    "small_data": _SMALL_DATA,
    "upsilon_small_data": {**_SMALL_DATA, "mode": "upsilon"},
    "zero_data": {
        "nu": 1.0,
        "p": 0.5,
        "epsilon": 0.2,
        "kernel": {"type": "h0"},
        "rescale": True,
        "n": 1000,
        "seed": 0,
    },
    "linear_regime": {
        "nu": 1.0,
        "p": 0.5,
        "epsilon": 0.5,
        "alpha": 0.5,
        "beta": 0.5,
        "kernel": {"type": "h0"},
        "u0": {"fixture": "gaussian_vortex", "amplitude": 0.01, "params": {"sigma": 1.0}},
        "rescale": True,
        "n": 100_000,
        "seed": 11,
    },
}

CHECK_POINTS: List[Tuple[List[float], float]] = [
    ([1.0, 0.0, 0.0], 0.5),
    ([0.0, 1.5, 0.0], 0.25),
    ([0.7, 0.7, 0.3], 0.5),
    ([-1.2, 0.4, 0.5], 0.4),
    ([0.5, -0.5, 1.0], 0.3),
]


def reference_config(name: str, **overrides: Any) -> RunConfig:
    return RunConfig(**{**REFERENCE_CONFIGS[name], **overrides})


def reference_spec(name: str, **overrides: Any) -> ProblemSpec:
    return build_problem_spec(reference_config(name, **overrides))


def _result(suite: str, name: str, passed: bool, observed: float, required: str, **detail: Any) -> CheckResult:
    result = CheckResult(suite=suite, name=name, passed=bool(passed), observed=float(observed),
                         required=required, detail=detail)
    log = logger.info if result.passed else logger.warning
    log(f"[{suite}] {name}: {'ok' if result.passed else 'FAILED'} observed={observed:.6g} required {required}")
    return result


def _generator(seed: int, *keys: int) -> np.random.Generator:
    return RngStream(stream_seed(seed, *keys)).generator()


# --- Binned laws ------------------------------------------------------------------

def bin_masses(pdf: Callable[[float], float], edges: Sequence[float], singular: Sequence[float] = ()) -> np.ndarray:
    """∫ pdf over [edges_i, edges_(i+1)] for each bin"""
    return np.array([quadrature.quad(pdf, lo, hi, points=list(singular)) for lo, hi in zip(edges[:-1], edges[1:])])


def histogram_rows(sampler: str, samples: np.ndarray, edges: np.ndarray, masses: np.ndarray,
                   extra: Optional[Tuple[str, int, float]] = None) -> List[Tuple[str, float, float, int, float]]:
    """(sampler, bin_lo, bin_hi, count, expected) rows; `extra` adds a labelled point-mass bin"""
    n = samples.size + (extra[1] if extra else 0)
    index = np.searchsorted(edges, samples, side="right") - 1
    index = index[(index >= 0) & (index < edges.size - 1)]
    counts = np.bincount(index, minlength=edges.size - 1)
    rows = [(sampler, float(lo), float(hi), int(c), float(n * m))
            for lo, hi, c, m in zip(edges[:-1], edges[1:], counts, masses)]
    if extra is not None:
        label, count, mass = extra
        rows.append((f"{sampler}:{label}", math.nan, math.nan, int(count), float(n * mass)))
    return rows


def chi_square(rows: Sequence[Tuple[str, float, float, int, float]]) -> float:
    """p-value of the histogram against its expected counts, bins below 5 expected merged"""
    observed, expected = [], []
    acc_o, acc_e = 0, 0.0
    for _, _, _, count, exp in rows:
        acc_o += count
        acc_e += exp
        if acc_e >= 5.0:
            observed.append(acc_o)
            expected.append(acc_e)
            acc_o, acc_e = 0, 0.0
    if acc_e > 0 and expected:
        observed[-1] += acc_o
        expected[-1] += acc_e
    observed = np.array(observed, dtype=np.float64)
    expected = np.array(expected)
    expected *= observed.sum() / expected.sum()
    return float(stats.chisquare(observed, expected).pvalue)


def tau1_cdf(s: np.ndarray, a: float, nu: float) -> np.ndarray:
    return special.erfc(a / (2.0 * np.sqrt(nu * np.asarray(s))))


def tau0_cdf(s: np.ndarray, a: float, nu: float) -> np.ndarray:
    return special.gammaincc(1.5, a * a / (4.0 * nu * np.asarray(s)))


def z_bilinear_radial_pdf(r: float, a: float) -> float:
    """Density of |Z| for the h₀ bilinear marginal ∝ |z|^(-2)|x-z|^(-2), a = |x|"""
    if r <= 0.0 or r == a:
        return 0.0
    return 2.0 / (math.pi ** 2 * r) * math.log((a + r) / abs(a - r))


def z_forcing_radial_pdf(r: float, a: float, radius: float) -> float:
    """Density of |Z| for the h₀ forcing marginal with a ball profile, ∝ |z|^(-1) 1[|x-z| <= R]"""
    if r <= 0.0:
        return 0.0
    c = min(max((a * a + r * r - radius * radius) / (2.0 * a * r), -1.0), 1.0)
    return 2.0 * math.pi * r * (1.0 - c) / BallProfile(radius).newton_potential(a)


def endpoint_radial_pdf(r: float, a: float, variance: float) -> float:
    """Density of |Y| for the h₀ endpoint law: a 1-D Brownian motion killed at 0"""
    sd = math.sqrt(variance)
    return float(stats.norm.pdf(r, a, sd) - stats.norm.pdf(r, -a, sd))


def sampler_histograms(n: int, seed: int) -> List[Tuple[str, float, float, int, float]]:
    """Histogram rows of every exact sampler against its quadrature bin masses"""
    rows: List[Tuple[str, float, float, int, float]] = []
    a, nu = 1.0, 1.0

    rng = _generator(seed, 1)
    edges = np.concatenate([[0.0], np.geomspace(0.02, 50.0, 16), [math.inf]])
    samples = np.array([sample_tau1(a, nu, rng) for _ in range(n)])
    masses = np.diff(np.concatenate([[0.0], tau1_cdf(edges[1:-1], a, nu), [1.0]]))
    rows += histogram_rows("tau1", samples, edges, masses)

    rng = _generator(seed, 2)
    samples = np.array([sample_tau0(a, nu, rng) for _ in range(n)])
    masses = np.diff(np.concatenate([[0.0], tau0_cdf(edges[1:-1], a, nu), [1.0]]))
    rows += histogram_rows("tau0", samples, edges, masses)

    pair = make_h0_pair(BallProfile(1.0))
    x = np.array([a, 0.0, 0.0])
    rng = _generator(seed, 3)
    samples = np.array([norm(pair.sample_z_bilinear(x, rng)) for _ in range(n)])
    edges = np.concatenate([[0.0], np.geomspace(0.05, 20.0, 15), [math.inf]])
    masses = bin_masses(lambda r: z_bilinear_radial_pdf(r, a), edges, singular=[a])
    rows += histogram_rows("z_bilinear", samples, edges, masses)

    x_far = np.array([2.0, 0.0, 0.0])
    rng = _generator(seed, 4)
    samples = np.array([norm(pair.sample_z_forcing(x_far, rng)) for _ in range(n)])
    edges = np.linspace(1.0, 3.0, 11)
    masses = bin_masses(lambda r: z_forcing_radial_pdf(r, 2.0, 1.0), edges)
    rows += histogram_rows("z_forcing", samples, edges, masses)

    # |x| = √(2νt): the trap carries 1 - erf(1/√2)
    t = 0.5
    rng = _generator(seed, 5)
    draws = [sample_hbm_endpoint(x, t, pair, nu, rng) for _ in range(n)]
    alive = np.array([norm(y) for y in draws if y is not TRAP])
    edges = np.concatenate([np.linspace(0.0, 4.0, 17), [math.inf]])
    variance = 2.0 * nu * t
    masses = bin_masses(lambda r: endpoint_radial_pdf(r, a, variance), edges)
    trap_mass = float(special.erfc(a / math.sqrt(2.0 * variance)))
    rows += histogram_rows("endpoint", alive, edges, masses, extra=("trap", n - alive.size, trap_mass))
    return rows


# --- Suites -------------------------------------------------------------------------

def suite_geometry(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    n = n or 1_000_000
    rng = _generator(seed, 10)
    scales = 10.0 ** rng.uniform(-6, 6, size=(n, 3))
    y = rng.standard_normal((n, 3)) * scales[:, :1]
    u = rng.standard_normal((n, 3)) * scales[:, 1:2]
    v = rng.standard_normal((n, 3)) * scales[:, 2:]
    slack = 1.0 + 1e-12
    worst_b1 = worst_b2 = worst_reflect = 0.0
    for k in range(n):
        uv = norm(u[k]) * norm(v[k])
        if uv == 0.0:
            continue
        worst_b1 = max(worst_b1, norm(b1(y[k], u[k], v[k])) / uv)
        worst_b2 = max(worst_b2, norm(b2(y[k], u[k], v[k])) / (2.0 * uv))
        worst_reflect = max(worst_reflect, norm(reflect(y[k], u[k])) / (2.0 * norm(u[k])))

    results = [
        _result("geometry", "b1_bound", worst_b1 <= slack, worst_b1, "max |b1|/(|u||v|) <= 1", samples=n),
        _result("geometry", "b2_bound", worst_b2 <= slack, worst_b2, "max |b2|/(2|u||v|) <= 1", samples=n),
        _result("geometry", "reflect_bound", worst_reflect <= slack, worst_reflect, "max |reflect(u)|/(2|u|) <= 1",
                samples=n),
    ]
    errors = []
    for k in range(min(n, 1000)):
        p = projection_matrix(y[k])
        r = reflection_matrix(y[k])
        errors.append(max(np.max(np.abs(p @ p - p)), np.max(np.abs(p - p.T)), np.max(np.abs(r @ r.T - np.eye(3)))))
    worst = float(max(errors))
    results.append(_result("geometry", "projector_identities", worst <= 1e-12, worst, "<= 1e-12"))
    return results


def suite_heat(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    rng = _generator(seed, 20)
    nu = 1.0
    trace_err = 0.0
    for _ in range(n or 200):
        x = rng.standard_normal(3) * 10.0 ** rng.uniform(-1, 1)
        s = 10.0 ** rng.uniform(-2, 1)
        gamma = gamma_kernel(x, s, nu)
        trace_err = max(trace_err, abs(np.trace(gamma) - 2.0 * heat_kernel(x, 2.0 * nu * s)) / np.abs(gamma).max())
    results = [_result("heat", "gamma_trace", trace_err <= 1e-12, trace_err, "|tr Γ - 2K| / max|Γ| <= 1e-12")]

    fourier_err = 0.0
    for x, s in [((0.5, 0.0, 0.0), 0.1), ((1.0, 1.0, 0.0), 0.5), ((0.3, -0.2, 0.9), 0.25),
                 ((2.0, 0.5, -1.0), 1.0), ((0.1, 0.1, 0.1), 0.05)]:
        direct = gamma_kernel(np.array(x), s, nu)
        fourier = gamma_fourier(np.array(x), s, nu)
        fourier_err = max(fourier_err, float(np.linalg.norm(direct - fourier) / np.linalg.norm(direct)))
    results.append(_result("heat", "gamma_fourier", fourier_err <= 0.02, fourier_err, "relative Frobenius <= 0.02"))

    masses = [ball_mass(r, 0.25) for r in (0.0, 1e-4, 0.5, 1.0, 3.0, 50.0)]
    monotone = all(b >= a for a, b in zip(masses, masses[1:])) and masses[0] == 0.0 and abs(masses[-1] - 1.0) < 1e-12
    results.append(_result("heat", "ball_mass_range", monotone, masses[-1], "0 at r=0, nondecreasing, 1 at ∞"))

    pair = make_h0_pair()
    worst_ratio, worst_gap = 0.0, 0.0
    for x in default_check_points(n_shells=5, r_lo=0.1, r_hi=10.0, n_dirs=4):
        for t in (0.05, 1.0):
            variance = 2.0 * nu * t
            closed = pair.heat_convolution(x, variance)
            numeric = pair.heat_convolution_quadrature(x, variance)
            worst_gap = max(worst_gap, abs(closed - numeric) / closed)
            worst_ratio = max(worst_ratio, closed / pair.h_at(x))
    results.append(_result("heat", "h0_excessive", worst_ratio <= 1.0, worst_ratio, "∫h₀K/h₀ <= 1"))
    results.append(_result("heat", "h0_heat_closed_form", worst_gap <= 1e-6, worst_gap, "relative gap <= 1e-6"))
    return results


def _constant_check(pair: KernelPair, constant: float, label: str, check_points: np.ndarray) -> CheckResult:
    worst = 0.0
    for x in check_points:
        ratio = pair.square_potential_quadrature(x) / pair.h_at(x)
        worst = max(worst, abs(ratio / constant - 1.0))
    return _result("kernels", label, worst <= 0.005, worst, "relative gap to the constant <= 0.5%")


def suite_kernels(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    check_points = default_check_points(n_shells=5, r_lo=0.1, r_hi=10.0, n_dirs=4)
    results = [
        _constant_check(make_h0_pair(), math.pi ** 3, "h0_square_constant", check_points),
        _constant_check(make_H_pair(), math.pi ** 2, "H_square_constant", check_points),
    ]
    pair = make_h0_pair(BallProfile(1.0))
    worst = 0.0
    for x in check_points[::4]:
        closed = pair.newton_potential(x)
        numeric = pair.newton_potential_quadrature(x)
        worst = max(worst, abs(closed - numeric) / closed)
    results.append(_result("kernels", "ball_newton_potential", worst <= 5e-3, worst, "relative gap <= 5e-3"))
    return results


def suite_samplers(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    n = n or 100_000
    a, nu = 1.0, 1.0
    results = []

    rng = _generator(seed, 30)
    tau1 = np.array([sample_tau1(a, nu, rng) for _ in range(n)])
    ks = stats.kstest(tau1, lambda s: tau1_cdf(s, a, nu))
    results.append(_result("samplers", "tau1_ks", ks.pvalue > LEVEL, ks.statistic, f"KS p > {LEVEL}",
                           pvalue=float(ks.pvalue)))

    rng = _generator(seed, 31)
    tau0 = np.array([sample_tau0(a, nu, rng) for _ in range(n)])
    ks = stats.kstest(tau0, lambda s: tau0_cdf(s, a, nu))
    results.append(_result("samplers", "tau0_ks", ks.pvalue > LEVEL, ks.statistic, f"KS p > {LEVEL}",
                           pvalue=float(ks.pvalue)))

    rng = _generator(seed, 32)
    passage = np.array([sample_tau0_first_passage(a, nu, rng) for _ in range(n)])
    ks = stats.ks_2samp(tau0, passage)
    results.append(_result("samplers", "tau0_first_passage", ks.pvalue > LEVEL, ks.statistic,
                           f"two-sample KS p > {LEVEL}", pvalue=float(ks.pvalue)))

    rng = _generator(seed, 33)
    p = 0.5
    counts = np.bincount([sample_kappa(p, rng) for _ in range(n)], minlength=6)[1:]
    pvalue = float(stats.chisquare(counts, n * kappa_probabilities(p)).pvalue)
    results.append(_result("samplers", "kappa_law", pvalue > LEVEL, pvalue, f"chi-square p > {LEVEL}"))

    rows = sampler_histograms(n, seed)
    by_sampler: Dict[str, list] = {}
    for row in rows:
        by_sampler.setdefault(row[0].split(":")[0], []).append(row)
    for name in ("z_bilinear", "z_forcing", "endpoint"):
        pvalue = chi_square(by_sampler[name])
        results.append(_result("samplers", f"{name}_chi_square", pvalue > LEVEL, pvalue, f"chi-square p > {LEVEL}"))

    trap_row = [r for r in by_sampler["endpoint"] if r[0].endswith(":trap")][0]
    freq = trap_row[3] / n
    expected = 1.0 - float(special.erf(1.0 / math.sqrt(2.0)))
    sigma = math.sqrt(expected * (1.0 - expected) / n)
    results.append(_result("samplers", "trap_frequency", abs(freq - expected) <= 3.0 * sigma, freq,
                           f"{expected:.6f} ± {3.0 * sigma:.2e}"))
    return results


def _cascade_values(spec: ProblemSpec, x, t: float, n: int, seed: int, record: bool = False, **kwargs):
    outcomes = []
    for i in range(n):
        outcomes.append(evaluate_cascade(np.asarray(x, dtype=np.float64), t, spec,
                                         RngStream(stream_seed(seed, 99, i)), record=record, **kwargs))
    return outcomes


def suite_cascade(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    n = n or 100_000
    results = []
    x, t = CHECK_POINTS[0]

    for name in ("small_data", "upsilon_small_data"):
        spec = reference_spec(name)
        outcomes = _cascade_values(spec, x, t, n, seed)
        worst = max(norm(o.value) for o in outcomes)
        exceed = sum(norm(o.value) > spec.epsilon for o in outcomes)
        results.append(_result("cascade", f"contraction_{spec.mode.value}", exceed == 0, worst,
                               f"max |value| <= ε = {spec.epsilon}", exceedances=exceed))

    spec = reference_spec("small_data")
    outcomes = _cascade_values(spec, x, t, min(n, 2000), seed, record=True)
    kappas = np.array([e.kappa for o in outcomes for e in o.ensembles])
    freq = float(np.mean(kappas <= 3))
    sigma = math.sqrt(spec.p * (1.0 - spec.p) / kappas.size)
    results.append(_result("cascade", "branch_frequency", abs(freq - spec.p) <= 3.0 * sigma, freq,
                           f"{spec.p} ± {3.0 * sigma:.2e}", nodes=int(kappas.size)))

    # long horizon: waiting times almost never end a branch early
    quarter = reference_spec("zero_data", p=0.25)
    sizes = np.array([o.nodes for o in _cascade_values(quarter, x, 1e8, n, seed)])
    mean = float(sizes.mean())
    sigma = float(sizes.std(ddof=1)) / math.sqrt(n)
    results.append(_result("cascade", "tree_size_p_quarter", abs(mean - 2.0) <= 3.0 * sigma, mean,
                           f"2 ± {3.0 * sigma:.3g}"))

    reports_xi = grid_evaluate(CHECK_POINTS[:3], spec, n, seed, workers, mode=CascadeMode.XI)
    reports_up = grid_evaluate(CHECK_POINTS[:3], spec, n, seed + 1, workers, mode=CascadeMode.UPSILON)
    truncated = max(r.truncated_fraction for r in reports_xi + reports_up)
    results.append(_result("cascade", "truncated_fraction", truncated < 1e-3, truncated, "< 1e-3"))
    worst = 0.0
    for r_xi, r_up in zip(reports_xi, reports_up):
        budget = 3.0 * np.hypot(r_xi.stderr, r_up.stderr)
        gap = np.abs(np.subtract(r_xi.u, r_up.u))
        worst = max(worst, float(np.max(gap / np.maximum(budget, 1e-300))))
    results.append(_result("cascade", "xi_upsilon_agreement", worst <= 1.0, worst, "|u_Ξ - u_Υ| / 3σ <= 1"))

    results.append(linear_regime_check(n, seed, workers))
    return results


def linear_regime_check(n: int, seed: int, workers: int) -> CheckResult:
    """u_MC ≈ u₀∗K up to O(δ²h) with a fitted constant that holds across δ"""
    constants = []
    check_points = CHECK_POINTS
    for delta in (1e-2, 1e-3):
        spec = reference_spec("linear_regime", u0={"fixture": "gaussian_vortex", "amplitude": delta,
                                                   "params": {"sigma": 1.0}})
        reports = grid_evaluate(check_points, spec, n, seed, workers)
        c = 0.0
        for (x, t), report in zip(check_points, reports):
            heat = spec.data.u0.heat_at(np.asarray(x, dtype=np.float64), 2.0 * spec.nu * t)
            excess = np.abs(np.subtract(report.u, heat)) - 3.0 * np.asarray(report.stderr)
            c = max(c, float(np.max(excess)) / (delta ** 2 * report.h))
        constants.append(max(c, 0.0))
    fitted = constants[0]
    passed = constants[1] <= 2.0 * fitted or constants[1] == 0.0
    return _result("cascade", "linear_regime", passed, constants[1], f"C(δ=1e-3) <= 2 C(δ=1e-2) = {2 * fitted:.3g}",
                   constants=constants)


def suite_oracle(n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    n = n or 20_000
    results = []
    zero = reference_spec("zero_data")
    grid = FieldGrid.from_config(OracleConfig(n_space=5, n_time=2, t_max=0.5, n_radial=8, n_time_quad=3))
    field, sweeps = picard_solve(zero, grid, 2)
    worst = float(np.max(np.abs(field.values)))
    results.append(_result("oracle", "zero_fixed_point", worst == 0.0 and sweeps[0].sup_change == 0.0, worst, "== 0"))

    spec = reference_spec("small_data")
    x = np.array([0.8, -0.3, 0.4])
    closed = spec.data.u0.heat_at(x, 2.0 * spec.nu * 0.5)
    numeric = heat_by_quadrature(spec.data.u0, x, 0.5, spec.nu)
    gap = float(np.linalg.norm(closed - numeric) / np.linalg.norm(closed))
    results.append(_result("oracle", "heat_quadrature", gap <= 1e-5, gap, "relative gap <= 1e-5"))

    config = reference_config("small_data")
    report = compare_mc_oracle(CHECK_POINTS, spec, n, seed, config.oracle, workers)
    worst = max(float(np.max(np.abs(np.subtract(p.u_mc, p.u_oracle)) / np.asarray(p.budget))) for p in report.points)
    results.append(_result("oracle", "mc_vs_picard", report.passed, worst, "|u_MC - u_Picard| / budget <= 1",
                           oracle_tolerance=report.oracle_tolerance))
    return results


SUITE_MAP: Dict[str, Callable[..., List[CheckResult]]] = {
    "geometry": suite_geometry,
    "heat": suite_heat,
    "kernels": suite_kernels,
    "samplers": suite_samplers,
    "cascade": suite_cascade,
    "oracle": suite_oracle,
}


def run_suites(names: Iterable[str], n: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[CheckResult]:
    """Run the named suites in order; "all" expands to every suite"""
    selected: List[str] = []
    for name in names:
        if name == "all":
            selected.extend(SUITE_MAP)
        elif name in SUITE_MAP:
            selected.append(name)
        else:
            raise ValueError(f"Unknown suite: {name} (expected one of {sorted(SUITE_MAP)} or all)")
    results: List[CheckResult] = []
    for name in dict.fromkeys(selected):
        logger.info(f"Running suite {name}")
        results.extend(SUITE_MAP[name](n, seed, workers))
    return results
