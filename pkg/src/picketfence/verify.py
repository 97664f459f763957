"""Property suite behind ``picketfence verify``.

Each check returns a :class:`Check` with the measured discrepancy and the
tolerance it was held to.  ``tol_scale`` multiplies every tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectrum
from .chain import absorb, chain_init, exact_log_squared_singular_values
from .ensemble import GINIBRE, INF, FrequencyMeasure, alpha
from .moments import MomentQuery, contour_moment, mc_moment, residue_moment_m1, variance_m2
from .sampler import RngStream, sample_factors

TEST_MEASURES = (
    GINIBRE,
    FrequencyMeasure({3: 0.5}, 0.5),
    FrequencyMeasure({1: 1.0}),
    FrequencyMeasure({2: 0.25, 7: 0.25}, 0.5),
    FrequencyMeasure({1: 0.5, 4: 0.5}),
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    discrepancy: float
    tolerance: float


def _check(name, discrepancy, tolerance):
    return Check(name, bool(discrepancy <= tolerance), float(discrepancy), float(tolerance))


def brute_force_series(measure, n, K=10**6):
    """Partial sums over k < K of the lambda, c(n), alpha and Laplace series."""
    k = np.arange(1, K, dtype=float)
    w = np.full(K - 1, float(measure.weight_at_infinity))
    for p, a in measure.atoms.items():
        w[: min(p, K - 1)] += float(a)
    log_term = np.log1p(-1.0 / (k + n))
    lam = np.array([-np.sum(w * (log_term + 1.0 / (k + n - i))) for i in range(1, n + 1)])
    c = np.sum(w / (k + n - 1) ** 2)
    alp = np.sum(w * (1.0 / k + log_term))
    lap = np.array([np.sum(w * (1.0 / k - 1.0 / (k + n - i))) for i in range(1, n + 1)])
    return lam, c, alp, lap


def check_tail_vs_bruteforce(tol_scale=1.0):
    worst = 0.0
    for measure in TEST_MEASURES:
        for n in (1, 2, 3, 5):
            lam, c, alp, lap = brute_force_series(measure, n)
            worst = max(
                worst,
                np.max(np.abs(spectrum.lyapunov_exponents(measure, n) - lam)),
                abs(spectrum.c_of_n(measure, n) - c),
                abs(alpha(measure, n) - alp),
                max(abs(spectrum.laplace_identity_value(measure, n, i) - lap[i - 1])
                    for i in range(1, n + 1)),
            )
    return _check("tail_vs_bruteforce", worst, 1e-5 * tol_scale)


def check_laplace_identity(tol_scale=1.0, n_max=50):
    worst = 0.0
    for measure in TEST_MEASURES:
        for n in range(1, n_max + 1):
            lam = spectrum.lyapunov_exponents(measure, n)
            a = alpha(measure, n)
            for i in range(1, n + 1):
                worst = max(worst, abs(lam[i - 1] + a - spectrum.laplace_identity_value(measure, n, i)))
    return _check("laplace_identity", worst, 1e-9 * tol_scale)


def check_epsilon_bound(tol_scale=1.0):
    """|(lambda_i - lambda_1) + (i-1) c(n)| <= ((i-1)^2/(n-i+1)) c(n) + 1e-12, all i <= n."""
    worst = -math.inf
    for measure in TEST_MEASURES:
        for n in (10, 100, 1000, 10000):
            c = spectrum.c_of_n(measure, n)
            gaps = spectrum.exponent_gaps(measure, n)
            i = np.arange(1, n + 1)
            excess = np.abs(gaps + (i - 1) * c) - (i - 1) ** 2 / (n - i + 1) * c
            worst = max(worst, float(np.max(excess)))
    return _check("epsilon_bound", max(worst, 0.0), 1e-12 * tol_scale)


def check_determinant_identity(seed=0, tol_scale=1.0, chains=10, T_max=2000):
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for j in range(chains):
        n = int(rng.integers(1, 9))
        T = int(rng.integers(1, T_max + 1))
        entries = [INF if rng.random() < 0.5 else n + int(rng.integers(1, 6)) for _ in range(T)]
        factors = sample_factors(entries, n, RngStream(seed, 1000 + j).generator())
        state = absorb(chain_init(n), factors, entries)
        logdet = 2.0 * math.fsum(np.linalg.slogdet(factors)[1])
        worst = max(worst, abs(2.0 * math.fsum(state.log_scales) - logdet))
    return _check("determinant_identity", worst, 1e-6 * tol_scale)


def check_exact_path(seed=0, tol_scale=1.0):
    rng = RngStream(seed, 2000).generator()
    worst = 0.0
    for n, T in ((1, 3), (2, 5), (3, 4)):
        factors = sample_factors([INF] * T, n, rng)
        prod = np.eye(n)
        for X in factors:
            prod = X @ prod
        direct = np.sort(2 * np.log(np.linalg.svd(prod, compute_uv=False)))[::-1]
        worst = max(worst, np.max(np.abs(exact_log_squared_singular_values(factors) - direct)))
    return _check("exact_path_vs_direct_svd", worst, 1e-8 * tol_scale)


MOMENT_CASES = (
    (1, (2,), 1.0),
    (2, (INF, 5, INF, 5), 0.3),
    (3, (INF, 5), 0.5),
    (2, (INF,), 0.25),
)


def check_moments(seed=0, tol_scale=1.0, trials=20000):
    """Residue vs quadrature (absolute, 1e-8) and residue vs Monte Carlo (in SEs, 4)."""
    quad_worst = 0.0
    mc_worst = 0.0
    for j, (n, prefix, c) in enumerate(MOMENT_CASES):
        q = MomentQuery(n, prefix, c)
        r = residue_moment_m1(q).value
        quad_worst = max(quad_worst, abs(contour_moment(q).value - r))
        mc = mc_moment(q, trials, seed + j)
        mc_worst = max(mc_worst, abs(mc.value - r) / mc.error_estimate)
    return [
        _check("moments_residue_vs_quadrature", quad_worst, 1e-8 * tol_scale),
        _check("moments_residue_vs_montecarlo_se", mc_worst, 4.0 * tol_scale),
    ]


def check_variance_decay(tol_scale=1.0):
    """Largest ratio Var(T_{j+1}) / Var(T_j) over T = 10, 100, 1000; must stay below 1."""
    vals = [variance_m2(1, (INF,), 1.0, T).value for T in (10, 100, 1000)]
    ratio = max(b / a for a, b in zip(vals, vals[1:]))
    tol = 1.0 * tol_scale
    return Check("variance_decay", bool(ratio < tol), float(ratio), tol)


def run_all(seed=0, tol_scale=1.0):
    checks = [
        check_tail_vs_bruteforce(tol_scale),
        check_laplace_identity(tol_scale),
        check_epsilon_bound(tol_scale),
        check_determinant_identity(seed, tol_scale),
        check_exact_path(seed, tol_scale),
    ]
    checks += check_moments(seed, tol_scale)
    checks.append(check_variance_decay(tol_scale))
    return checks
