"""Moments of sum_j (y_j e^{S})^c, with S = sum_tau s_n(L_tau), three ways.

* :func:`residue_moment_m1` sums the residues of the single contour
  integral at u = -c - l + 1, l = 1..n (exact);
* :func:`contour_moment` and :func:`variance_m2` integrate the single and
  double contour integrals with the trapezoidal rule on circles;
* :func:`mc_moment` / :func:`mc_variance` sample the matrix product.

The per-factor integrand is F_L(u) = prod_{k=1}^{L-n} e^{c/k} (u+c-k)/(u-k)
for finite L and, for Ginibre factors, its L -> inf limit
e^{c gamma} Gamma(1-u) / Gamma(1-u-c).
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import loggamma

from .chain import EXACT_MAX_T, exact_log_squared_singular_values
from .ensemble import INF, _validate_entry, shift_total
from .sampler import RngStream, sample_factors
from .special import EULER_GAMMA, harmonic

M2_MAX_C = 0.35
MC_CHUNK = 4096
_LOGGAMMA_FROM = 256


class ContourInfeasibleError(ValueError):
    """No admissible contour in the fixed circular family for these parameters."""


@dataclass(frozen=True)
class MomentQuery:
    """E[prod_i sum_j (y_j e^{S})^{c_i}] for the product of ``prefix`` factors.

    ``c`` is a single exponent (m = 1) or a pair (m = 2).  With
    ``shifted=False`` the e^{S} normalisation is dropped.
    """

    n: int
    prefix: tuple
    c: Union[float, tuple]
    shifted: bool = True

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "prefix", tuple(_validate_entry(e, self.n) for e in self.prefix))
        cs = self.exponents
        if len(cs) not in (1, 2):
            raise ValueError("only m = 1 and m = 2 are supported")
        if not all(ci > 0 for ci in cs):
            raise ValueError(f"exponents must be positive, got {cs}")

    @property
    def exponents(self) -> tuple:
        return tuple(self.c) if isinstance(self.c, (tuple, list)) else (float(self.c),)

    @property
    def m(self) -> int:
        return len(self.exponents)

    @property
    def T(self) -> int:
        return len(self.prefix)


@dataclass(frozen=True)
class MomentResult:
    value: float
    method: str
    error_estimate: float


# ---------------------------------------------------------------------------
# per-factor functions


def infinite_factor(u, c):
    """prod_{k>=1} e^{c/k} (u+c-k)/(u-k) = e^{c gamma} Gamma(1-u) / Gamma(1-u-c)."""
    u = np.asarray(u, dtype=complex)
    if np.any((u.imag == 0) & (u.real >= 1) & (u.real == np.round(u.real))):
        raise ValueError("infinite_factor has poles at the positive integers")
    out = np.exp(c * EULER_GAMMA + loggamma(1 - u) - loggamma(1 - u - c))
    return out if out.ndim else complex(out)


def truncated_infinite_product(u, c, K=10**6):
    """The same product computed directly over k < K, plus a tail correction.

    log of the remaining factors is -c(2u+c)/2 * sum_{k>=K} 1/k^2 + O(K^-2).
    """
    u = complex(u)
    k = np.arange(1, K, dtype=float)
    with np.errstate(divide="ignore"):
        # a factor u + c - k = 0 makes the whole product 0
        logs = c / k + np.log1p(c / (u - k))
    tail = -c * (2 * u + c) / 2 * (1.0 / (K - 0.5))
    return complex(np.exp(np.sum(logs) + tail))


def _log_factor(u, c, n, L):
    """log F_L(u) (any branch), vectorised over complex u."""
    if L == INF:
        return c * EULER_GAMMA + loggamma(1 - u) - loggamma(1 - u - c)
    M = L - n
    if M > _LOGGAMMA_FROM:
        # prod_{k=1}^M (k-u-c)/(k-u)
        return (
            c * harmonic(M)
            + loggamma(M + 1 - u - c) - loggamma(1 - u - c)
            + loggamma(1 - u) - loggamma(M + 1 - u)
        )
    k = np.arange(1, M + 1, dtype=float)
    u = np.asarray(u, dtype=complex)[..., None]
    return np.sum(c / k + np.log(u + c - k) - np.log(u - k), axis=-1)


def _log_integrand(u, c, n, counts):
    """log of prod_l (u+l-1)/(u+c+l-1) * prod_tau F_{L_tau}(u)."""
    ell = np.arange(1, n + 1, dtype=float)
    uu = np.asarray(u, dtype=complex)[..., None]
    with np.errstate(divide="ignore"):  # a node may land on a zero u = 1 - l
        out = np.sum(np.log(uu + ell - 1) - np.log(uu + c + ell - 1), axis=-1)
    for L, cnt in counts.items():
        out = out + cnt * _log_factor(u, c, n, L)
    return out


def _residue_log_factor(ell, c, n, L):
    """log F_L(-c-l+1), real and finite for c > 0."""
    if L == INF:
        return c * EULER_GAMMA + math.lgamma(c + ell) - math.lgamma(ell)
    k = np.arange(1, L - n + 1, dtype=float)
    return math.fsum(c / k + np.log(k + ell - 1) - np.log(k + ell - 1 + c))


# ---------------------------------------------------------------------------
# residues


def residue_moment_m1(query: MomentQuery) -> MomentResult:
    """Exact first moment from the residues at u = -c - l + 1."""
    if query.m != 1:
        raise ValueError("residue expansion is implemented for m = 1 only")
    (c,) = query.exponents
    n = query.n
    counts = Counter(query.prefix)
    terms = []
    for ell in range(1, n + 1):
        coef = 1.0
        for h in range(1, n + 1):
            if h != ell:
                coef *= (h - ell - c) / (h - ell)
        if coef == 0.0:
            terms.append(0.0)
            continue
        logF = math.fsum(cnt * _residue_log_factor(ell, c, n, L) for L, cnt in counts.items())
        terms.append(coef * math.exp(logF))
    value = math.fsum(terms)
    if not query.shifted:
        value *= math.exp(-c * shift_total(n, query.prefix))
    scale = math.fsum(abs(t) for t in terms) or abs(value)
    return MomentResult(value, "residue", float(8 * n * np.finfo(float).eps * scale))


# ---------------------------------------------------------------------------
# contour quadrature


def contour_center(c, n):
    return -c - (n - 1) / 2.0


def default_radii(n, m):
    base = (n - 1) / 2.0
    return (base + 0.5,) if m == 1 else (base + 0.25, base + 0.6)


def check_contours(c, n, radii):
    """Raise ContourInfeasibleError unless the circles satisfy every constraint."""
    x0 = contour_center(c, n)
    inner = (n - 1) / 2.0
    for r in radii:
        if not r > inner:
            raise ContourInfeasibleError(
                f"radius {r} does not enclose the poles -c-l+1 (needs r > {inner})"
            )
        if not x0 + r < 1:
            raise ContourInfeasibleError(
                f"radius {r} reaches the excluded poles at u >= 1 (needs r < {1 - x0})"
            )
    if len(radii) == 2 and not radii[1] - radii[0] > c:
        raise ContourInfeasibleError(
            f"nesting constraint violated: r2 - r1 = {radii[1] - radii[0]:.6g} must exceed c = {c}"
            f" (c < {M2_MAX_C} with the default radii)"
        )


def _nodes(x0, r, N):
    z = np.exp(2j * np.pi * np.arange(N) / N)
    return x0 + r * z, r * z  # points, (u - x0) = du / (i dtheta)


def _finish(value, err, method):
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"quadrature returned a complex value {value}")
    return MomentResult(float(value.real), method, float(err))


def _single_integral(c, n, counts, r, N):
    x0 = contour_center(c, n)
    u, w = _nodes(x0, r, N)
    return np.mean(np.exp(_log_integrand(u, c, n, counts)) * w)


def _double_integral(c, n, counts, radii, N, kernel):
    x0 = contour_center(c, n)
    u1, w1 = _nodes(x0, radii[0], N)
    u2, w2 = _nodes(x0, radii[1], N)
    f1 = np.exp(_log_integrand(u1, c, n, counts)) * w1
    f2 = np.exp(_log_integrand(u2, c, n, counts)) * w2
    K = kernel(u2[:, None] - u1[None, :])
    return f2 @ K @ f1 / (N * N)


def _refine(evaluate, nodes, cap, tol=1e-10):
    N = max(4, int(nodes))
    prev = evaluate(N)
    while True:
        N *= 2
        cur = evaluate(N)
        err = abs(cur - prev)
        if err < tol * max(1.0, abs(cur)) or N >= cap:
            return cur, err
        prev = cur


def _second_moment_kernel(c):
    def kernel(d):
        return d * d / ((d - c) * (d + c))

    return kernel


def _variance_kernel(c):
    def kernel(d):
        return 1.0 / (d * d - c * c)

    return kernel


def contour_moment(query: MomentQuery, nodes: int = 512, radii=None) -> MomentResult:
    """Trapezoidal evaluation of the contour integral for m = 1 or m = 2.

    Node count doubles from ``nodes`` until successive values agree to 1e-10
    (cap 2^14 nodes for m = 1, 2^11 per circle for m = 2).
    """
    cs = query.exponents
    n = query.n
    counts = Counter(query.prefix)
    if query.m == 1:
        (c,) = cs
        radii = tuple(radii) if radii is not None else default_radii(n, 1)
        check_contours(c, n, radii)
        value, err = _refine(lambda N: _single_integral(c, n, counts, radii[0], N), nodes, 2**14)
        value, err = -value / c, err / c
    else:
        c, c2 = cs
        if c != c2:
            raise ValueError("m = 2 quadrature needs equal exponents")
        radii = tuple(radii) if radii is not None else default_radii(n, 2)
        check_contours(c, n, radii)
        kern = _second_moment_kernel(c)
        value, err = _refine(
            lambda N: _double_integral(c, n, counts, radii, N, kern), min(nodes, 256), 2**11
        )
        value, err = value / c**2, err / c**2
    if not query.shifted:
        factor = math.exp(-sum(cs) * shift_total(n, query.prefix))
        value, err = value * factor, err * factor
    return _finish(value, err, "quadrature")


def _cycled_counts(prefix, T):
    prefix = list(prefix)
    full, rest = divmod(T, len(prefix))
    counts = Counter()
    for e in prefix:
        counts[e] += full
    for e in prefix[:rest]:
        counts[e] += 1
    return counts


def variance_m2(n: int, prefix: Sequence, c_hat: float, T: int, nodes: int = 64, radii=None,
                kernel=None) -> MomentResult:
    """Var(sum_j (y_j e^{S})^{c_hat/T}) as a double contour integral.

    ``prefix`` is repeated cyclically to length T.  ``kernel`` replaces the
    cross kernel 1/((u2-u1)^2 - c^2) (used to test the harness).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not c_hat > 0:
        raise ValueError("c_hat must be positive")
    prefix = tuple(_validate_entry(e, n) for e in prefix)
    c = c_hat / T
    if c >= M2_MAX_C and radii is None:
        raise ContourInfeasibleError(f"c = c_hat/T = {c} must be below {M2_MAX_C}")
    radii = tuple(radii) if radii is not None else default_radii(n, 2)
    check_contours(c, n, radii)
    counts = _cycled_counts(prefix, T)
    kern = kernel if kernel is not None else _variance_kernel(c)
    value, err = _refine(lambda N: _double_integral(c, n, counts, radii, N, kern), nodes, 2**11)
    return _finish(value, err, "quadrature")


# ---------------------------------------------------------------------------
# Monte Carlo


def default_workers():
    env = os.environ.get("PICKETFENCE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _mc_chunk(n, prefix, seed, chunk, size):
    rng = RngStream(seed, chunk).generator()
    factors = sample_factors(prefix, n, rng, size)
    return exact_log_squared_singular_values(factors)


def sample_log_y(n, prefix, trials, seed, workers=None):
    """log y_j for ``trials`` independent products, shape (trials, n).

    Trials are drawn in chunks of MC_CHUNK, chunk i from RngStream(seed, i),
    so the output does not depend on the number of workers.
    """
    prefix = tuple(prefix)
    if not 1 <= len(prefix) <= EXACT_MAX_T:
        raise ValueError(f"need 1 <= T <= {EXACT_MAX_T}, got {len(prefix)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [min(MC_CHUNK, trials - s) for s in range(0, trials, MC_CHUNK)]
    workers = workers or default_workers()
    jobs = [(n, prefix, seed, i, sz) for i, sz in enumerate(sizes)]
    if workers == 1 or len(jobs) == 1:
        parts = [_mc_chunk(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _mc_chunk(*j), jobs))
    return np.concatenate(parts)


def _power_sums(query, log_y):
    shift = shift_total(query.n, query.prefix) if query.shifted else 0.0
    sums = [np.sum(np.exp(ci * (log_y + shift)), axis=1) for ci in query.exponents]
    return np.prod(sums, axis=0)


def mc_moment(query: MomentQuery, trials: int, seed: int, workers=None) -> MomentResult:
    """Sample mean and standard error of prod_i sum_j (y_j e^{S})^{c_i}."""
    samples = _power_sums(query, sample_log_y(query.n, query.prefix, trials, seed, workers))
    se = samples.std(ddof=1) / math.sqrt(trials) if trials > 1 else float("inf")
    return MomentResult(float(samples.mean()), "monte-carlo", float(se))


def mc_variance(n, prefix, c_hat, T, trials, seed, workers=None) -> MomentResult:
    """Sample variance of sum_j (y_j e^{S})^{c_hat/T} with its standard error."""
    query = MomentQuery(n, tuple(_cycled_prefix(prefix, T)), c_hat / T)
    z = _power_sums(query, sample_log_y(n, query.prefix, trials, seed, workers))
    d = z - z.mean()
    var = float(np.mean(d**2) * trials / (trials - 1))
    m4 = float(np.mean(d**4))
    se = math.sqrt(max(m4 - var**2, 0.0) / trials)
    return MomentResult(var, "monte-carlo", se)


def _cycled_prefix(prefix, T):
    prefix = list(prefix)
    return [prefix[t % len(prefix)] for t in range(T)]
