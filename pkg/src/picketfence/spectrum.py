"""Closed-form Lyapunov spectrum of mixed Ginibre / truncated-unitary products.

For a frequency measure rho on the gaps L - n the exponents are

    lambda_i(n) = -sum_k rho([k, inf]) * (log(1 - 1/(k+n)) + 1/(k+n-i)),

normalised by c(n) = sum_k rho([k, inf]) / (k+n-1)^2.  Every series has a
constant tail weight beyond K = max_support + 1, so the tails are summed in
closed form with digamma / trigamma and the results are exact to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import FrequencyMeasure, alpha, coerce_measure
from .special import digamma, trigamma


def _split(measure, n):
    K = measure.max_support + 1
    k = np.arange(1, K, dtype=float)
    w = np.asarray(measure.tail_weights(K - 1), dtype=float)
    return K, k, w, float(measure.weight_at_infinity)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def lyapunov_exponents(measure: FrequencyMeasure, n: int) -> np.ndarray:
    """lambda_1(n) > ... > lambda_n(n) as a length-n array."""
    n = _check_n(n)
    measure = coerce_measure(measure, n)
    K, k, w, rho_inf = _split(measure, n)
    i = np.arange(1, n + 1, dtype=float)
    finite = -(
        np.sum(w * np.log1p(-1.0 / (k + n)))
        + np.sum(w[None, :] / (k[None, :] + n - i[:, None]), axis=1)
    )
    if rho_inf == 0:
        return finite
    tail = np.array([digamma(K + n - j) for j in range(1, n + 1)]) - math.log(K + n - 1)
    return finite + rho_inf * tail


def c_of_n(measure: FrequencyMeasure, n: int) -> float:
    """Normaliser c(n) = sum_k rho([k, inf]) / (k+n-1)^2."""
    n = _check_n(n)
    measure = coerce_measure(measure, n)
    K, k, w, rho_inf = _split(measure, n)
    value = math.fsum(w / (k + n - 1) ** 2)
    if rho_inf:
        value += rho_inf * trigamma(K + n - 1)
    if not value > 0:
        raise ValueError("c(n) vanishes: measure has zero total mass")
    return value


def exponent_gaps(measure: FrequencyMeasure, n: int) -> np.ndarray:
    """lambda_i - lambda_1 for i = 1..n, summed without cancellation.

    The tail difference psi(K+n-i) - psi(K+n-1) is a finite harmonic sum.
    """
    n = _check_n(n)
    measure = coerce_measure(measure, n)
    K, k, w, rho_inf = _split(measure, n)
    i = np.arange(1, n + 1, dtype=float)
    # 1/(k+n-i) - 1/(k+n-1) = (i-1) / ((k+n-i)(k+n-1))
    finite = -np.sum(
        w[None, :] * (i[:, None] - 1) / ((k[None, :] + n - i[:, None]) * (k[None, :] + n - 1)),
        axis=1,
    )
    if rho_inf == 0:
        return finite
    # psi(K+n-i) - psi(K+n-1) = -sum_{j=K+n-i}^{K+n-2} 1/j
    recip = 1.0 / np.arange(K + n - 2, K - 1, -1, dtype=float)  # j = K+n-2 down to K
    tail = np.concatenate(([0.0], -np.cumsum(recip)))[:n]
    return finite + rho_inf * tail


def normalized_gaps(measure: FrequencyMeasure, n: int) -> np.ndarray:
    """(lambda_i - lambda_1) / c(n); tends to -(i-1)."""
    return exponent_gaps(measure, n) / c_of_n(measure, n)


def epsilon_bound(measure: FrequencyMeasure, n: int, i: int) -> float:
    """Upper bound ((i-1)^2 / (n-i+1)) * c(n) on |lambda_i - lambda_1 + (i-1) c(n)|."""
    n = _check_n(n)
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    return (i - 1) ** 2 / (n - i + 1) * c_of_n(measure, n)


def laplace_identity_value(measure: FrequencyMeasure, n: int, i: int) -> float:
    """sum_k rho([k, inf]) * (1/k - 1/(k+n-i)), which equals lambda_i + alpha."""
    n = _check_n(n)
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    measure = coerce_measure(measure, n)
    if i == n:
        return 0.0
    K, k, w, rho_inf = _split(measure, n)
    value = math.fsum(w * (n - i) / (k * (k + n - i)))
    if rho_inf:
        # psi(K+n-i) - psi(K) = sum_{j=K}^{K+n-i-1} 1/j
        value += rho_inf * math.fsum(1.0 / j for j in range(K, K + n - i))
    return value


@dataclass(frozen=True)
class LyapunovSpectrum:
    n: int
    lambdas: np.ndarray
    c_n: float
    alpha: float
    normalized_gaps: np.ndarray
    epsilon_bounds: np.ndarray


def compute_spectrum(measure: FrequencyMeasure, n: int) -> LyapunovSpectrum:
    n = _check_n(n)
    measure = coerce_measure(measure, n)
    c = c_of_n(measure, n)
    i = np.arange(1, n + 1, dtype=float)
    return LyapunovSpectrum(
        n=n,
        lambdas=lyapunov_exponents(measure, n),
        c_n=c,
        alpha=alpha(measure, n),
        normalized_gaps=exponent_gaps(measure, n) / c,
        epsilon_bounds=(i - 1) ** 2 / (n - i + 1) * c,
    )
