"""Digamma and trigamma on the positive real axis.

Both use upward recurrence to x >= 12 followed by the Stirling-type
asymptotic series.  Absolute accuracy is better than 1e-12 for all
x > 0 where the result is representable.
"""
import math

EULER_GAMMA = 0.57721566490153286060651209008240243

# B_{2k} for k = 1..8
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)

_ASYMPTOTIC_FROM = 12.0


def _check(x):
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"argument must be a finite positive real, got {x!r}")
    return x


def digamma(x):
    """Logarithmic derivative of the gamma function, psi(x), for x > 0."""
    x = _check(x)
    acc = 0.0
    while x < _ASYMPTOTIC_FROM:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x):
    """Derivative of digamma, psi'(x), for x > 0."""
    x = _check(x)
    acc = 0.0
    while x < _ASYMPTOTIC_FROM:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv2 * inv
    for b in _BERNOULLI:
        series += b * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + series


def harmonic(m):
    """Harmonic number H_m = 1 + 1/2 + ... + 1/m (H_0 = 0)."""
    m = int(m)
    if m < 0:
        raise ValueError("harmonic number needs m >= 0")
    if m <= 4096:
        return math.fsum(1.0 / k for k in range(1, m + 1))
    return digamma(m + 1.0) + EULER_GAMMA
