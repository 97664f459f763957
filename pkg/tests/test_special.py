import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from picketfence.special import EULER_GAMMA, digamma, harmonic, trigamma


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.5, 1.0, 2.5, 7.0, 11.99, 12.0, 50.0, 1e4, 1e8])
def test_digamma_matches_mpmath(x):
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), abs=1e-12, rel=1e-14)


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.5, 1.0, 2.5, 7.0, 12.0, 99.0, 100.0, 1e6])
def test_trigamma_matches_mpmath(x):
    assert trigamma(x) == pytest.approx(float(mpmath.psi(1, x)), abs=1e-12, rel=1e-14)


def test_anchor_values():
    assert digamma(1) == pytest.approx(-EULER_GAMMA, abs=1e-15)
    assert digamma(2) == pytest.approx(1 - EULER_GAMMA, abs=1e-15)
    assert trigamma(1) == pytest.approx(math.pi ** 2 / 6, abs=1e-14)
    # partial sums of 1/k^2 with an integral tail
    K = 10**6
    assert trigamma(1) == pytest.approx(math.fsum(1 / k**2 for k in range(1, K)) + 1 / (K - 0.5), abs=1e-12)


@pytest.mark.parametrize("f", [digamma, trigamma])
@pytest.mark.parametrize("x", [0, -1.0, -0.5])
def test_domain(f, x):
    with pytest.raises(ValueError):
        f(x)


@given(st.floats(min_value=1e-2, max_value=1e3))
def test_recurrences(x):
    assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, rel=1e-11, abs=1e-11)
    assert trigamma(x) - trigamma(x + 1) == pytest.approx(1 / x**2, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 10, 4096, 4097, 10**5])
def test_harmonic(m):
    exact = float(sum(Fraction(1, k) for k in range(1, m + 1))) if m <= 5000 else float(mpmath.harmonic(m))
    assert harmonic(m) == pytest.approx(exact, abs=1e-12)
