"""Samplers for the factor ensembles.

``P(n, inf)`` is the complex Ginibre ensemble: iid entries with independent
real and imaginary parts of variance 1/2, so E|g|^2 = 1.  ``P(n, L)`` is
sqrt(L) times the top-left n x n block of an L x L Haar unitary; only the
first n columns of the unitary are needed, and those are obtained from the
thin QR factorisation of an L x n Gaussian block after fixing the phases of
R's diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import INF

_HALF_SQRT = np.sqrt(0.5)


@dataclass(frozen=True)
class RngStream:
    """Counter-style stream address: the same (seed, stream_id) always gives the same draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _shape(size, tail):
    if size is None:
        return tail
    if isinstance(size, (int, np.integer)):
        return (int(size),) + tail
    return tuple(size) + tail


def complex_gaussian(shape, rng) -> np.ndarray:
    """Array of iid standard complex Gaussians (E|g|^2 = 1)."""
    rng = _as_generator(rng)
    pairs = rng.standard_normal(tuple(shape) + (2,))
    return pairs.view(np.complex128)[..., 0] * _HALF_SQRT


def sample_ginibre(n: int, rng, size=None) -> np.ndarray:
    """n x n complex Ginibre matrix (a stack of them when ``size`` is given)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return complex_gaussian(_shape(size, (n, n)), rng)


def haar_columns(L: int, n: int, rng, size=None) -> np.ndarray:
    """First n columns of an L x L Haar unitary, shape (..., L, n)."""
    g = complex_gaussian(_shape(size, (L, n)), rng)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def sample_haar_corner(n: int, L: int, rng, size=None) -> np.ndarray:
    """sqrt(L) times the n x n corner of an L x L Haar unitary."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if L == INF or int(L) != L or L <= n:
        raise ValueError(f"need an integer L > n, got L={L}, n={n}")
    L = int(L)
    return np.sqrt(L) * haar_columns(L, n, rng, size)[..., :n, :]


def sample_factor(entry, n: int, rng, size=None) -> np.ndarray:
    """Draw from P(n, entry): Ginibre for ``INF``, truncated Haar otherwise."""
    if entry == INF:
        return sample_ginibre(n, rng, size)
    return sample_haar_corner(n, entry, rng, size)


def sample_factors(entries, n: int, rng, size=None) -> np.ndarray:
    """Draw one factor per entry, shape (*size, len(entries), n, n).

    Draws are grouped by distinct L value in order of first appearance so that
    each group is a single vectorised call; the layout depends only on
    ``entries`` and ``size``.
    """
    rng = _as_generator(rng)
    entries = list(entries)
    lead = _shape(size, ())
    out = np.empty(lead + (len(entries), n, n), dtype=np.complex128)
    groups = {}
    for pos, e in enumerate(entries):
        groups.setdefault(e, []).append(pos)
    for e, positions in groups.items():
        draws = sample_factor(e, n, rng, lead + (len(positions),))
        out[..., positions, :, :] = draws
    return out
