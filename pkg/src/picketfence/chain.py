"""Stable products X_T ... X_1 of random factors.

Two routes:

* the Benettin sweep (:func:`chain_step`, :func:`absorb`, :func:`run_chain`)
  carries an orthonormal frame and accumulates log R_ii of successive QR
  factorisations, which is overflow-free for any T;
* :func:`exact_log_squared_singular_values` returns the true log squared
  singular values of a short product (T <= 200), by direct SVD when the
  product is well conditioned and by periodic QR iteration otherwise.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .ensemble import EnsembleSequence, shift_s
from .kernels import SingularFactorError, qr_sweep
from .sampler import sample_factors

ORTHO_TOL = 1e-10
EXACT_MAX_T = 200


class ChainError(ArithmeticError):
    """A factor made the running product singular; ``tau`` is 1-based."""

    def __init__(self, tau):
        super().__init__(f"factor tau={tau} is singular to machine precision")
        self.tau = tau


@dataclass
class ChainState:
    n: int
    tau: int
    frame: np.ndarray
    log_scales: np.ndarray
    entry_counts: Counter = field(default_factory=Counter)
    increments: list = field(default_factory=list, repr=False)

    @property
    def shift_sum(self) -> float:
        """Sum of shift_s(n, L_tau) over the absorbed factors."""
        return math.fsum(c * shift_s(self.n, e) for e, c in self.entry_counts.items())

    def log_y(self) -> np.ndarray:
        """Benettin estimates of log y_i(tau), sorted descending."""
        return np.sort(2.0 * self.log_scales)[::-1]


@dataclass(frozen=True)
class LyapunovEstimate:
    values: np.ndarray
    T: int
    stderr: np.ndarray


def chain_init(n: int) -> ChainState:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    return ChainState(n, 0, np.eye(n, dtype=np.complex128), np.zeros(n))


def absorb(state: ChainState, factors, entries) -> ChainState:
    """Multiply a block of factors onto the chain; returns a new state."""
    factors = np.asarray(factors, dtype=np.complex128)
    entries = list(entries)
    if factors.ndim != 3 or factors.shape[1:] != (state.n, state.n):
        raise ValueError(f"factors must have shape (T, {state.n}, {state.n})")
    if len(entries) != len(factors):
        raise ValueError("need one entry per factor")
    if not np.all(np.isfinite(factors)):
        raise ValueError("factors contain non-finite entries")
    try:
        frame, log_diag, _ = qr_sweep(factors, state.frame)
    except SingularFactorError as exc:
        raise ChainError(state.tau + exc.index + 1) from None
    drift = np.max(np.abs(frame.conj().T @ frame - np.eye(state.n)))
    if drift > ORTHO_TOL:
        frame, _ = np.linalg.qr(frame)
    counts = state.entry_counts.copy()
    counts.update(entries)
    return ChainState(
        n=state.n,
        tau=state.tau + len(factors),
        frame=frame,
        log_scales=state.log_scales + log_diag.sum(axis=0),
        entry_counts=counts,
        increments=state.increments + [log_diag],
    )


def chain_step(state: ChainState, X, L) -> ChainState:
    """Absorb a single factor X drawn with parameter L."""
    return absorb(state, np.asarray(X)[None], [L])


def run_chain(seq: EnsembleSequence, T: int, rng, block: int = 1024) -> ChainState:
    """Sample and absorb L_1..L_T of ``seq`` in blocks of whole pattern periods."""
    if T < 0:
        raise ValueError("T must be non-negative")
    P = seq.period
    B = P * max(1, block // P)
    state = chain_init(seq.n)
    while state.tau < T:
        count = min(B, T - state.tau)
        entries = [seq.entry(state.tau + j + 1) for j in range(count)]
        state = absorb(state, sample_factors(entries, seq.n, rng), entries)
    return state


def lyapunov_estimate(state: ChainState) -> LyapunovEstimate:
    """(1/T) log y_i sorted descending, with batch-means standard errors."""
    if state.tau < 1:
        raise ValueError("no factors absorbed yet")
    T = state.tau
    order = np.argsort(-state.log_scales, kind="stable")
    values = 2.0 * state.log_scales[order] / T
    inc = 2.0 * np.concatenate(state.increments)[:, order]
    b = math.ceil(math.sqrt(T))
    nb = T // b
    if nb >= 2:
        means = inc[: nb * b].reshape(nb, b, -1).mean(axis=1)
        stderr = means.std(axis=0, ddof=1) / math.sqrt(nb)
    else:
        stderr = np.full(state.n, np.nan)
    return LyapunovEstimate(values, T, stderr)


# ---------------------------------------------------------------------------
# exact path

_DIRECT_REL_ERR = 1e-10
_BLOCK_SPLIT_TOL = 1e-11
_BLOCK_LOG_RANGE = 8.0
_MAX_HALF_SWEEPS = 64


def _check_factor_stack(factors):
    factors = np.asarray(factors, dtype=np.complex128)
    if factors.ndim < 3 or factors.shape[-1] != factors.shape[-2]:
        raise ValueError("factors must be a (T, n, n) stack of square matrices")
    if factors.shape[-3] > EXACT_MAX_T:
        raise ValueError(f"exact path supports T <= {EXACT_MAX_T}, got {factors.shape[-3]}")
    return factors


def _direct(stack):
    """Scaled explicit product + SVD; returns (log_y, trustworthy mask)."""
    B, T, n, _ = stack.shape
    prod = np.broadcast_to(np.eye(n, dtype=np.complex128), (B, n, n)).copy()
    log_scale = np.zeros(B)
    growth = np.zeros(B)
    for t in range(T):
        growth += np.log(np.linalg.norm(stack[:, t], axis=(1, 2)))
        prod = stack[:, t] @ prod
        m = np.max(np.abs(prod), axis=(1, 2))
        m = np.where(m > 0, m, 1.0)
        prod /= m[:, None, None]
        log_scale += np.log(m)
    s = np.linalg.svd(prod, compute_uv=False)
    with np.errstate(divide="ignore"):
        log_s = np.log(s)
        # rounding in the product is ~ eps * prod_t |X_t|; relative to the
        # smallest singular value that is eps * exp(growth - log s_n)
        rel = np.finfo(float).eps * n * T * np.exp(growth - log_scale - log_s[:, -1])
    ok = np.isfinite(rel) & (rel < _DIRECT_REL_ERR)
    return 2.0 * (log_s + log_scale[:, None]), ok


def _scaled_product(rs):
    """Diagonal logs and unit-diagonal row-scaled form of rs[-1] @ ... @ rs[0]."""
    logd = np.log(np.real(np.diagonal(rs[0])).copy())
    M = rs[0] / np.diagonal(rs[0])[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        for r in rs[1:]:
            diag = np.real(np.diagonal(r))
            N = r / diag[:, None]
            ratio = np.exp(np.clip(logd[None, :] - logd[:, None], -745.0, 700.0))
            M = np.triu(N * ratio) @ M
            logd = logd + np.log(diag)
    return logd, M


def _blocks(logd, M):
    """Contiguous index blocks whose coupling to later indices is negligible."""
    n = len(logd)
    cuts = [0]
    for s in range(n - 1):
        lo = cuts[-1]
        A = M[lo : s + 1, lo : s + 1]
        C = M[lo : s + 1, s + 1 :]
        with np.errstate(all="ignore"):
            try:
                X = np.linalg.solve(A, C)
            except np.linalg.LinAlgError:
                continue
            if np.all(np.isfinite(X)) and np.max(np.abs(X)) < _BLOCK_SPLIT_TOL:
                cuts.append(s + 1)
    cuts.append(n)
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:])]


def _periodic_qr(factors):
    n = factors.shape[-1]
    _, _, rs = qr_sweep(factors, np.eye(n, dtype=np.complex128), keep_r=True)
    for _ in range(_MAX_HALF_SWEEPS):
        logd, M = _scaled_product(rs)
        blocks = _blocks(logd, M)
        if all(np.ptp(logd[a:b]) <= _BLOCK_LOG_RANGE for a, b in blocks):
            break
        adjoint = np.conj(np.transpose(rs[::-1], (0, 2, 1)))
        _, _, rs = qr_sweep(np.ascontiguousarray(adjoint), np.eye(n, dtype=np.complex128), keep_r=True)
    log_sigma = []
    for a, b in blocks:
        if b - a == 1:
            log_sigma.append(logd[a])
            continue
        ref = logd[a]
        block = np.exp(logd[a:b] - ref)[:, None] * M[a:b, a:b]
        log_sigma.extend(np.log(np.linalg.svd(block, compute_uv=False)) + ref)
    return np.sort(2.0 * np.asarray(log_sigma))[::-1]


def exact_log_squared_singular_values(factors) -> np.ndarray:
    """log y_1 >= ... >= log y_n for the product factors[-1] @ ... @ factors[0].

    Accepts a (T, n, n) stack, or a (batch, T, n, n) stack for many
    independent products at once.
    """
    factors = _check_factor_stack(factors)
    single = factors.ndim == 3
    stack = factors[None] if single else factors.reshape((-1,) + factors.shape[-3:])
    B, T, n, _ = stack.shape
    if T == 0:
        out = np.zeros((B, n))
    else:
        out, ok = _direct(stack)
        for b in np.flatnonzero(~ok):
            out[b] = _periodic_qr(stack[b])
    out = np.sort(out, axis=1)[:, ::-1]
    return out[0] if single else out.reshape(factors.shape[:-3] + (n,))
