"""Acceptance gate: ten criteria, each at its stated tolerance and runtime budget.

Run directly (``python tests/test_acceptance.py``) for a one-line-per-criterion
report, or through pytest, where the same lines appear in the terminal summary.
"""
from __future__ import annotations

import itertools
import math
import sys
import time
from dataclasses import dataclass

import numpy as np
import pytest

from picketfence import spectrum
from picketfence.chain import absorb, chain_init, lyapunov_estimate, run_chain
from picketfence.ensemble import GINIBRE, INF, EnsembleSequence, FrequencyMeasure, alpha
from picketfence.moments import (
    MomentQuery,
    contour_moment,
    infinite_factor,
    mc_variance,
    mc_moment,
    residue_moment_m1,
    truncated_infinite_product,
    variance_m2,
)
from picketfence.sampler import RngStream, sample_factors
from picketfence.special import EULER_GAMMA
from picketfence.verify import TEST_MEASURES

REPORT: dict[int, str] = {}


@dataclass
class Outcome:
    passed: bool
    detail: str
    seconds: float
    budget: float

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds < self.budget


def _timed(budget):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            passed, detail = fn()
            return Outcome(bool(passed), detail, time.perf_counter() - t0, budget)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _mean_estimate(n, pattern, T, trials, seed):
    seq = EnsembleSequence(n, pattern)
    vals = np.array([
        lyapunov_estimate(run_chain(seq, T, RngStream(seed, t).generator())).values
        for t in range(trials)
    ])
    return vals


# ---------------------------------------------------------------------------


@_timed(1.0)
def criterion_1():
    """Ginibre n=1, one chain, T=2e4: |estimate + gamma| <= 0.04."""
    est = lyapunov_estimate(run_chain(EnsembleSequence(1, "inf"), 20_000, RngStream(1, 0).generator()))
    err = abs(est.values[0] + EULER_GAMMA)
    return err <= 0.04, f"estimate {est.values[0]:.5f}, |err| {err:.4f} <= 0.04"


@_timed(10.0)
def criterion_2():
    """Ginibre n=3, T=1e4, 8 trials: every estimate within 0.05 of psi(4-i) - log 3."""
    exact = spectrum.lyapunov_exponents(GINIBRE, 3)
    vals = _mean_estimate(3, "inf", 10_000, 8, 2)
    worst_trial = np.max(np.abs(vals - exact))
    worst_mean = np.max(np.abs(vals.mean(axis=0) - exact))
    ok = worst_trial <= 0.05 and worst_mean <= 0.05
    return ok, f"max |err| per trial {worst_trial:.4f}, of mean {worst_mean:.4f} <= 0.05"


@_timed(10.0)
def criterion_3():
    """n=2, pattern inf,5, T=1e4, 8 trials: within 0.05 of lambda({3: .5, inf: .5}, 2)."""
    exact = spectrum.lyapunov_exponents(FrequencyMeasure({3: 0.5}, 0.5), 2)
    vals = _mean_estimate(2, "inf,5", 10_000, 8, 3)
    worst_trial = np.max(np.abs(vals - exact))
    worst_mean = np.max(np.abs(vals.mean(axis=0) - exact))
    ok = worst_trial <= 0.05 and worst_mean <= 0.05
    return ok, f"max |err| per trial {worst_trial:.4f}, of mean {worst_mean:.4f} <= 0.05"


def moment_cases():
    """n in {1,2,3} x T in {1,2,4} x c in {.25,.5,1}, mixed prefixes."""
    for n, T, (j, c) in itertools.product((1, 2, 3), (1, 2, 4), enumerate((0.25, 0.5, 1.0))):
        base = (INF, n + 1, n + 3, INF, n + 2)
        start = (j + T) % len(base)
        prefix = tuple(base[(start + t) % len(base)] for t in range(T))
        yield n, prefix, c


@_timed(120.0)
def criterion_4():
    """Residue vs quadrature within 1e-8; Monte Carlo (2e5 trials) within 4 SE."""
    quad_worst, mc_worst = 0.0, 0.0
    for k, (n, prefix, c) in enumerate(moment_cases()):
        q = MomentQuery(n, prefix, c)
        r = residue_moment_m1(q).value
        quad_worst = max(quad_worst, abs(contour_moment(q, 512).value - r))
        mc = mc_moment(q, 200_000, seed=400 + k)
        mc_worst = max(mc_worst, abs(mc.value - r) / mc.error_estimate)
    ok = quad_worst <= 1e-8 and mc_worst <= 4.0
    return ok, f"27 cases: max |quad - res| {quad_worst:.2e} <= 1e-8, max MC dev {mc_worst:.2f} SE <= 4"


@_timed(1.0)
def criterion_5():
    """Closed-form anchors at 1e-10."""
    beta = residue_moment_m1(MomentQuery(1, (2,), 1.0, shifted=False)).value
    lam = spectrum.lyapunov_exponents(GINIBRE, 1)[0]
    c1 = spectrum.c_of_n(GINIBRE, 1)
    errs = (abs(beta - 1.0), abs(lam + EULER_GAMMA), abs(c1 - math.pi ** 2 / 6))
    return max(errs) <= 1e-10, "beta moment, lambda_1(1), c(1) errors " + ", ".join(f"{e:.1e}" for e in errs)


@_timed(5.0)
def criterion_6():
    """lambda_i + alpha = Laplace sum within 1e-9, all i <= n <= 50, test measures."""
    worst = 0.0
    for m in TEST_MEASURES:
        for n in range(1, 51):
            lam = spectrum.lyapunov_exponents(m, n)
            a = alpha(m, n)
            for i in range(1, n + 1):
                worst = max(worst, abs(lam[i - 1] + a - spectrum.laplace_identity_value(m, n, i)))
    return worst <= 1e-9, f"max discrepancy {worst:.2e} <= 1e-9"


@_timed(1.0)
def criterion_7():
    """Picket fence table: deviation inside the exact bound, strictly shrinking in n."""
    grid = (100, 1000, 10_000)
    ok = True
    for m in (GINIBRE, FrequencyMeasure({3: 0.5}, 0.5)):
        devs = []
        for n in grid:
            g = spectrum.normalized_gaps(m, n)[:5]
            i = np.arange(1, 6)
            dev = g + (i - 1)
            ok &= bool(np.all(np.abs(dev) <= (i - 1) ** 2 / (n - i + 1) + 1e-9))
            devs.append(np.abs(dev[1:]))
        ok &= bool(np.all(devs[0] > devs[1]) and np.all(devs[1] > devs[2]))
    spot = spectrum.normalized_gaps(GINIBRE, 100)[1] + 1
    ok &= abs(spot - (-0.00506)) < 5e-6
    return ok, f"bounds and monotone decrease hold: {ok}; spot deviation n=100,i=2 {spot:.5f}"


@_timed(60.0)
def criterion_8():
    """variance_m2 (n=1, Ginibre, chat=1): decreasing over T=10,100,1000, < 1e-3 at 1000, MC match at 10."""
    vals = [variance_m2(1, (INF,), 1.0, T).value for T in (10, 100, 1000)]
    decreasing = vals[0] > vals[1] > vals[2]
    small = vals[2] < 1e-3
    mc = mc_variance(1, (INF,), 1.0, 10, 200_000, seed=8)
    z = abs(mc.value - vals[0]) / mc.error_estimate
    ok = decreasing and small and z <= 3.0
    return ok, (f"Var = {vals[0]:.4e}, {vals[1]:.4e}, {vals[2]:.4e}; decreasing {decreasing}; "
                f"Var(T=1e3) < 1e-3: {small}; MC at T=10 {z:.2f} SE <= 3")


@_timed(60.0)
def criterion_9():
    """sum log y_i = 2 sum log|det X| within 1e-6, 100 chains, n <= 8, T <= 1e4."""
    rng = np.random.default_rng(9)
    worst = 0.0
    for j in range(100):
        n = int(rng.integers(1, 9))
        T = int(rng.integers(1, 10_001))
        entries = [INF if rng.random() < 0.5 else n + int(rng.integers(1, 8)) for _ in range(T)]
        factors = sample_factors(entries, n, RngStream(9, j).generator())
        state = absorb(chain_init(n), factors, entries)
        logdet = 2.0 * math.fsum(np.linalg.slogdet(factors)[1])
        worst = max(worst, abs(math.fsum(state.log_y()) - logdet))
    return worst <= 1e-6, f"max discrepancy {worst:.2e} <= 1e-6"


@_timed(10.0)
def criterion_10():
    """Gamma-ratio closed form vs truncated product (K=1e6) within 1e-6 on a 5x5 grid."""
    worst = 0.0
    for u in (-2.5 + 0.5j, -1.3, -0.25 - 1.0j, 0.4 + 2.0j, 0.5):
        for c in (0.1, 0.3, 0.5, 1.0, 1.7):
            worst = max(worst, abs(infinite_factor(u, c) - truncated_infinite_product(u, c, 10**6)))
    return worst <= 1e-6, f"max |closed - product| {worst:.2e} <= 1e-6"


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def report_line(k: int, out: Outcome) -> str:
    verdict = "PASS" if out.ok else "FAIL"
    return f"criterion {k:2d}: {verdict}  {out.detail}  [{out.seconds:.2f}s / {out.budget:g}s]"


@pytest.mark.acceptance
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    out = CRITERIA[k]()
    line = report_line(k, out)
    REPORT[k] = line
    print(line)
    assert out.passed, line
    assert out.seconds < out.budget, line


def main() -> int:
    failed = 0
    for k in sorted(CRITERIA):
        out = CRITERIA[k]()
        print(report_line(k, out), flush=True)
        failed += not out.ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
