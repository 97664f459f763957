import math

import mpmath
import numpy as np
import pytest

from picketfence import spectrum
from picketfence.chain import (
    EXACT_MAX_T,
    ChainError,
    absorb,
    chain_init,
    chain_step,
    exact_log_squared_singular_values,
    lyapunov_estimate,
    run_chain,
)
from picketfence.ensemble import INF, EnsembleSequence, measure_from_sequence, shift_s
from picketfence.sampler import RngStream, sample_factors, sample_ginibre
from picketfence.special import EULER_GAMMA


def gen(seed=0, stream=0):
    return RngStream(seed, stream).generator()


class TestState:
    def test_init(self):
        s = chain_init(3)
        assert np.array_equal(s.frame, np.eye(3)) and np.all(s.log_scales == 0)
        assert s.tau == 0 and s.shift_sum == 0 and np.all(s.log_y() == 0)
        with pytest.raises(ValueError):
            chain_init(0)

    def test_identity_and_scaled_identity(self):
        s = chain_step(chain_init(2), np.eye(2), INF)
        assert np.all(s.log_scales == 0)
        s = chain_step(chain_init(2), 2 * np.eye(2), INF)
        assert s.log_scales == pytest.approx([math.log(2)] * 2, abs=1e-15)
        assert s.tau == 1 and s.shift_sum == EULER_GAMMA

    def test_singular_reports_tau(self):
        s = chain_step(chain_init(2), np.eye(2), INF)
        F = np.stack([np.eye(2), np.eye(2), np.zeros((2, 2))])
        with pytest.raises(ChainError) as info:
            absorb(s, F, [INF] * 3)
        assert info.value.tau == 4

    @pytest.mark.parametrize("bad", [np.full((2, 2), np.nan), np.eye(3)])
    def test_rejects_bad_factor(self, bad):
        with pytest.raises(ValueError):
            chain_step(chain_init(2), bad, INF)

    def test_frame_stays_unitary(self):
        s = run_chain(EnsembleSequence(5, "inf,7"), 5000, gen(1))
        assert np.max(np.abs(s.frame.conj().T @ s.frame - np.eye(5))) <= 1e-10

    def test_reorthonormalises_drifted_frame(self):
        s = chain_init(3)
        s.frame = s.frame * (1 + 1e-6)
        s = absorb(s, sample_ginibre(3, gen(), size=1), [INF])
        assert np.max(np.abs(s.frame.conj().T @ s.frame - np.eye(3))) <= 1e-12

    def test_shift_bookkeeping(self):
        seq = EnsembleSequence(2, "inf,5,3")
        s = run_chain(seq, 3 * 7, gen(2), block=4)
        per_period = EULER_GAMMA + shift_s(2, 5) + shift_s(2, 3)
        assert s.shift_sum == pytest.approx(7 * per_period, abs=1e-13)
        assert s.entry_counts == {INF: 7, 5: 7, 3: 7}

    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_determinant_identity(self, n):
        entries = [INF, n + 1, n + 4] * 1000
        F = sample_factors(entries, n, gen(3, n))
        s = absorb(chain_init(n), F, entries)
        logdet = 2 * math.fsum(np.linalg.slogdet(F)[1])
        assert math.fsum(s.log_y()) == pytest.approx(logdet, abs=1e-8 * len(F))

    def test_deterministic(self):
        # draws are grouped by L inside a block, so the block length is part of the stream layout
        seq = EnsembleSequence(3, "inf,5")
        a = run_chain(seq, 1000, gen(4), block=64)
        b = run_chain(seq, 1000, gen(4), block=64)
        assert np.array_equal(a.log_scales, b.log_scales) and np.array_equal(a.frame, b.frame)


class TestEstimate:
    def test_needs_factors(self):
        with pytest.raises(ValueError):
            lyapunov_estimate(chain_init(2))

    def test_identity_chain(self):
        s = absorb(chain_init(3), np.broadcast_to(np.eye(3), (50, 3, 3)), [INF] * 50)
        est = lyapunov_estimate(s)
        assert np.all(est.values == 0) and est.T == 50

    def test_single_ginibre_step_mean(self):
        g = sample_ginibre(1, gen(5), size=10**6)
        logs = [2 * np.log(np.abs(g[:, 0, 0]))]
        assert np.mean(logs) == pytest.approx(-EULER_GAMMA, abs=0.01)

    def test_ginibre_n1(self):
        est = lyapunov_estimate(run_chain(EnsembleSequence(1, "inf"), 20_000, gen(6)))
        assert abs(est.values[0] + EULER_GAMMA) <= 0.04
        # batch means should see per-step variance pi^2/6
        assert est.stderr[0] == pytest.approx(math.sqrt(math.pi**2 / 6 / 20_000), rel=0.3)

    def test_all_l2_n1(self):
        seq = EnsembleSequence(1, "2")
        est = lyapunov_estimate(run_chain(seq, 20_000, gen(7)))
        exact = spectrum.lyapunov_exponents(measure_from_sequence(seq), 1)[0]
        assert exact == pytest.approx(-0.3068528, abs=1e-7)
        assert abs(est.values[0] - exact) <= 0.05

    @pytest.mark.parametrize("n,pattern", [(3, "inf"), (2, "inf,5"), (4, "inf,6,9")])
    def test_unnormalised_offset(self, n, pattern):
        # raw estimates converge to lambda_i + log n (the closed form is for X / sqrt(n))
        seq = EnsembleSequence(n, pattern)
        est = lyapunov_estimate(run_chain(seq, 20_000, gen(8, n)))
        exact = spectrum.lyapunov_exponents(measure_from_sequence(seq), n)
        assert np.all(np.abs(est.values - (exact + math.log(n))) < 5 * est.stderr + 1e-3)
        assert np.all(np.diff(est.values) <= 0)


class TestExactPath:
    def test_diagonal_examples(self):
        out = exact_log_squared_singular_values([np.diag([2.0, 0.5])])
        assert out == pytest.approx([math.log(4), math.log(0.25)], abs=1e-14)
        out = exact_log_squared_singular_values([np.diag([3.0, 1.0])] * 2)
        assert out == pytest.approx([math.log(81), 0.0], abs=1e-14)

    def test_matches_direct_svd(self):
        F = sample_factors([INF] * 5, 2, gen(9))
        prod = F[4] @ F[3] @ F[2] @ F[1] @ F[0]
        direct = np.sort(2 * np.log(np.linalg.svd(prod, compute_uv=False)))[::-1]
        assert exact_log_squared_singular_values(F) == pytest.approx(direct, abs=1e-8)

    @pytest.mark.parametrize("n,T", [(3, 200), (5, 120), (2, 150)])
    def test_high_precision_oracle(self, n, T):
        F = sample_factors([INF, n + 1] * (T // 2), n, gen(10, n))
        mpmath.mp.dps = 400
        P = mpmath.eye(n)
        for X in F:
            P = mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in X]) * P
        H = P.H * P
        ev = sorted((float(mpmath.log(mpmath.re(e))) for e in mpmath.eighe(H, eigvals_only=True)), reverse=True)
        mpmath.mp.dps = 15
        got = exact_log_squared_singular_values(F)
        assert got == pytest.approx(ev, rel=1e-8, abs=1e-8)

    def test_batched(self):
        F = sample_factors([INF] * 6, 3, gen(11), size=4)
        F = np.moveaxis(F, 0, 0)
        batch = exact_log_squared_singular_values(F)
        for b in range(4):
            assert batch[b] == pytest.approx(exact_log_squared_singular_values(F[b]), abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            exact_log_squared_singular_values(np.zeros((EXACT_MAX_T + 1, 2, 2)))
        with pytest.raises(ValueError):
            exact_log_squared_singular_values(np.zeros((3, 2, 3)))

    def test_path_consistency(self):
        n, T = 3, 200
        qr, ex = [], []
        for t in range(100):
            F = sample_factors([INF] * T, n, gen(12, t))
            qr.append(lyapunov_estimate(absorb(chain_init(n), F, [INF] * T)).values)
            ex.append(exact_log_squared_singular_values(F) / T)
        assert np.max(np.abs(np.mean(qr, axis=0) - np.mean(ex, axis=0))) <= 0.02

    def test_determinant_identity(self):
        F = sample_factors([INF, 9, 5] * 60, 4, gen(13))
        logdet = 2 * math.fsum(np.linalg.slogdet(F)[1])
        assert math.fsum(exact_log_squared_singular_values(F)) == pytest.approx(logdet, abs=1e-6)
