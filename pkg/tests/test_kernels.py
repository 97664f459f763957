import os
import subprocess
import sys

import numpy as np
import pytest

from picketfence import kernels
from picketfence.ensemble import INF
from picketfence.sampler import RngStream, sample_factors

BACKENDS = [kernels.python_qr_sweep]
if kernels.compiled_qr_sweep is not None:
    BACKENDS.append(kernels.compiled_qr_sweep)


def stack(n, T, seed=0):
    return sample_factors([INF, n + 2] * (T // 2) + [INF] * (T % 2), n, RngStream(seed, n).generator())


@pytest.mark.parametrize("sweep", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 3, 8])
def test_sweep_reconstructs_product(sweep, n):
    F = stack(n, 6)
    frame, log_diag, rs = sweep(F, np.eye(n, dtype=complex), keep_r=True)
    assert log_diag.shape == (6, n) and rs.shape == (6, n, n)
    assert np.allclose(frame.conj().T @ frame, np.eye(n), atol=1e-13)
    d = np.real(np.diagonal(rs, axis1=1, axis2=2))
    assert np.all(d > 0) and np.allclose(np.log(d), log_diag, atol=1e-14)
    assert np.allclose(np.tril(rs, -1), 0)
    prod = np.eye(n)
    for X in F:
        prod = X @ prod
    R = np.eye(n)
    for r in rs:
        R = r @ R
    assert np.allclose(frame @ R, prod, rtol=1e-10, atol=1e-12 * np.abs(prod).max())


@pytest.mark.skipif(kernels.compiled_qr_sweep is None, reason="compiled kernel not built")
@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_backends_agree(n):
    F = stack(n, 3000, seed=1)
    Q0 = np.linalg.qr(stack(n, 1, seed=2)[0])[0]
    fa, la, _ = kernels.python_qr_sweep(F, Q0)
    fb, lb, _ = kernels.compiled_qr_sweep(F, Q0)
    assert np.allclose(la, lb, atol=1e-11)
    assert np.allclose(fa, fb, atol=1e-10)


@pytest.mark.parametrize("sweep", BACKENDS)
def test_singular_factor(sweep):
    F = stack(3, 5)
    F[3] = 0.0
    with pytest.raises(kernels.SingularFactorError) as info:
        sweep(F, np.eye(3, dtype=complex))
    assert info.value.index == 3


@pytest.mark.parametrize("sweep", BACKENDS)
def test_empty_sweep(sweep):
    frame, log_diag, _ = sweep(np.zeros((0, 2, 2), complex), np.eye(2, dtype=complex))
    assert log_diag.shape == (0, 2) and np.array_equal(frame, np.eye(2))


def test_backend_selection():
    env = dict(os.environ, PICKETFENCE_NO_EXT="1")
    out = subprocess.run([sys.executable, "-c", "from picketfence import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("cython", "python")
