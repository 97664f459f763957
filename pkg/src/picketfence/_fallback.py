"""Pure-Python/numpy QR sweep, used when the compiled kernel is unavailable."""
import numpy as np


def qr_sweep(factors, frame, keep_r=False):
    """Run the QR sweep; returns (frame, log_diag, rs or None).

    For each factor X_t: X_t @ Q = Q' R with R_ii > 0; log R_ii is recorded
    and Q' carried forward.
    """
    from .kernels import SingularFactorError

    factors = np.asarray(factors, dtype=np.complex128)
    T, n, _ = factors.shape
    q = np.array(frame, dtype=np.complex128, copy=True)
    log_diag = np.empty((T, n))
    rs = np.empty((T, n, n), dtype=np.complex128) if keep_r else None
    for t in range(T):
        q, r = np.linalg.qr(factors[t] @ q)
        d = np.diagonal(r)
        absd = np.abs(d)
        if not np.all(absd > 0):
            raise SingularFactorError(t)
        ph = d / absd
        q = q * ph
        log_diag[t] = np.log(absd)
        if keep_r:
            rs[t] = ph.conj()[:, None] * r
    return q, log_diag, rs
