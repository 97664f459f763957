# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled QR sweep over a sequence of small complex factors.

For each factor X_t the kernel forms M = X_t @ Q, factors M = Q' R with a
Householder QR whose R has a real positive diagonal, stores log R_ii and
(optionally) R, and continues with Q'.  Matches ``_fallback.qr_sweep``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline double _abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex _conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef Py_ssize_t _sweep(
    const double complex[:, :, ::1] factors,
    double complex[:, ::1] frame,
    double[:, ::1] log_diag,
    double complex[:, :, ::1] r_out,
    bint keep_r,
    double complex* work,
    double complex* vecs,
    double complex* alphas,
    double* betas,
) noexcept nogil:
    cdef Py_ssize_t T = factors.shape[0]
    cdef Py_ssize_t n = factors.shape[1]
    cdef Py_ssize_t t, i, j, k
    cdef double complex s, x0, ph
    cdef double nrm2, nrm, ax0, beta
    for t in range(T):
        # work = X_t @ frame
        for i in range(n):
            for k in range(n):
                s = 0
                for j in range(n):
                    s = s + factors[t, i, j] * frame[j, k]
                work[i * n + k] = s
        # Householder triangularisation, reflectors stored column-wise in vecs
        for j in range(n):
            nrm2 = 0.0
            for i in range(j, n):
                nrm2 = nrm2 + _abs2(work[i * n + j])
            nrm = sqrt(nrm2)
            if not nrm > 0.0:
                return t
            x0 = work[j * n + j]
            ax0 = sqrt(_abs2(x0))
            if ax0 > 0.0:
                ph = x0 / ax0
            else:
                ph = 1.0
            alphas[j] = -ph * nrm
            vecs[j * n + j] = ph * (ax0 + nrm)
            for i in range(j + 1, n):
                vecs[i * n + j] = work[i * n + j]
            beta = 1.0 / (nrm * (nrm + ax0))
            betas[j] = beta
            for k in range(j + 1, n):
                s = 0
                for i in range(j, n):
                    s = s + _conj(vecs[i * n + j]) * work[i * n + k]
                s = s * beta
                for i in range(j, n):
                    work[i * n + k] = work[i * n + k] - s * vecs[i * n + j]
            work[j * n + j] = alphas[j]
            log_diag[t, j] = log(nrm)
        # frame = H_0 H_1 ... H_{n-1} applied to the identity
        for i in range(n):
            for k in range(n):
                frame[i, k] = 1.0 if i == k else 0.0
        for j in range(n - 1, -1, -1):
            beta = betas[j]
            for k in range(n):
                s = 0
                for i in range(j, n):
                    s = s + _conj(vecs[i * n + j]) * frame[i, k]
                s = s * beta
                for i in range(j, n):
                    frame[i, k] = frame[i, k] - s * vecs[i * n + j]
        # phase fix: R_jj real positive
        for j in range(n):
            ph = alphas[j] / sqrt(_abs2(alphas[j]))
            for i in range(n):
                frame[i, j] = frame[i, j] * ph
            if keep_r:
                for k in range(n):
                    if k < j:
                        r_out[t, j, k] = 0
                    else:
                        r_out[t, j, k] = _conj(ph) * work[j * n + k]
    return -1


def qr_sweep(factors, frame, bint keep_r=False):
    """Run the QR sweep; returns (frame, log_diag, rs or None).

    Raises ``SingularFactorError`` (from ``picketfence.kernels``) with the
    0-based index of the first factor that leaves M rank deficient.
    """
    from .kernels import SingularFactorError

    cdef double complex[:, :, ::1] fac = np.ascontiguousarray(factors, dtype=np.complex128)
    cdef Py_ssize_t T = fac.shape[0]
    cdef Py_ssize_t n = fac.shape[1]
    q_arr = np.array(frame, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] q = q_arr
    ld_arr = np.empty((T, n), dtype=np.float64)
    cdef double[:, ::1] ld = ld_arr
    r_arr = np.empty((T if keep_r else 1, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] rv = r_arr
    cdef double complex* work = <double complex*> malloc(n * n * sizeof(double complex))
    cdef double complex* vecs = <double complex*> malloc(n * n * sizeof(double complex))
    cdef double complex* alphas = <double complex*> malloc(n * sizeof(double complex))
    cdef double* betas = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t bad
    if work == NULL or vecs == NULL or alphas == NULL or betas == NULL:
        free(work); free(vecs); free(alphas); free(betas)
        raise MemoryError()
    try:
        with nogil:
            bad = _sweep(fac, q, ld, rv, keep_r, work, vecs, alphas, betas)
    finally:
        free(work); free(vecs); free(alphas); free(betas)
    if bad >= 0:
        raise SingularFactorError(int(bad))
    return q_arr, ld_arr, (r_arr if keep_r else None)
