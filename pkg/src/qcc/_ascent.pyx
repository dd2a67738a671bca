# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trace-norm ascent kernels.

Same contract as ``qcc._ascent_py``. Restarts run one after another in a C
loop; each iteration does two Liouville mat-vecs (``zgemv``) and one
``zheev`` call.
Column stacking makes ``L @ vec(rho)`` the column-major array LAPACK expects.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from scipy.linalg.cython_blas cimport zgemv
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

cdef double SIGN_TOL = 1e-12


cdef inline double complex _conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef inline void _matvec(const double complex[:, ::1] A, const double complex[::1] x,
                         double complex[::1] y) noexcept nogil:
    """``y = A @ x`` for a C-contiguous ``A`` (a column-major ``A.T`` to BLAS)."""
    cdef char trans = c'T'
    cdef int m = A.shape[1], n = A.shape[0], one = 1
    cdef double complex alpha = 1.0, beta = 0.0
    zgemv(&trans, &m, &n, &alpha, <double complex*>&A[0, 0], &m,
          <double complex*>&x[0], &one, &beta, &y[0], &one)


cdef int _eval(const double complex[:, ::1] L, const double complex[::1] psi,
               int d, int dout, double complex[::1] rvec, double complex[::1] a,
               double[::1] w, double complex[::1] work, int lwork,
               double[::1] rwork, int want_vectors) noexcept nogil:
    """Fill ``a`` with Delta(psi psi^dag) and diagonalize it in place."""
    cdef int p, q, info = 0
    cdef char jobz = c'V' if want_vectors else c'N'
    cdef char uplo = c'L'
    for q in range(d):
        for p in range(d):
            rvec[p + q * d] = psi[p] * _conj(psi[q])
    _matvec(L, rvec, a)
    zheev(&jobz, &uplo, &dout, &a[0], &dout, &w[0], &work[0], &lwork, &rwork[0], &info)
    return info


def objective_batch(L, psis, int dim_out):
    """``||Delta(psi psi^dag)||_1`` for every row of ``psis``."""
    cdef const double complex[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef const double complex[:, ::1] P = np.ascontiguousarray(psis, dtype=np.complex128)
    cdef int n = P.shape[0], d = P.shape[1], dout = dim_out, i, k, info
    cdef int lwork = max(1, 64 * dout)
    cdef double complex[::1] rvec = np.empty(d * d, np.complex128)
    cdef double complex[::1] a = np.empty(dout * dout, np.complex128)
    cdef double[::1] w = np.empty(dout, np.float64)
    cdef double complex[::1] work = np.empty(lwork, np.complex128)
    cdef double[::1] rwork = np.empty(max(1, 3 * dout - 2), np.float64)
    out = np.empty(n, np.float64)
    cdef double[::1] ov = out
    cdef double s
    with nogil:
        for i in range(n):
            info = _eval(Lv, P[i], d, dout, rvec, a, w, work, lwork, rwork, 0)
            if info != 0:
                with gil:
                    raise RuntimeError(f"zheev failed with info={info}")
            s = 0.0
            for k in range(dout):
                s += fabs(w[k])
            ov[i] = s
    return out


def ascend_batch(L, psis, int dim_out, int iters, double step):
    """Projected (sub)gradient ascent from every row of ``psis``.

    Returns ``(best_values, best_states)``.
    """
    cdef const double complex[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef const double complex[:, ::1] LHv = np.ascontiguousarray(np.conj(Lv).T)
    start = np.array(psis, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] P = start
    cdef int n = P.shape[0], d = P.shape[1], dout = dim_out
    cdef int n2 = dout * dout, m2 = d * d
    cdef int lwork = max(1, 64 * dout)
    cdef double complex[::1] rvec = np.empty(m2, np.complex128)
    cdef double complex[::1] a = np.empty(n2, np.complex128)
    cdef double complex[::1] svec = np.empty(n2, np.complex128)
    cdef double complex[::1] wmat = np.empty(m2, np.complex128)
    cdef double complex[::1] g = np.empty(d, np.complex128)
    cdef double[::1] w = np.empty(dout, np.float64)
    cdef double[::1] sgn = np.empty(dout, np.float64)
    cdef double complex[::1] work = np.empty(lwork, np.complex128)
    cdef double[::1] rwork = np.empty(max(1, 3 * dout - 2), np.float64)
    best = np.full(n, -np.inf)
    best_psi = start.copy()
    cdef double[::1] bv = best
    cdef double complex[:, ::1] bp = best_psi
    cdef int i, it, p, q, k, info
    cdef double val, nrm, radial
    cdef double complex acc

    with nogil:
        for i in range(n):
            nrm = 0.0
            for p in range(d):
                nrm += P[i, p].real * P[i, p].real + P[i, p].imag * P[i, p].imag
            nrm = sqrt(nrm)
            for p in range(d):
                P[i, p] = P[i, p] / nrm
            for it in range(iters + 1):
                info = _eval(Lv, P[i], d, dout, rvec, a, w, work, lwork, rwork, 1)
                if info != 0:
                    with gil:
                        raise RuntimeError(f"zheev failed with info={info}")
                val = 0.0
                for k in range(dout):
                    val += fabs(w[k])
                    if w[k] > SIGN_TOL:
                        sgn[k] = 1.0
                    elif w[k] < -SIGN_TOL:
                        sgn[k] = -1.0
                    else:
                        sgn[k] = 0.0
                if val > bv[i]:
                    bv[i] = val
                    for p in range(d):
                        bp[i, p] = P[i, p]
                if it == iters:
                    break
                # S = V sign(w) V^dag, column-major; eigenvectors are columns of a
                for q in range(dout):
                    for p in range(dout):
                        acc = 0
                        for k in range(dout):
                            acc = acc + a[p + k * dout] * sgn[k] * _conj(a[q + k * dout])
                        svec[p + q * dout] = acc
                # W = Delta^dag(S): vec(W) = L^H vec(S)
                _matvec(LHv, svec, wmat)
                radial = 0.0
                for p in range(d):
                    acc = 0
                    for q in range(d):
                        acc = acc + wmat[p + q * d] * P[i, q]
                    g[p] = 2.0 * acc
                    radial += (_conj(P[i, p]) * g[p]).real
                nrm = 0.0
                for p in range(d):
                    P[i, p] = P[i, p] + step * (g[p] - radial * P[i, p])
                    nrm += P[i, p].real * P[i, p].real + P[i, p].imag * P[i, p].imag
                nrm = sqrt(nrm)
                for p in range(d):
                    P[i, p] = P[i, p] / nrm
    return best, best_psi
