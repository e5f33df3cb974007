# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see _kernels_py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()


def secular_sandwich(const double complex[:, :] X, const long[:, :] cluster,
                     const double[:] rates):
    cdef Py_ssize_t N = X.shape[0]
    cdef Py_ssize_t nnz = 0, i, j, a, b, c, d
    cdef double complex y
    out = np.zeros((N * N, N * N), dtype=complex)
    cdef double complex[:, :] o = out
    ia = np.empty(N * N, dtype=np.intp)
    ic = np.empty(N * N, dtype=np.intp)
    cdef Py_ssize_t[:] nza = ia, nzc = ic
    for a in range(N):
        for c in range(N):
            if X[a, c] != 0:
                nza[nnz] = a
                nzc[nnz] = c
                nnz += 1
    for i in range(nnz):
        a = nza[i]
        c = nzc[i]
        y = X[a, c] * rates[cluster[a, c]]
        for j in range(nnz):
            b = nza[j]
            d = nzc[j]
            if cluster[b, d] == cluster[a, c]:
                o[a + N * b, c + N * d] += y * X[b, d].conjugate()
    return out


cdef void _rhs(double complex* B, int n, double complex* y, double t, double omega,
               double complex* z, double complex* out) noexcept nogil:
    # z <- B y with B the column-major (3n x n) stack [M0; Mp; Mm]
    cdef int m = 3 * n, inc = 1, k
    cdef double complex one = 1.0, zero = 0.0
    cdef char trans = b'N'
    zgemv(&trans, &m, &n, &one, B, &m, y, &inc, &zero, z, &inc)
    cdef double c = 2.0 * cos(omega * t)
    cdef double complex fp = c * (cos(omega * t) + 1j * sin(omega * t))
    cdef double complex fm = c * (cos(omega * t) - 1j * sin(omega * t))
    for k in range(n):
        out[k] = -(z[k] + fp * z[n + k] + fm * z[2 * n + k])


def rk4_run(M0, Mp, Mm, v, double t0, double dt, long nsteps, double omega):
    cdef int n = M0.shape[0]
    Bf = np.asfortranarray(np.concatenate([M0, Mp, Mm], axis=0), dtype=complex)
    cdef double complex[::1, :] B = Bf
    y_arr = np.array(v, dtype=complex)
    cdef double complex[::1] y = y_arr
    work = np.empty((6, n), dtype=complex)
    z_arr = np.empty(3 * n, dtype=complex)
    cdef double complex[:, ::1] w = work
    cdef double complex[::1] z = z_arr
    cdef double complex[::1] k1 = w[0], k2 = w[1], k3 = w[2], k4 = w[3], tmp = w[4]
    cdef long s
    cdef int k
    cdef double t
    with nogil:
        for s in range(nsteps):
            t = t0 + s * dt
            _rhs(&B[0, 0], n, &y[0], t, omega, &z[0], &k1[0])
            for k in range(n):
                tmp[k] = y[k] + 0.5 * dt * k1[k]
            _rhs(&B[0, 0], n, &tmp[0], t + 0.5 * dt, omega, &z[0], &k2[0])
            for k in range(n):
                tmp[k] = y[k] + 0.5 * dt * k2[k]
            _rhs(&B[0, 0], n, &tmp[0], t + 0.5 * dt, omega, &z[0], &k3[0])
            for k in range(n):
                tmp[k] = y[k] + dt * k3[k]
            _rhs(&B[0, 0], n, &tmp[0], t + dt, omega, &z[0], &k4[0])
            for k in range(n):
                y[k] = y[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
    return y_arr
