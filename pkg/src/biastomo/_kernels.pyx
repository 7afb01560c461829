# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the two EM loops. See ``_kernels_py`` for the contract."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, fabs

cnp.import_array()

DEF STATUS_MAX_ITER = 0
DEF STATUS_CONVERGED = 1
DEF STATUS_NONMONOTONE = 2
DEF STATUS_ZERO_PROB = 3


cdef inline double _tr_re(const double complex[:, ::1] a, const double complex[:, ::1] b, Py_ssize_t k) noexcept nogil:
    # Re Tr[a b]
    cdef Py_ssize_t i, l
    cdef double acc = 0.0
    for i in range(k):
        for l in range(k):
            acc += a[i, l].real * b[l, i].real - a[i, l].imag * b[l, i].imag
    return acc


cdef void _step_matrix(const double complex[:, ::1] e, const double complex[:, ::1] rho,
                       double complex[:, ::1] er, double complex[:, ::1] d,
                       double scale, Py_ssize_t k) noexcept nogil:
    # d = s E rho + (s E rho)^+ + s^2 E rho E
    cdef Py_ssize_t i, l, q
    cdef double complex acc
    for i in range(k):
        for l in range(k):
            acc = 0
            for q in range(k):
                acc = acc + e[i, q] * rho[q, l]
            er[i, l] = scale * acc
    for i in range(k):
        for l in range(k):
            acc = 0
            for q in range(k):
                acc = acc + er[i, q] * e[q, l]
            d[i, l] = er[i, l] + er[l, i].conjugate() + scale * acc


cdef double _delta(const double complex[:, :, ::1] at, const double[::1] counts, double total,
                   const double[::1] p, double s, const double complex[:, ::1] d,
                   Py_ssize_t nset, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t j
    cdef double dp, ds = 0.0, acc = 0.0
    for j in range(nset):
        dp = _tr_re(at[j], d, k)
        ds += dp
        if counts[j] > 0:
            acc += counts[j] * log1p(dp / p[j])
    return acc - total * log1p(ds / s)


cdef int _probs(const double complex[:, :, ::1] at, const double complex[:, ::1] rho,
                const double[::1] counts, double[::1] p, double *s,
                Py_ssize_t nset, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(nset):
        p[j] = _tr_re(at[j], rho, k)
        acc += p[j]
        if counts[j] > 0 and p[j] <= 0:
            return 1
    s[0] = acc
    return 0


def em_loop(at, counts, rho, btb, long max_iter, double tol, double eps0, double mono_tol):
    cdef double complex[:, :, ::1] at_v = np.ascontiguousarray(at, dtype=np.complex128)
    cdef double[::1] n_v = np.ascontiguousarray(counts, dtype=np.float64)
    rho_arr = np.array(rho, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] r_v = rho_arr
    cdef double complex[:, ::1] btb_v = np.ascontiguousarray(btb, dtype=np.complex128)
    cdef Py_ssize_t nset = at_v.shape[0], k = at_v.shape[1]
    cdef double[::1] p = np.empty(nset)
    cdef double[::1] wm1 = np.empty(nset)
    cdef double complex[:, ::1] e = np.empty((k, k), dtype=np.complex128)
    cdef double complex[:, ::1] er = np.empty((k, k), dtype=np.complex128)
    cdef double complex[:, ::1] d = np.empty((k, k), dtype=np.complex128)
    trace_arr = np.empty(max_iter + 1)
    cdef double[::1] trace = trace_arr
    cdef double total = 0.0, s = 0.0, delta, eps, scale, norm, acc
    cdef Py_ssize_t j, i, l
    cdef long it = 0
    cdef int status = STATUS_MAX_ITER
    cdef double complex z

    with nogil:
        for j in range(nset):
            total += n_v[j]
        if _probs(at_v, r_v, n_v, p, &s, nset, k):
            status = STATUS_ZERO_PROB
        else:
            acc = 0.0
            for j in range(nset):
                if n_v[j] > 0:
                    acc += n_v[j] * log(p[j] / s)
            trace[0] = acc
            while it < max_iter:
                for j in range(nset):
                    if n_v[j] > 0:
                        wm1[j] = (s * n_v[j] - total * p[j]) / (total * p[j])
                    else:
                        wm1[j] = -1.0
                for i in range(k):
                    for l in range(k):
                        z = 0
                        for j in range(nset):
                            z = z + wm1[j] * at_v[j, i, l]
                        e[i, l] = z
                _step_matrix(e, r_v, er, d, 1.0, k)
                delta = _delta(at_v, n_v, total, p, s, d, nset, k)
                if delta < 0.0:
                    eps = eps0
                    while True:
                        scale = eps / (1.0 + eps)
                        _step_matrix(e, r_v, er, d, scale, k)
                        delta = _delta(at_v, n_v, total, p, s, d, nset, k)
                        if delta >= -mono_tol:
                            break
                        eps *= 0.5
                        if eps < 1e-15:
                            status = STATUS_NONMONOTONE
                            break
                    if status == STATUS_NONMONOTONE:
                        break
                for i in range(k):
                    for l in range(k):
                        r_v[i, l] = r_v[i, l] + d[i, l]
                for i in range(k):
                    for l in range(i, k):
                        z = 0.5 * (r_v[i, l] + r_v[l, i].conjugate())
                        r_v[i, l] = z
                        r_v[l, i] = z.conjugate()
                norm = _tr_re(btb_v, r_v, k)
                for i in range(k):
                    for l in range(k):
                        r_v[i, l] = r_v[i, l] / norm
                it += 1
                if _probs(at_v, r_v, n_v, p, &s, nset, k):
                    status = STATUS_ZERO_PROB
                    break
                trace[it] = trace[it - 1] + delta
                if fabs(delta) < tol:
                    status = STATUS_CONVERGED
                    break
    if status == STATUS_ZERO_PROB and it == 0:
        return rho_arr, np.array([-np.inf]), 0, status
    return rho_arr, trace_arr[: it + 1].copy(), it, status


def rl_loop(c, f, r, long iters):
    cdef double[:, ::1] c_v = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[:, ::1] ct_v = np.ascontiguousarray(np.asarray(c_v).T)
    cdef double[:, ::1] f_v = np.ascontiguousarray(f, dtype=np.float64)
    cdef double[:, ::1] r_v = r
    cdef Py_ssize_t nv = c_v.shape[0], nn = c_v.shape[1], npts = f_v.shape[0]
    cdef double[::1] inv_colsum = 1.0 / np.asarray(c_v).sum(axis=0)
    cdef double[::1] p = np.empty(nv)
    cdef double[::1] acc = np.empty(nn)
    cdef double[::1] rr = np.empty(nn)
    cdef Py_ssize_t pt, v, n
    cdef long it
    cdef double x
    # inner loops run over contiguous rows so they vectorize without reassociation
    with nogil:
        for pt in range(npts):
            for n in range(nn):
                rr[n] = r_v[pt, n]
            for it in range(iters):
                for v in range(nv):
                    p[v] = 0.0
                for n in range(nn):
                    x = rr[n]
                    for v in range(nv):
                        p[v] += ct_v[n, v] * x
                for v in range(nv):
                    p[v] = f_v[pt, v] / p[v] if p[v] > 0 else 0.0
                for n in range(nn):
                    acc[n] = 0.0
                for v in range(nv):
                    x = p[v]
                    for n in range(nn):
                        acc[n] += c_v[v, n] * x
                for n in range(nn):
                    rr[n] *= acc[n] * inv_colsum[n]
            for n in range(nn):
                r_v[pt, n] = rr[n]
    return r
