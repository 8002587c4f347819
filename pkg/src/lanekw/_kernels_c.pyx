# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled flux kernels (see _kernels_py for the reference semantics)."""

from libc.math cimport exp, fmin, fmax

cdef enum FdKind:
    TRIANGULAR = 0
    MAX_SENSITIVITY = 1

cdef double MS_FREEFLOW_CUTOFF = 500.0

name = "cython"


cdef inline double _ms_flow(double vf, double cja, double rj,
                            double opeps, double rho) noexcept nogil:
    cdef double rbar = fmin(rho * opeps, rj)
    cdef double u
    if rbar <= 0.0:
        return rho * vf
    u = (cja / vf) * (rj / rbar - 1.0)
    if u > MS_FREEFLOW_CUTOFF:
        u = MS_FREEFLOW_CUTOFF
    return rho * (vf * (1.0 - exp(1.0 - exp(u))))


cdef inline void _dem_sup(int kind, double vf, double rc0, double cap0,
                          double rj, double cja, double eps, double rho,
                          double *dem, double *sup) noexcept nogil:
    cdef double opeps = 1.0 + eps
    cdef double cap = cap0 / opeps
    cdef double w, q
    if kind == TRIANGULAR:
        w = rc0 * vf / (rj - rc0)
        dem[0] = fmin(vf * rho, cap)
        sup[0] = fmin(cap, w * fmax(rj - rho * opeps, 0.0) / opeps)
    else:
        q = _ms_flow(vf, cja, rj, opeps, rho)
        if rho <= rc0 / opeps:
            dem[0] = q
            sup[0] = cap
        else:
            dem[0] = cap
            sup[0] = q


def demand_supply(int kind, double vf, double rc0, double cap0, double rj,
                  double cja, double[::1] eps, double[::1] rho):
    import numpy as np
    cdef Py_ssize_t n = rho.shape[0], i
    dem_arr = np.empty(n)
    sup_arr = np.empty(n)
    cdef double[::1] dem = dem_arr
    cdef double[::1] sup = sup_arr
    with nogil:
        for i in range(n):
            _dem_sup(kind, vf, rc0, cap0, rj, cja, eps[i], rho[i],
                     &dem[i], &sup[i])
    return dem_arr, sup_arr


def godunov_fluxes(int kind, double vf, double rc0, double cap0, double rj,
                   double cja, double[::1] eps, double[::1] rho,
                   double d_up, double s_dn, double[::1] q):
    cdef Py_ssize_t n = rho.shape[0], i
    cdef double dem_prev, sup_cur, dem_cur
    with nogil:
        _dem_sup(kind, vf, rc0, cap0, rj, cja, eps[0], rho[0],
                 &dem_prev, &sup_cur)
        q[0] = fmin(d_up, sup_cur)
        for i in range(1, n):
            _dem_sup(kind, vf, rc0, cap0, rj, cja, eps[i], rho[i],
                     &dem_cur, &sup_cur)
            q[i] = fmin(dem_prev, sup_cur)
            dem_prev = dem_cur
        q[n] = fmin(dem_prev, s_dn)


def apply_fluxes(double[::1] rho, double[::1] q, double dtdx, double[::1] out):
    cdef Py_ssize_t n = rho.shape[0], i
    with nogil:
        for i in range(n):
            out[i] = rho[i] + dtdx * (q[i] - q[i + 1])
