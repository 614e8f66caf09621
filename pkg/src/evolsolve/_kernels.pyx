# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-marching kernels (see ``_kernels_py`` for the reference twin)."""

import numpy as np


def factor_tridiagonal(const double[::1] lower, const double[::1] diag, const double[::1] upper):
    """Thomas factorization without pivoting; returns ``(multipliers, inverse pivots)``."""
    cdef Py_ssize_t n = diag.shape[0], i
    mult_arr = np.zeros(n)
    inv_arr = np.zeros(n)
    cdef double[::1] mult = mult_arr
    cdef double[::1] inv = inv_arr
    cdef double piv = diag[0]
    if piv == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    inv[0] = 1.0 / piv
    for i in range(1, n):
        mult[i] = lower[i] * inv[i - 1]
        piv = diag[i] - mult[i] * upper[i - 1]
        if piv == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        inv[i] = 1.0 / piv
    return mult_arr, inv_arr


cdef inline void _solve(const double[::1] mult, const double[::1] inv, const double[::1] upper,
                        double[::1] rhs, double[:, ::1] out, Py_ssize_t row) noexcept nogil:
    cdef Py_ssize_t n = rhs.shape[0], i
    for i in range(1, n):
        rhs[i] -= mult[i] * rhs[i - 1]
    out[row, n - 1] = rhs[n - 1] * inv[n - 1]
    for i in range(n - 2, -1, -1):
        out[row, i] = (rhs[i] - upper[i] * out[row, i + 1]) * inv[i]


def march(const double[::1] mult, const double[::1] inv, const double[::1] upper, double rl, double rr,
          const double[::1] expl_lower, const double[::1] expl_diag, const double[::1] expl_upper, bint explicit,
          const double[:, ::1] forcing, const double[:, ::1] bnd, double[:, ::1] out):
    """Advance ``out[0]`` through ``out.shape[0] - 1`` steps of the factored step matrix.

    Interior right side: ``out[k] + explicit part + forcing[k + 1]``; boundary
    rows take ``bnd[k + 1]``. ``rl``/``rr`` fold the third boundary-row entry
    into a tridiagonal system.
    """
    cdef Py_ssize_t m = out.shape[0] - 1, n = out.shape[1], k, i
    rhs_arr = np.empty(n)
    cdef double[::1] rhs = rhs_arr
    with nogil:
        for k in range(m):
            for i in range(1, n - 1):
                rhs[i] = out[k, i] + forcing[k + 1, i]
            if explicit:
                for i in range(1, n - 1):
                    rhs[i] += (expl_lower[i] * out[k, i - 1] + expl_diag[i] * out[k, i]
                               + expl_upper[i] * out[k, i + 1])
            rhs[0] = bnd[k + 1, 0] - rl * rhs[1]
            rhs[n - 1] = bnd[k + 1, 1] - rr * rhs[n - 2]
            _solve(mult, inv, upper, rhs, out, k + 1)
