# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled monomial-table kernels.

A monomial table is three parallel arrays: coefficients (L,), integer powers
(L, d) and an output slot per monomial (L,).  Evaluating the table at a point
accumulates ``coef * prod(x**powers)`` into its slot, so one table can hold a
scalar polynomial, a gradient (d slots) or a Hessian (d*d slots).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _monomial(const long[:, ::1] powers, Py_ssize_t row,
                             const double[::1] x) noexcept nogil:
    cdef Py_ssize_t k, e
    cdef long p
    cdef double value = 1.0
    for k in range(powers.shape[1]):
        p = powers[row, k]
        for e in range(p):
            value *= x[k]
    return value


def poly_eval(const double[::1] coefs, const long[:, ::1] powers,
              const long[::1] slots, Py_ssize_t n_out, const double[::1] x):
    """Evaluate a monomial table at ``x``."""
    out = np.zeros(n_out)
    cdef double[::1] acc = out
    cdef Py_ssize_t row
    with nogil:
        for row in range(coefs.shape[0]):
            acc[slots[row]] += coefs[row] * _monomial(powers, row, x)
    return out


def poly_eval_segment(const double[::1] coefs, const long[:, ::1] powers,
                      const long[::1] slots, Py_ssize_t n_out,
                      const double[::1] x, const double[::1] y,
                      const double[::1] nodes, const double[::1] weights,
                      int xi_power):
    """Quadrature of ``xi**xi_power * table((1-xi) x + xi y)`` over [0, 1]."""
    out = np.zeros(n_out)
    cdef double[::1] acc = out
    cdef Py_ssize_t d = x.shape[0]
    point_arr = np.empty(d)
    cdef double[::1] point = point_arr
    cdef Py_ssize_t q, k, row, e
    cdef double xi, w
    with nogil:
        for q in range(nodes.shape[0]):
            xi = nodes[q]
            w = weights[q]
            for e in range(xi_power):
                w *= xi
            for k in range(d):
                point[k] = (1.0 - xi) * x[k] + xi * y[k]
            for row in range(coefs.shape[0]):
                acc[slots[row]] += w * coefs[row] * _monomial(powers, row, point)
    return out
