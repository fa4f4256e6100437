# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled two-block sampler loop.

Contract mirrors _gibbs_py.run_chain; see that module for the readable
reference.  The backward substitution solves L' u = z with L lower
triangular, and all variates arrive pregenerated so no RNG state lives here.
"""

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc


def run_chain(double[:, ::1] Z, double[::1] y, double[:, ::1] L, double[::1] mu,
              double b_sigma, double ridge,
              double[::1] gammas, double[:, ::1] normals,
              double fixed_sigma2, double[::1] alpha0,
              double[:, ::1] alpha_out, double[::1] sigma2_out):
    cdef Py_ssize_t n = Z.shape[0]
    cdef Py_ssize_t p = Z.shape[1]
    cdef Py_ssize_t iters = normals.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc, rss, quad, rate, sigma2, sd
    cdef double *alpha = <double *> malloc(p * sizeof(double))
    cdef double *u = <double *> malloc(p * sizeof(double))
    if alpha == NULL or u == NULL:
        free(alpha)
        free(u)
        raise MemoryError()
    try:
        with nogil:
            for j in range(p):
                alpha[j] = alpha0[j]
            for t in range(iters):
                rss = 0.0
                for i in range(n):
                    acc = y[i]
                    for j in range(p):
                        acc -= Z[i, j] * alpha[j]
                    rss += acc * acc
                quad = 0.0
                for j in range(p):
                    quad += alpha[j] * alpha[j]
                rate = b_sigma + 0.5 * rss + 0.5 * ridge * quad
                if fixed_sigma2 > 0:
                    sigma2 = fixed_sigma2
                else:
                    sigma2 = rate / gammas[t]
                sd = sqrt(sigma2)
                for j in range(p - 1, -1, -1):
                    acc = normals[t, j]
                    for i in range(j + 1, p):
                        acc -= L[i, j] * u[i]
                    u[j] = acc / L[j, j]
                for j in range(p):
                    alpha[j] = mu[j] + sd * u[j]
                    alpha_out[t, j] = alpha[j]
                sigma2_out[t] = sigma2
    finally:
        free(alpha)
        free(u)
