# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Must stay numerically in step with ``_fallback.py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


def bootstrap_slopes(const double[::1] lx, const double[::1] ly, const long long[:, ::1] idx):
    """OLS slope of ly on lx for every row of resample indices."""
    cdef Py_ssize_t n_res = idx.shape[0], n = idx.shape[1]
    cdef Py_ssize_t r, k
    cdef long long j
    cdef double xm, ym, sxx, sxy, dx
    out = np.empty(n_res, dtype=np.float64)
    cdef double[::1] o = out
    for r in range(n_res):
        xm = 0.0
        ym = 0.0
        for k in range(n):
            j = idx[r, k]
            xm += lx[j]
            ym += ly[j]
        xm /= n
        ym /= n
        sxx = 0.0
        sxy = 0.0
        for k in range(n):
            j = idx[r, k]
            dx = lx[j] - xm
            sxx += dx * dx
            sxy += dx * (ly[j] - ym)
        o[r] = sxy / sxx
    return out


cdef inline double _data_terms(double tokens, double b_d, double exp_d, double u, double r_star,
                               double gamma, double r0, double p_exp) nogil:
    cdef double rep, d_eff, over, pen
    rep = tokens / u - 1.0
    if rep < 0.0:
        rep = 0.0
    if tokens <= u:
        d_eff = tokens
    else:
        d_eff = u * (1.0 + r_star * (1.0 - exp(-rep / r_star)))
    over = rep - r0
    pen = 0.0
    if over > 0.0:
        pen = gamma * pow(over, p_exp)
    return b_d / pow(d_eff, exp_d) + pen


cdef inline double _loss(double n_params, double tokens, double e_floor, double a_n, double exp_n,
                         double b_d, double exp_d, double u, double r_star, double gamma,
                         double r0, double p_exp) nogil:
    return e_floor + a_n / pow(n_params, exp_n) + _data_terms(tokens, b_d, exp_d, u, r_star, gamma, r0, p_exp)


def sim_grid(const double[::1] params_m, const double[::1] tps, const double[::1] budgets_min,
             double e_floor, double a_n, double exp_n, double b_d, double exp_d,
             double u, double r_star, double gamma, double r0, double p_exp):
    """Simulated loss for every (model, budget) pair; shape (models, budgets)."""
    cdef Py_ssize_t m = params_m.shape[0], nb = budgets_min.shape[0], i, j
    cdef double head
    out = np.empty((m, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(m):
        # the size term is shared by the whole row
        head = e_floor + a_n / pow(params_m[i] * 1e6, exp_n)
        for j in range(nb):
            o[i, j] = head + _data_terms(tps[i] * budgets_min[j] * 60.0, b_d, exp_d, u, r_star, gamma, r0, p_exp)
    return out


def sim_rmse(const double[::1] params_m, const double[::1] tps, const double[::1] budgets_min,
             const double[::1] target, double e_floor, double a_n, double exp_n, double b_d,
             double exp_d, double u, double r_star, double gamma, double r0, double p_exp):
    """Root-mean-square error of simulated loss against target over paired cells."""
    cdef Py_ssize_t n = target.shape[0], k
    cdef double acc = 0.0, d
    for k in range(n):
        d = _loss(params_m[k] * 1e6, tps[k] * budgets_min[k] * 60.0, e_floor, a_n, exp_n,
                  b_d, exp_d, u, r_star, gamma, r0, p_exp) - target[k]
        acc += d * d
    return sqrt(acc / n)
