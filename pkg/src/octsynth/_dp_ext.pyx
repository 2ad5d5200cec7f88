# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward sweep; same arithmetic as ``_dp_numpy.backward_sweep``."""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport exp, INFINITY

from ._dp_numpy import shift_plan, step_cost_coeffs


cdef void _sweep(
    double[:, ::1] V,
    const double[::1] t_grid,
    const double[::1] x_grid,
    const double[::1] controls,
    const long long[::1] base,
    const double[::1] weight,
    const unsigned char[:, ::1] valid,
    double a,
    double lam,
    double e0,
    double e1,
    int n_threads,
) noexcept nogil:
    cdef Py_ssize_t n_t = V.shape[0] - 1
    cdef Py_ssize_t n_x = x_grid.shape[0]
    cdef Py_ssize_t n_u = controls.shape[0]
    cdef Py_ssize_t k, j, i, lo, hi
    cdef double disc, u, w, stage, cont, val, best
    for k in range(n_t - 1, -1, -1):
        disc = exp(-lam * t_grid[k])
        for j in prange(n_x, num_threads=n_threads, schedule="static"):
            best = INFINITY
            for i in range(n_u):
                if not valid[i, j]:
                    continue
                u = controls[i]
                w = weight[i]
                lo = j + base[i]
                hi = lo + 1 if w > 0.0 else lo
                stage = -disc * ((x_grid[j] + u) * e0 - a * u * e1)
                cont = (1.0 - w) * V[k + 1, lo] + w * V[k + 1, hi]
                val = stage + cont
                if val < best:
                    best = val
            V[k, j] = best


def backward_sweep(V, t_grid, x_grid, controls, double a, double lam, int n_threads=1):
    """Fill ``V`` backward in place and return the number of pruned transitions."""
    t_grid = np.ascontiguousarray(t_grid, dtype=np.float64)
    x_grid = np.ascontiguousarray(x_grid, dtype=np.float64)
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    n_t = V.shape[0] - 1
    n_x = x_grid.shape[0]
    dt = float(t_grid[1] - t_grid[0])
    dx = float(x_grid[1] - x_grid[0])
    e0, e1 = step_cost_coeffs(lam, dt)
    base, weight, valid = shift_plan(controls, a, dt, dx, n_x)
    valid_u8 = np.ascontiguousarray(valid, dtype=np.uint8)
    _sweep(V, t_grid, x_grid, controls, base, weight, valid_u8, a, lam, e0, e1, max(1, n_threads))
    return int(n_x * len(controls) - valid.sum()) * n_t
