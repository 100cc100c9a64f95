# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pair kernels over same-basis branch blocks.

Both functions take branches pre-sorted into blocks of identical qubit basis
(``order`` and ``starts``, see :mod:`qubus_qec.kernels`); pairs in different
blocks are orthogonal and never visited.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline void _pair_weight(const double complex[:, ::1] amps, Py_ssize_t j,
                              Py_ssize_t l, Py_ssize_t skip, double *wr,
                              double *wi) noexcept nogil:
    cdef Py_ssize_t k
    cdef double re = 0.0, im = 0.0, ajr, aji, alr, ali, dr, di, mag
    for k in range(amps.shape[1]):
        if k == skip:
            continue
        ajr = amps[j, k].real
        aji = amps[j, k].imag
        alr = amps[l, k].real
        ali = amps[l, k].imag
        dr = ajr - alr
        di = aji - ali
        re -= 0.5 * (dr * dr + di * di)
        im += ajr * ali - aji * alr
    if re < -745.0:
        wr[0] = 0.0
        wi[0] = 0.0
        return
    mag = exp(re)
    wr[0] = mag * cos(im)
    wi[0] = mag * sin(im)


def gram_reduce(const i64[::1] order, const i64[::1] starts,
                const double complex[:, ::1] amps,
                const double complex[:, ::1] coeffs,
                const i64[::1] groups, Py_ssize_t n_groups, Py_ssize_t skip):
    cdef Py_ssize_t nb = starts.shape[0] - 1
    cdef Py_ssize_t R = coeffs.shape[1]
    cdef Py_ssize_t b, ii, ll, j, l, r, gj, gl
    cdef double wr, wi, cr, ci, xr, xi, yr, yi
    out_re = np.zeros((n_groups, n_groups), dtype=np.float64)
    out_im = np.zeros((n_groups, n_groups), dtype=np.float64)
    cdef double[:, ::1] Mr = out_re
    cdef double[:, ::1] Mi = out_im
    with nogil:
        for b in range(nb):
            for ii in range(starts[b], starts[b + 1]):
                j = order[ii]
                gj = groups[j]
                for ll in range(starts[b], starts[b + 1]):
                    l = order[ll]
                    _pair_weight(amps, j, l, skip, &wr, &wi)
                    if wr == 0.0 and wi == 0.0:
                        continue
                    cr = 0.0
                    ci = 0.0
                    for r in range(R):
                        # conj(c_j) * c_l
                        xr = coeffs[j, r].real
                        xi = -coeffs[j, r].imag
                        yr = coeffs[l, r].real
                        yi = coeffs[l, r].imag
                        cr += xr * yr - xi * yi
                        ci += xr * yi + xi * yr
                    gl = groups[l]
                    Mr[gj, gl] += cr * wr - ci * wi
                    Mi[gj, gl] += cr * wi + ci * wr
    return out_re + 1j * out_im


def gram_matrix(const i64[::1] order, const i64[::1] starts,
                const double complex[:, ::1] amps):
    cdef Py_ssize_t K = amps.shape[0]
    cdef Py_ssize_t nb = starts.shape[0] - 1
    cdef Py_ssize_t b, ii, ll, j, l
    cdef double wr, wi
    out = np.zeros((K, K), dtype=np.complex128)
    cdef double complex[:, ::1] G = out
    with nogil:
        for b in range(nb):
            for ii in range(starts[b], starts[b + 1]):
                j = order[ii]
                for ll in range(starts[b], starts[b + 1]):
                    l = order[ll]
                    _pair_weight(amps, j, l, -1, &wr, &wi)
                    G[j, l] = wr + 1j * wi
    return out


cdef extern from "math.h" nogil:
    double rint(double x)


cdef inline bint _rows_equal(const cnp.uint8_t[:, ::1] bits, const double[:, ::1] grid,
                             Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(bits.shape[1]):
        if bits[a, k] != bits[b, k]:
            return False
    for k in range(grid.shape[1]):
        if grid[a, k] != grid[b, k]:
            return False
    return True


def group_branches(const cnp.uint8_t[:, ::1] bits, const double[:, ::1] flat, double tol):
    """Distinct rows of ``(bits, round(flat / tol))`` in first-appearance order.

    ``flat`` is the amplitude array viewed as float64 pairs. Returns
    ``(first, inverse)``, or ``None`` when a rounded value leaves the exact
    integer range of a double.
    """
    cdef Py_ssize_t K = bits.shape[0]
    cdef Py_ssize_t q = bits.shape[1], w = flat.shape[1]
    cdef Py_ssize_t i, k, slot, size = 1, g, n_groups = 0
    cdef cnp.uint64_t h, v
    cdef double x
    grid_arr = np.empty((K, w), dtype=np.float64)
    cdef double[:, ::1] grid = grid_arr
    for i in range(K):
        for k in range(w):
            x = rint(flat[i, k] / tol)
            if not (x < 4.5e15 and x > -4.5e15):
                return None
            grid[i, k] = x + 0.0
    while size < 2 * K + 2:
        size <<= 1
    table_arr = np.full(size, -1, dtype=np.int64)
    first_arr = np.empty(K, dtype=np.int64)
    inv_arr = np.empty(K, dtype=np.int64)
    cdef i64[::1] table = table_arr
    cdef i64[::1] first = first_arr
    cdef i64[::1] inv = inv_arr
    with nogil:
        for i in range(K):
            h = 1469598103934665603ULL
            for k in range(q):
                h = (h ^ bits[i, k]) * 1099511628211ULL
            for k in range(w):
                v = <cnp.uint64_t> (<cnp.int64_t> grid[i, k])
                h = (h ^ v) * 1099511628211ULL
                h ^= h >> 29
            slot = <Py_ssize_t> (h & <cnp.uint64_t> (size - 1))
            while True:
                g = table[slot]
                if g < 0:
                    table[slot] = n_groups
                    first[n_groups] = i
                    inv[i] = n_groups
                    n_groups += 1
                    break
                if _rows_equal(bits, grid, first[g], i):
                    inv[i] = g
                    break
                slot = (slot + 1) & (size - 1)
    return first_arr[:n_groups].copy(), inv_arr
