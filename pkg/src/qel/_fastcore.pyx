# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops: batched bicubic sampling and far-field boundary sums.

Semantics must match qel._slowcore exactly; qel.backend picks one at import.
"""

import numpy as np

cimport cython
from libc.math cimport floor, sqrt


cdef inline void _lagrange_weights(double s, double* w) nogil:
    # cubic Lagrange basis on nodes {0,1,2,3} evaluated at s
    w[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
    w[1] = s * (s - 2.0) * (s - 3.0) / 2.0
    w[2] = -s * (s - 1.0) * (s - 3.0) / 2.0
    w[3] = s * (s - 1.0) * (s - 2.0) / 6.0


def bicubic_many(double[:, ::1] values,
                 double r_min, double z_min,
                 double dr, double dz,
                 double r_max, double z_max,
                 double[::1] rq, double[::1] zq,
                 double[::1] out):
    """Sample a grid function at query points by 4x4 cubic Lagrange stencils.

    Queries outside [r_min, r_max] x [z_min, z_max] yield 0.  Stencils are
    clamped near edges, which keeps the rule exact on per-axis cubics.
    """
    cdef Py_ssize_t n = rq.shape[0]
    cdef Py_ssize_t nr = values.shape[0]
    cdef Py_ssize_t nz = values.shape[1]
    cdef Py_ssize_t k, ib, jb, a, b
    cdef double inv_dr = 1.0 / dr
    cdef double inv_dz = 1.0 / dz
    cdef double r, z, sr, sz, acc, row
    cdef double wr[4]
    cdef double wz[4]
    with nogil:
        for k in range(n):
            r = rq[k]
            z = zq[k]
            if r < r_min or r > r_max or z < z_min or z > z_max:
                out[k] = 0.0
                continue
            ib = <Py_ssize_t>floor((r - r_min) * inv_dr) - 1
            if ib < 0:
                ib = 0
            elif ib > nr - 4:
                ib = nr - 4
            jb = <Py_ssize_t>floor((z - z_min) * inv_dz) - 1
            if jb < 0:
                jb = 0
            elif jb > nz - 4:
                jb = nz - 4
            sr = (r - r_min) * inv_dr - ib
            sz = (z - z_min) * inv_dz - jb
            _lagrange_weights(sr, wr)
            _lagrange_weights(sz, wz)
            acc = 0.0
            for a in range(4):
                row = 0.0
                for b in range(4):
                    row += wz[b] * values[ib + a, jb + b]
                acc += wr[a] * row
            out[k] = acc


def farfield_sum(double[::1] rb, double[::1] zb,
                 double[::1] rs, double[::1] zs,
                 double[::1] gw,
                 double[::1] jtab, double beta_max,
                 double[::1] out):
    """Accumulate sum_s gw[s] * A^{-3/2} * J(beta) for each target point.

    A = rb^2 + rs^2 + (zb-zs)^2, beta = 2 rb rs / A.  J is given as a table
    uniform in beta on [0, beta_max]; lookups use linear interpolation.
    gw carries the source value times r^3 times the cell area.
    """
    cdef Py_ssize_t nb = rb.shape[0]
    cdef Py_ssize_t ns = rs.shape[0]
    cdef Py_ssize_t m = jtab.shape[0]
    cdef Py_ssize_t i, s, idx
    cdef double scale = (m - 1) / beta_max
    cdef double r, z, a, beta, t, jval, acc, zeta
    with nogil:
        for i in range(nb):
            r = rb[i]
            z = zb[i]
            acc = 0.0
            for s in range(ns):
                zeta = z - zs[s]
                a = r * r + rs[s] * rs[s] + zeta * zeta
                beta = 2.0 * r * rs[s] / a
                t = beta * scale
                idx = <Py_ssize_t>t
                if idx >= m - 1:
                    idx = m - 2
                t = t - idx
                jval = jtab[idx] * (1.0 - t) + jtab[idx + 1] * t
                acc += gw[s] * jval / (a * sqrt(a))
            out[i] = acc
