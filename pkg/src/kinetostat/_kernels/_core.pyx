# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chain kernels; same contract as _pykernels."""

from libc.math cimport cos, sin

import numpy as np

BACKEND = "compiled"

cdef enum:
    OP_FIXED = 0
    OP_TRANSLATE = 1
    OP_ROTATE = 2
    SRC_PASSIVE = 0


def forward(prog, const double[::1] q, const double[::1] theta):
    """End-effector frame: returns (rotation 3x3, position 3)."""
    cdef const int[::1] ops = prog.ops
    cdef const int[::1] axes = prog.axes
    cdef const int[::1] srcs = prog.srcs
    cdef const int[::1] idxs = prog.idxs
    cdef const double[::1] scales = prog.scales
    cdef const double[::1] offsets = prog.offsets
    cdef const double[:, :, ::1] fixed_r = prog.fixed_r
    cdef const double[:, ::1] fixed_p = prog.fixed_p

    cdef double r[3][3]
    cdef double tmp[3][3]
    cdef double p[3]
    cdef Py_ssize_t s, i, jj
    cdef Py_ssize_t n_steps = ops.shape[0]
    cdef int op, a, j, k, f
    cdef double v, c, sn, cj, ck, t0, t1, t2

    for i in range(3):
        p[i] = 0.0
        for jj in range(3):
            r[i][jj] = 1.0 if i == jj else 0.0

    for s in range(n_steps):
        op = ops[s]
        if op == OP_FIXED:
            f = idxs[s]
            t0 = fixed_p[f, 0]
            t1 = fixed_p[f, 1]
            t2 = fixed_p[f, 2]
            for i in range(3):
                p[i] = p[i] + (r[i][0] * t0 + r[i][1] * t1 + r[i][2] * t2)
            for i in range(3):
                for jj in range(3):
                    tmp[i][jj] = (r[i][0] * fixed_r[f, 0, jj]
                                  + r[i][1] * fixed_r[f, 1, jj]
                                  + r[i][2] * fixed_r[f, 2, jj])
            for i in range(3):
                for jj in range(3):
                    r[i][jj] = tmp[i][jj]
        else:
            if srcs[s] == SRC_PASSIVE:
                v = scales[s] * q[idxs[s]] + offsets[s]
            else:
                v = scales[s] * theta[idxs[s]] + offsets[s]
            a = axes[s]
            if op == OP_TRANSLATE:
                for i in range(3):
                    p[i] = p[i] + v * r[i][a]
            else:
                c = cos(v)
                sn = sin(v)
                j = (a + 1) % 3
                k = (a + 2) % 3
                for i in range(3):
                    cj = r[i][j]
                    ck = r[i][k]
                    r[i][j] = cj * c + ck * sn
                    r[i][k] = ck * c - cj * sn

    out_r = np.empty((3, 3))
    out_p = np.empty(3)
    cdef double[:, ::1] vr = out_r
    cdef double[::1] vp = out_p
    for i in range(3):
        vp[i] = p[i]
        for jj in range(3):
            vr[i, jj] = r[i][jj]
    return out_r, out_p


def jacobian(prog, const double[::1] q, const double[::1] theta):
    """Screw-axis twist Jacobians; returns (jq, jt, rotation, position)."""
    cdef const int[::1] ops = prog.ops
    cdef const int[::1] axes = prog.axes
    cdef const int[::1] srcs = prog.srcs
    cdef const int[::1] idxs = prog.idxs
    cdef const double[::1] scales = prog.scales
    cdef const double[::1] offsets = prog.offsets
    cdef const double[:, :, ::1] fixed_r = prog.fixed_r
    cdef const double[:, ::1] fixed_p = prog.fixed_p

    cdef Py_ssize_t n_steps = ops.shape[0]
    step_axis_arr = np.zeros((n_steps, 3))
    step_point_arr = np.zeros((n_steps, 3))
    cdef double[:, ::1] step_axis = step_axis_arr
    cdef double[:, ::1] step_point = step_point_arr

    cdef double r[3][3]
    cdef double tmp[3][3]
    cdef double p[3]
    cdef Py_ssize_t s, i, jj
    cdef int op, a, j, k, f
    cdef double v, c, sn, cj, ck, t0, t1, t2
    cdef double d0, d1, d2, w0, w1, w2

    for i in range(3):
        p[i] = 0.0
        for jj in range(3):
            r[i][jj] = 1.0 if i == jj else 0.0

    for s in range(n_steps):
        op = ops[s]
        if op == OP_FIXED:
            f = idxs[s]
            t0 = fixed_p[f, 0]
            t1 = fixed_p[f, 1]
            t2 = fixed_p[f, 2]
            for i in range(3):
                p[i] = p[i] + (r[i][0] * t0 + r[i][1] * t1 + r[i][2] * t2)
            for i in range(3):
                for jj in range(3):
                    tmp[i][jj] = (r[i][0] * fixed_r[f, 0, jj]
                                  + r[i][1] * fixed_r[f, 1, jj]
                                  + r[i][2] * fixed_r[f, 2, jj])
            for i in range(3):
                for jj in range(3):
                    r[i][jj] = tmp[i][jj]
            continue
        a = axes[s]
        for i in range(3):
            step_axis[s, i] = r[i][a]
            step_point[s, i] = p[i]
        if srcs[s] == SRC_PASSIVE:
            v = scales[s] * q[idxs[s]] + offsets[s]
        else:
            v = scales[s] * theta[idxs[s]] + offsets[s]
        if op == OP_TRANSLATE:
            for i in range(3):
                p[i] = p[i] + v * r[i][a]
        else:
            c = cos(v)
            sn = sin(v)
            j = (a + 1) % 3
            k = (a + 2) % 3
            for i in range(3):
                cj = r[i][j]
                ck = r[i][k]
                r[i][j] = cj * c + ck * sn
                r[i][k] = ck * c - cj * sn

    jq_arr = np.zeros((6, prog.n_passive))
    jt_arr = np.zeros((6, prog.n_virtual))
    cdef double[:, ::1] jq = jq_arr
    cdef double[:, ::1] jt = jt_arr
    cdef double[:, ::1] out
    cdef Py_ssize_t col

    for s in range(n_steps):
        op = ops[s]
        if op == OP_FIXED:
            continue
        if srcs[s] == SRC_PASSIVE:
            out = jq
        else:
            out = jt
        col = idxs[s]
        d0 = scales[s] * step_axis[s, 0]
        d1 = scales[s] * step_axis[s, 1]
        d2 = scales[s] * step_axis[s, 2]
        if op == OP_TRANSLATE:
            out[0, col] += d0
            out[1, col] += d1
            out[2, col] += d2
        else:
            w0 = p[0] - step_point[s, 0]
            w1 = p[1] - step_point[s, 1]
            w2 = p[2] - step_point[s, 2]
            out[0, col] += d1 * w2 - d2 * w1
            out[1, col] += d2 * w0 - d0 * w2
            out[2, col] += d0 * w1 - d1 * w0
            out[3, col] += d0
            out[4, col] += d1
            out[5, col] += d2

    out_r = np.empty((3, 3))
    out_p = np.empty(3)
    cdef double[:, ::1] vr = out_r
    cdef double[::1] vp = out_p
    for i in range(3):
        vp[i] = p[i]
        for jj in range(3):
            vr[i, jj] = r[i][jj]
    return jq_arr, jt_arr, out_r, out_p
