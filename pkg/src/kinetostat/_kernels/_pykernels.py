"""Pure numpy fallback kernels.

Arithmetic mirrors the compiled extension step for step so both backends
agree to the last few ulps; the compiled module is only a speed-up.
"""

from __future__ import annotations

import numpy as np

from .program import OP_FIXED, OP_TRANSLATE, SRC_PASSIVE

BACKEND = "pure"


def forward(prog, q, theta):
    """End-effector frame: returns (rotation 3x3, position 3)."""
    r = np.eye(3)
    p = np.zeros(3)
    ops, axes, srcs, idxs = prog.ops, prog.axes, prog.srcs, prog.idxs
    scales, offsets = prog.scales, prog.offsets
    for s in range(prog.n_steps):
        op = ops[s]
        if op == OP_FIXED:
            f = idxs[s]
            p = p + r @ prog.fixed_p[f]
            r = r @ prog.fixed_r[f]
            continue
        coords = q if srcs[s] == SRC_PASSIVE else theta
        v = scales[s] * coords[idxs[s]] + offsets[s]
        a = axes[s]
        if op == OP_TRANSLATE:
            p = p + v * r[:, a]
        else:
            c, sn = np.cos(v), np.sin(v)
            j, k = (a + 1) % 3, (a + 2) % 3
            cj = r[:, j].copy()
            ck = r[:, k].copy()
            r = r.copy()
            r[:, j] = cj * c + ck * sn
            r[:, k] = ck * c - cj * sn
    return r, p


def jacobian(prog, q, theta):
    """Screw-axis twist Jacobians.

    Returns (jq 6 x n_passive, jt 6 x n_virtual, rotation, position).
    Rows 0..2 are translational (mm per unit coordinate), rows 3..5
    rotational. Columns accumulate over every step driven by the same
    coordinate, so internally coupled joints come out right.
    """
    S = prog.n_steps
    step_axis = np.zeros((S, 3))  # world direction of each coordinate step
    step_point = np.zeros((S, 3))  # frame origin where the step acts

    r = np.eye(3)
    p = np.zeros(3)
    ops, axes, srcs, idxs = prog.ops, prog.axes, prog.srcs, prog.idxs
    scales, offsets = prog.scales, prog.offsets
    for s in range(S):
        op = ops[s]
        if op == OP_FIXED:
            f = idxs[s]
            p = p + r @ prog.fixed_p[f]
            r = r @ prog.fixed_r[f]
            continue
        a = axes[s]
        step_axis[s] = r[:, a]
        step_point[s] = p
        coords = q if srcs[s] == SRC_PASSIVE else theta
        v = scales[s] * coords[idxs[s]] + offsets[s]
        if op == OP_TRANSLATE:
            p = p + v * r[:, a]
        else:
            c, sn = np.cos(v), np.sin(v)
            j, k = (a + 1) % 3, (a + 2) % 3
            cj = r[:, j].copy()
            ck = r[:, k].copy()
            r = r.copy()
            r[:, j] = cj * c + ck * sn
            r[:, k] = ck * c - cj * sn

    jq = np.zeros((6, prog.n_passive))
    jt = np.zeros((6, prog.n_virtual))
    for s in range(S):
        op = ops[s]
        if op == OP_FIXED:
            continue
        col = jq[:, idxs[s]] if srcs[s] == SRC_PASSIVE else jt[:, idxs[s]]
        d = scales[s] * step_axis[s]
        if op == OP_TRANSLATE:
            col[:3] += d
        else:
            col[:3] += np.cross(d, p - step_point[s])
            col[3:] += d
    return jq, jt, r, p
