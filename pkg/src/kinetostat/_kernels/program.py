"""Flat numeric encoding of a kinematic chain for the hot kernels.

A chain is lowered to a straight-line program of steps executed left to
right. Each step is either a constant transform or a single-axis motion
driven by one coordinate:

    value = scale * coords[index] + offset

where the coordinate comes from the passive vector q or the elastic
vector theta. Several steps may reference the same coordinate (that is
how internally coupled joints such as parallelogram links are lowered).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OP_FIXED = 0
OP_TRANSLATE = 1
OP_ROTATE = 2

SRC_PASSIVE = 0
SRC_VIRTUAL = 1


@dataclass(frozen=True)
class ChainProgram:
    ops: np.ndarray  # intc[S]
    axes: np.ndarray  # intc[S]
    srcs: np.ndarray  # intc[S]
    idxs: np.ndarray  # intc[S]  coordinate index, or fixed-transform index
    scales: np.ndarray  # f8[S]
    offsets: np.ndarray  # f8[S]
    fixed_r: np.ndarray  # f8[F,3,3]
    fixed_p: np.ndarray  # f8[F,3]
    n_passive: int
    n_virtual: int

    @property
    def n_steps(self) -> int:
        return self.ops.shape[0]


class ProgramBuilder:
    """Accumulates steps and freezes them into contiguous arrays."""

    def __init__(self):
        self._ops = []
        self._axes = []
        self._srcs = []
        self._idxs = []
        self._scales = []
        self._offsets = []
        self._fixed_r = []
        self._fixed_p = []
        self.n_passive = 0
        self.n_virtual = 0

    def fixed(self, rotation: np.ndarray, translation: np.ndarray) -> None:
        self._ops.append(OP_FIXED)
        self._axes.append(0)
        self._srcs.append(0)
        self._idxs.append(len(self._fixed_r))
        self._scales.append(0.0)
        self._offsets.append(0.0)
        self._fixed_r.append(np.ascontiguousarray(rotation, dtype=float))
        self._fixed_p.append(np.ascontiguousarray(translation, dtype=float))

    def axis_step(self, op: int, axis: int, src: int, idx: int,
                  scale: float = 1.0, offset: float = 0.0) -> None:
        self._ops.append(op)
        self._axes.append(axis)
        self._srcs.append(src)
        self._idxs.append(idx)
        self._scales.append(scale)
        self._offsets.append(offset)

    def new_passive(self) -> int:
        self.n_passive += 1
        return self.n_passive - 1

    def new_virtual(self) -> int:
        self.n_virtual += 1
        return self.n_virtual - 1

    def finish(self) -> ChainProgram:
        nf = len(self._fixed_r)
        return ChainProgram(
            ops=np.asarray(self._ops, dtype=np.intc),
            axes=np.asarray(self._axes, dtype=np.intc),
            srcs=np.asarray(self._srcs, dtype=np.intc),
            idxs=np.asarray(self._idxs, dtype=np.intc),
            scales=np.asarray(self._scales, dtype=float),
            offsets=np.asarray(self._offsets, dtype=float),
            fixed_r=(np.stack(self._fixed_r) if nf else np.zeros((0, 3, 3))),
            fixed_p=(np.stack(self._fixed_p) if nf else np.zeros((0, 3))),
            n_passive=self.n_passive,
            n_virtual=self.n_virtual,
        )
