"""Rigid-body transforms and the small value types built on them.

Conventions used throughout the package:

* lengths in mm, forces in N, moments in N*mm, angles in rad;
* a transform is stored as an orthonormal rotation matrix plus a
  translation vector (the 4x4 homogeneous form is a view);
* orientation 3-vectors are rotation-matrix logarithms (axis * angle),
  principal branch, which is unique below pi and agrees with any
  small-angle Euler triple to first order;
* 6-vectors stack the translational part on top of the rotational part:
  wrench = (force, moment), deflection = (translation, rotation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

__all__ = [
    "Transform",
    "Pose",
    "Wrench",
    "Deflection",
    "compose",
    "elementary",
    "pose_of",
    "pose_difference",
    "rotation_log",
    "rotation_exp",
    "axis_index",
]

_AXES = {"x": 0, "y": 1, "z": 2}

# Constructor guard; library-generated transforms stay well below this.
_ROTATION_TOL = 1e-9


def axis_index(axis: str) -> int:
    """Map an axis name 'x'|'y'|'z' to its coordinate index."""
    try:
        return _AXES[axis]
    except KeyError:
        raise GeometryError(f"unknown axis {axis!r}; expected one of x, y, z") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Transform:
    """Rigid-body pose: orthonormal rotation plus translation (mm)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = _frozen(self.rotation)
        t = _frozen(self.translation)
        if r.shape != (3, 3) or t.shape != (3,):
            raise GeometryError("Transform needs a 3x3 rotation and a 3-vector translation")
        err = np.abs(r.T @ r - np.eye(3)).max()
        if not err <= _ROTATION_TOL:
            raise GeometryError(f"rotation is not orthonormal (|R^T R - I| = {err:.3e})")
        det = np.linalg.det(r)
        if not abs(det - 1.0) <= _ROTATION_TOL:
            raise GeometryError(f"rotation has det {det:.15f}, expected +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Transform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Transform":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise GeometryError("expected a 4x4 homogeneous matrix")
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous view of the transform."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        """Map a point (mm) through the transform."""
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


@dataclass(frozen=True)
class Pose:
    """Position (mm) and log-map orientation (rad), principal branch."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = _frozen(self.position)
        o = _frozen(self.orientation)
        if p.shape != (3,) or o.shape != (3,):
            raise GeometryError("Pose needs two 3-vectors")
        if not np.linalg.norm(o) < np.pi:
            raise GeometryError("orientation magnitude must stay below pi (principal branch)")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", o)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation])


@dataclass(frozen=True)
class Wrench:
    """Force (N) and moment (N*mm) acting at the end-effector."""

    force: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        f = _frozen(self.force)
        m = _frozen(self.moment)
        if f.shape != (3,) or m.shape != (3,):
            raise GeometryError("Wrench needs two 3-vectors")
        if not (np.isfinite(f).all() and np.isfinite(m).all()):
            raise GeometryError("Wrench components must be finite")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "moment", m)

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, a: np.ndarray) -> "Wrench":
        a = np.asarray(a, dtype=float).reshape(6)
        return cls(a[:3], a[3:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.force, self.moment])


@dataclass(frozen=True)
class Deflection:
    """Small displacement: translation (mm) and rotation (rad)."""

    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        t = _frozen(self.translation)
        r = _frozen(self.rotation)
        if t.shape != (3,) or r.shape != (3,):
            raise GeometryError("Deflection needs two 3-vectors")
        if not (np.isfinite(t).all() and np.isfinite(r).all()):
            raise GeometryError("Deflection components must be finite")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", r)

    @classmethod
    def zero(cls) -> "Deflection":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, a: np.ndarray) -> "Deflection":
        a = np.asarray(a, dtype=float).reshape(6)
        return cls(a[:3], a[3:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.translation, self.rotation])


def compose(a: Transform, b: Transform) -> Transform:
    """Transform product a*b (apply b first in b's frame, then a)."""
    return Transform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def elementary(kind: str, axis: str, value: float) -> Transform:
    """Single-axis translation (mm) or rotation (rad) operator."""
    i = axis_index(axis)
    if kind == "translation":
        t = np.zeros(3)
        t[i] = value
        return Transform(np.eye(3), t)
    if kind == "rotation":
        c, s = np.cos(value), np.sin(value)
        r = np.eye(3)
        j, k = (i + 1) % 3, (i + 2) % 3
        r[j, j] = c
        r[k, k] = c
        r[k, j] = s
        r[j, k] = -s
        return Transform(r, np.zeros(3))
    raise GeometryError(f"unknown transform kind {kind!r}; expected translation or rotation")


def _hat(w: np.ndarray) -> np.ndarray:
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_log(r: np.ndarray) -> np.ndarray:
    """Axis-angle 3-vector of a rotation matrix, principal branch.

    Raises GeometryError within ~1e-9 rad of the pi branch point, where the
    axis sign is ambiguous.
    """
    tr = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arccos(tr)
    if angle < 1e-10:
        # R ~ I + hat(w): first-order extraction is exact enough here
        return np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) * 0.5
    if angle > np.pi - 1e-9:
        raise GeometryError("rotation angle at the pi branch point; axis-angle is ambiguous")
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return w * (angle / (2.0 * np.sin(angle)))


def rotation_exp(w: np.ndarray) -> np.ndarray:
    """Rotation matrix of an axis-angle 3-vector (Rodrigues)."""
    w = np.asarray(w, dtype=float)
    angle = np.linalg.norm(w)
    k = _hat(w)
    if angle < 1e-8:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = np.sin(angle) / angle
    b = (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + a * k + b * (k @ k)


def pose_of(t: Transform) -> Pose:
    """Extract position and log-map orientation from a transform."""
    return Pose(t.translation.copy(), rotation_log(t.rotation))


def pose_difference(a: Transform, b: Transform) -> Deflection:
    """Displacement taking pose a to pose b.

    Translation is the plain difference; rotation is the log map of the
    relative rotation b*a^-1, so for small relative rotations the result
    matches the spatial twist convention used by the chain Jacobians.
    """
    return Deflection(
        b.translation - a.translation,
        rotation_log(b.rotation @ a.rotation.T),
    )


def transform_from_pose(pose: Pose) -> Transform:
    """Inverse of pose_of."""
    return Transform(rotation_exp(pose.orientation), pose.position.copy())


def apply_deflection(t: Transform, d: Deflection) -> Transform:
    """Displace a pose by a small world-frame deflection.

    Inverse of ``pose_difference(t, .)``: translation adds, rotation
    premultiplies by exp(hat(rotation)).
    """
    return Transform(rotation_exp(d.rotation) @ t.rotation, t.translation + d.translation)
