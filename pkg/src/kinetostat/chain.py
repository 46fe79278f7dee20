"""Serial elastic chain model: elements, kinematics, Jacobians, Hessians.

A chain is an ordered sequence of elements. Rigid links contribute fixed
transforms; actuated joints are position-locked at a nominal value and
elastic only through a series spring coordinate; passive joints carry no
reaction; 6-dof virtual springs lower to six elementary motions
(translations x, y, z then rotations x, y, z). Passive coordinates form
the vector q (length n), elastic coordinates the vector theta (length m,
one per actuated joint plus six per 6-dof spring), in chain order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from ._kernels.program import (
    OP_ROTATE,
    OP_TRANSLATE,
    SRC_PASSIVE,
    SRC_VIRTUAL,
    ProgramBuilder,
)
from .errors import DimensionError, GeometryError, KinetostatError, OutOfWorkspaceError
from .geometry import Deflection, Transform, Wrench, axis_index, pose_difference

__all__ = [
    "RigidLink",
    "ActuatedJoint",
    "PassiveJoint",
    "VirtualSpring6",
    "ParallelogramLink",
    "KinematicChain",
    "ChainState",
    "forward_kinematics",
    "jacobians",
    "force_hessians",
    "rigid_nominal_configuration",
    "rigid_full_configuration",
]

_JOINT_KINDS = ("prismatic", "revolute")

# Symmetry tolerance (relative) accepted for 6x6 spring matrices.
_SPRING_SYM_TOL = 1e-9


@dataclass(frozen=True)
class RigidLink:
    """Constant transform between neighbouring elements."""

    transform: Transform


@dataclass(frozen=True)
class ActuatedJoint:
    """Drive joint locked at ``nominal`` with a series control spring.

    The spring coordinate (one entry of theta) models the finite
    stiffness of the drive and its control loop; the nominal value is a
    frozen per-posture parameter, not a degree of freedom.
    """

    kind: str
    axis: str
    nominal: float
    control_stiffness: float  # N/mm for prismatic, N*mm/rad for revolute

    def __post_init__(self):
        if self.kind not in _JOINT_KINDS:
            raise KinetostatError(f"unknown joint kind {self.kind!r}")
        axis_index(self.axis)
        if not np.isfinite(self.nominal):
            raise KinetostatError("actuated joint nominal must be finite")
        if not self.control_stiffness > 0:
            raise KinetostatError("control stiffness must be positive")


@dataclass(frozen=True)
class PassiveJoint:
    """Unactuated joint; its coordinate carries zero reaction at equilibrium."""

    kind: str
    axis: str

    def __post_init__(self):
        if self.kind not in _JOINT_KINDS:
            raise KinetostatError(f"unknown joint kind {self.kind!r}")
        axis_index(self.axis)


@dataclass(frozen=True)
class VirtualSpring6:
    """6-dof elastic joint: translations x, y, z then rotations x, y, z.

    The stiffness matrix mixes units (N/mm, N/rad, N*mm/mm, N*mm/rad) and
    must be symmetric and positive definite.
    """

    stiffness: np.ndarray

    def __post_init__(self):
        k = np.array(self.stiffness, dtype=float)
        if k.shape != (6, 6):
            raise KinetostatError("spring stiffness must be 6x6")
        scale = np.abs(k).max()
        if not scale > 0 or not np.isfinite(scale):
            raise KinetostatError("spring stiffness must be finite and nonzero")
        if np.abs(k - k.T).max() > _SPRING_SYM_TOL * scale:
            raise KinetostatError("spring stiffness must be symmetric")
        try:
            np.linalg.cholesky(0.5 * (k + k.T))
        except np.linalg.LinAlgError:
            raise KinetostatError("spring stiffness must be positive definite") from None
        k.setflags(write=False)
        object.__setattr__(self, "stiffness", k)


@dataclass(frozen=True)
class ParallelogramLink:
    """Dual-bar link as a single coupled joint.

    One passive coordinate drives rotation +q about ``axis``, a bar-length
    translation along local x, then rotation -q, which is the circular
    translation a parallelogram imposes on its coupler (the coupler never
    rotates). Elasticity of the bars is modelled by a separate 6-dof
    spring placed after this element.
    """

    axis: str
    length: float

    def __post_init__(self):
        if self.axis not in ("y", "z"):
            raise KinetostatError("parallelogram axis must be y or z (x is degenerate)")
        if not self.length > 0:
            raise KinetostatError("parallelogram length must be positive")


ChainElement = RigidLink | ActuatedJoint | PassiveJoint | VirtualSpring6 | ParallelogramLink


@dataclass(frozen=True)
class KinematicChain:
    """Ordered elements from the fixed base to the end-effector."""

    elements: tuple

    def __init__(self, elements):
        elements = tuple(elements)
        for e in elements:
            if not isinstance(
                e, (RigidLink, ActuatedJoint, PassiveJoint, VirtualSpring6, ParallelogramLink)
            ):
                raise KinetostatError(f"not a chain element: {e!r}")
        object.__setattr__(self, "elements", elements)

    @cached_property
    def program(self) -> _kernels.ChainProgram:
        b = ProgramBuilder()
        for e in self.elements:
            if isinstance(e, RigidLink):
                b.fixed(e.transform.rotation, e.transform.translation)
            elif isinstance(e, ActuatedJoint):
                op = OP_TRANSLATE if e.kind == "prismatic" else OP_ROTATE
                b.axis_step(op, axis_index(e.axis), SRC_VIRTUAL, b.new_virtual(),
                            offset=e.nominal)
            elif isinstance(e, PassiveJoint):
                op = OP_TRANSLATE if e.kind == "prismatic" else OP_ROTATE
                b.axis_step(op, axis_index(e.axis), SRC_PASSIVE, b.new_passive())
            elif isinstance(e, VirtualSpring6):
                base = [b.new_virtual() for _ in range(6)]
                for a in range(3):
                    b.axis_step(OP_TRANSLATE, a, SRC_VIRTUAL, base[a])
                for a in range(3):
                    b.axis_step(OP_ROTATE, a, SRC_VIRTUAL, base[3 + a])
            else:  # ParallelogramLink
                i = b.new_passive()
                a = axis_index(e.axis)
                b.axis_step(OP_ROTATE, a, SRC_PASSIVE, i, scale=1.0)
                b.fixed(np.eye(3), np.array([e.length, 0.0, 0.0]))
                b.axis_step(OP_ROTATE, a, SRC_PASSIVE, i, scale=-1.0)
        return b.finish()

    @property
    def n_passive(self) -> int:
        return self.program.n_passive

    @property
    def n_virtual(self) -> int:
        return self.program.n_virtual

    @cached_property
    def spring_blocks(self) -> tuple:
        """Per-spring stiffness blocks in theta order (1x1 or 6x6)."""
        blocks = []
        for e in self.elements:
            if isinstance(e, ActuatedJoint):
                blocks.append(np.array([[e.control_stiffness]]))
            elif isinstance(e, VirtualSpring6):
                blocks.append(np.asarray(e.stiffness))
        return tuple(blocks)

    @cached_property
    def actuated_theta_indices(self) -> tuple:
        """theta slots belonging to actuated-joint series springs."""
        idx, iv = [], 0
        for e in self.elements:
            if isinstance(e, ActuatedJoint):
                idx.append(iv)
                iv += 1
            elif isinstance(e, VirtualSpring6):
                iv += 6
        return tuple(idx)

    def with_actuated_nominals(self, nominals) -> "KinematicChain":
        """Copy of the chain with actuated joints locked at new nominals."""
        nominals = list(nominals)
        n_act = sum(isinstance(e, ActuatedJoint) for e in self.elements)
        if len(nominals) != n_act:
            raise DimensionError(f"expected {n_act} nominals, got {len(nominals)}")
        out = []
        for e in self.elements:
            if isinstance(e, ActuatedJoint):
                out.append(ActuatedJoint(e.kind, e.axis, float(nominals.pop(0)),
                                         e.control_stiffness))
            else:
                out.append(e)
        return KinematicChain(out)

    def with_spring_scale(self, s: float) -> "KinematicChain":
        """Copy of the chain with every spring stiffness multiplied by s."""
        if not s > 0:
            raise KinetostatError("spring scale must be positive")
        out = []
        for e in self.elements:
            if isinstance(e, ActuatedJoint):
                out.append(ActuatedJoint(e.kind, e.axis, e.nominal, s * e.control_stiffness))
            elif isinstance(e, VirtualSpring6):
                out.append(VirtualSpring6(s * e.stiffness))
            else:
                out.append(e)
        return KinematicChain(out)

    def zero_state(self) -> "ChainState":
        return ChainState(np.zeros(self.n_passive), np.zeros(self.n_virtual))


@dataclass(frozen=True)
class ChainState:
    """Passive coordinates q and elastic coordinates theta."""

    q: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        q = np.ascontiguousarray(self.q, dtype=float)
        theta = np.ascontiguousarray(self.theta, dtype=float)
        if q.ndim != 1 or theta.ndim != 1:
            raise DimensionError("chain state vectors must be one-dimensional")
        if not (np.isfinite(q).all() and np.isfinite(theta).all()):
            raise DimensionError("chain state must be finite")
        q.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta", theta)


def _check_state(chain: KinematicChain, q: np.ndarray, theta: np.ndarray):
    if q.shape[0] != chain.n_passive or theta.shape[0] != chain.n_virtual:
        raise DimensionError(
            f"state dimensions ({q.shape[0]}, {theta.shape[0]}) do not match "
            f"chain (n={chain.n_passive}, m={chain.n_virtual})"
        )


def _fk_arrays(chain: KinematicChain, q: np.ndarray, theta: np.ndarray):
    return _kernels.forward(chain.program, q, theta)


def _jacobian_arrays(chain: KinematicChain, q: np.ndarray, theta: np.ndarray):
    return _kernels.jacobian(chain.program, q, theta)


def forward_kinematics(chain: KinematicChain, state: ChainState) -> Transform:
    """End-effector pose: ordered product of the element transforms."""
    _check_state(chain, state.q, state.theta)
    r, p = _fk_arrays(chain, state.q, state.theta)
    return Transform(r, p)


def jacobians(chain: KinematicChain, state: ChainState):
    """Twist Jacobians (J_theta 6 x m, J_q 6 x n) at the given state.

    Column j is the end-effector twist per unit velocity of coordinate j:
    rows 0..2 translational (mm), rows 3..5 rotational, evaluated from
    each coordinate's screw axis at the current configuration.
    """
    _check_state(chain, state.q, state.theta)
    jq, jt, _, _ = _jacobian_arrays(chain, state.q, state.theta)
    return jt, jq


def force_hessians(chain: KinematicChain, state: ChainState, load: Wrench):
    """Second derivatives of the load's virtual work along the chain.

    Returns (H_qq, H_qtheta, H_thetaq, H_thetatheta): derivatives of the
    generalized-force gradient (J_q^T F, J_theta^T F) by central
    differences with per-coordinate step scaling, block-symmetrized. The
    rotational part of the motion is contracted against the moment with
    the same twist convention the Jacobians use, so H_qtheta equals
    H_thetaq transposed by construction.
    """
    _check_state(chain, state.q, state.theta)
    f6 = load.as_array()
    n, m = chain.n_passive, chain.n_virtual
    prog = chain.program

    def grad(q, theta):
        jq, jt, _, _ = _kernels.jacobian(prog, q, theta)
        return jq.T @ f6, jt.T @ f6

    h_qq = np.zeros((n, n))
    h_tq = np.zeros((m, n))  # d(g_theta)/dq
    h_qt = np.zeros((n, m))  # d(g_q)/dtheta
    h_tt = np.zeros((m, m))

    q0 = np.array(state.q)
    t0 = np.array(state.theta)
    for j in range(n):
        h = 1e-6 * max(1.0, abs(q0[j]))
        qp, qm = q0.copy(), q0.copy()
        qp[j] += h
        qm[j] -= h
        gq_p, gt_p = grad(qp, t0)
        gq_m, gt_m = grad(qm, t0)
        h_qq[:, j] = (gq_p - gq_m) / (2.0 * h)
        h_tq[:, j] = (gt_p - gt_m) / (2.0 * h)
    for j in range(m):
        h = 1e-6 * max(1.0, abs(t0[j]))
        tp, tm = t0.copy(), t0.copy()
        tp[j] += h
        tm[j] -= h
        gq_p, gt_p = grad(q0, tp)
        gq_m, gt_m = grad(q0, tm)
        h_qt[:, j] = (gq_p - gq_m) / (2.0 * h)
        h_tt[:, j] = (gt_p - gt_m) / (2.0 * h)

    h_qq = 0.5 * (h_qq + h_qq.T)
    h_tt = 0.5 * (h_tt + h_tt.T)
    h_qt = 0.5 * (h_qt + h_tq.T)
    return h_qq, h_qt, h_qt.T, h_tt


def _pose_residual(chain, q, target):
    """target (-) current rigid pose, as a 6-vector."""
    r, p = _fk_arrays(chain, q, np.zeros(chain.n_virtual))
    d = pose_difference(Transform(r, p), target)
    return d.as_array()


# Rotation residuals weighted to millimetres for step-acceptance tests.
_RAD_TO_MM = 1.0e3


def _residual_metric(r6):
    return max(np.abs(r6[:3]).max(initial=0.0), _RAD_TO_MM * np.abs(r6[3:]).max(initial=0.0))


def _gauss_newton_rigid(chain, target, q0, columns, max_iterations, strict,
                        trans_tol=1e-9, rot_tol=1e-12):
    """Damped Gauss-Newton on the rigid model over the given J columns.

    ``columns`` selects which coordinates vary: passive indices and,
    optionally, actuated theta slots (for full inverse kinematics).
    strict=True raises OutOfWorkspaceError on non-convergence; otherwise
    the best iterate is returned (used to seed equilibrium solves).
    """
    q = np.array(q0, dtype=float)
    theta_cols, passive_cols = columns
    theta = np.zeros(chain.n_virtual)
    for _ in range(max_iterations):
        r6 = _residual_full(chain, q, theta, target)
        if np.abs(r6[:3]).max(initial=0.0) <= trans_tol and \
           np.abs(r6[3:]).max(initial=0.0) <= rot_tol:
            return q, theta, True
        jq, jt, _, _ = _jacobian_arrays(chain, q, theta)
        j_all = np.hstack([jq[:, passive_cols], jt[:, theta_cols]]) \
            if theta_cols else jq[:, passive_cols]
        step, *_ = np.linalg.lstsq(j_all, r6, rcond=None)
        m0 = _residual_metric(r6)
        alpha = 1.0
        for _ in range(9):
            q_try = q.copy()
            theta_try = theta.copy()
            q_try[passive_cols] += alpha * step[: len(passive_cols)]
            if theta_cols:
                theta_try[theta_cols] += alpha * step[len(passive_cols):]
            if _residual_metric(_residual_full(chain, q_try, theta_try, target)) < m0:
                q, theta = q_try, theta_try
                break
            alpha *= 0.5
        else:
            break  # no descent direction left
    r6 = _residual_full(chain, q, theta, target)
    ok = np.abs(r6[:3]).max(initial=0.0) <= trans_tol and \
        np.abs(r6[3:]).max(initial=0.0) <= rot_tol
    if strict and not ok:
        raise OutOfWorkspaceError(
            "rigid inverse kinematics did not converge "
            f"(residual {np.abs(r6[:3]).max(initial=0.0):.3e} mm, "
            f"{np.abs(r6[3:]).max(initial=0.0):.3e} rad): target unreachable"
        )
    return q, theta, ok


def _residual_full(chain, q, theta, target):
    r, p = _fk_arrays(chain, q, theta)
    try:
        d = pose_difference(Transform(r, p), target)
    except GeometryError:
        # half-turn away from the target: report a saturated residual
        return np.array([np.inf] * 6)
    return d.as_array()


def rigid_nominal_configuration(chain: KinematicChain, target: Transform,
                                guess: ChainState | None = None,
                                max_iterations: int = 100) -> ChainState:
    """Passive coordinates of the rigid model (theta frozen at zero) at a pose.

    Damped Gauss-Newton on the passive Jacobian, converging to 1e-9 mm /
    1e-12 rad. Raises OutOfWorkspaceError when the target is not
    reachable by the rigid model.
    """
    n = chain.n_passive
    q0 = np.zeros(n) if guess is None else np.asarray(guess.q, dtype=float)
    if q0.shape[0] != n:
        raise DimensionError("guess length does not match the chain")
    q, _, _ = _gauss_newton_rigid(
        chain, target, q0, ([], list(range(n))), max_iterations, strict=True
    )
    return ChainState(q, np.zeros(chain.n_virtual))


def rigid_full_configuration(chain: KinematicChain, target: Transform,
                             guess: ChainState | None = None,
                             max_iterations: int = 100) -> tuple:
    """Rigid inverse kinematics over actuated and passive coordinates.

    Solves for the actuated nominals together with q (used to retarget a
    generic chain at a new workspace point). Returns (chain with updated
    nominals, ChainState at that posture).
    """
    n = chain.n_passive
    act = list(chain.actuated_theta_indices)
    q0 = np.zeros(n) if guess is None else np.asarray(guess.q, dtype=float)
    q, theta, _ = _gauss_newton_rigid(
        chain, target, q0, (act, list(range(n))), max_iterations, strict=True
    )
    old = [e.nominal for e in chain.elements if isinstance(e, ActuatedJoint)]
    new_nominals = [v + theta[i] for v, i in zip(old, act)]
    retargeted = chain.with_actuated_nominals(new_nominals)
    return retargeted, ChainState(q, np.zeros(chain.n_virtual))


def _lenient_rigid_fit(chain: KinematicChain, target: Transform,
                       guess: ChainState | None = None,
                       max_iterations: int = 60) -> ChainState:
    """Best-effort rigid fit used to seed loaded-equilibrium solves.

    Loaded targets are normally not reachable by the rigid model, so
    non-convergence here is expected and not an error.
    """
    n = chain.n_passive
    q0 = np.zeros(n) if guess is None else np.asarray(guess.q, dtype=float)
    q, _, _ = _gauss_newton_rigid(
        chain, target, q0, ([], list(range(n))), max_iterations, strict=False
    )
    return ChainState(q, np.zeros(chain.n_virtual))


def pose_residual_of(chain: KinematicChain, state: ChainState, target: Transform) -> Deflection:
    """Deflection from the state's pose to the target (diagnostic helper)."""
    _check_state(chain, state.q, state.theta)
    return Deflection.from_array(_residual_full(chain, state.q, state.theta, target))
