"""Kinetostatics of elastic chains and their aggregation.

A chain's Cartesian stiffness couples the spring compliance felt at the
end-effector with the constraint columns of the passive joints through a
bordered (6+n)x(6+n) system: its inverse's leading 6x6 block maps
end-effector deflection to wrench. Under load the spring compliance is
corrected by the Hessian of the load's virtual work, which captures the
geometry change at the loaded equilibrium. Per-chain stiffness matrices
of a parallel manipulator sum in a common platform frame.

Residual norms are always taken per unit block (mm vs rad, N vs N*mm)
against separate tolerances; the units are not commensurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .chain import (
    ChainState,
    KinematicChain,
    _jacobian_arrays,
    _lenient_rigid_fit,
    _residual_full,
    force_hessians,
)
from .errors import (
    BucklingError,
    EquilibriumError,
    KinetostatError,
    SingularEquilibriumError,
)
from .geometry import (
    Deflection,
    Transform,
    Wrench,
    apply_deflection,
    pose_difference,
)

__all__ = [
    "SpringAggregate",
    "StiffnessMatrix",
    "EquilibriumState",
    "SolverOptions",
    "assemble_spring_matrix",
    "chain_stiffness_unloaded",
    "chain_stiffness_loaded",
    "solve_equilibrium",
    "aggregate_stiffness",
    "manipulator_equilibrium",
    "deflection_under_load",
]

_SYM_TOL = 1e-8  # relative symmetry accepted on 6x6 stiffness results
_SINGULAR_RCOND = 1e-12


@dataclass(frozen=True)
class SpringAggregate:
    """Block-diagonal stiffness of all virtual springs, in chain order."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=float) for b in self.blocks)
        for b in blocks:
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise KinetostatError("spring blocks must be square")
            try:
                np.linalg.cholesky(0.5 * (b + b.T))
            except np.linalg.LinAlgError:
                raise KinetostatError(
                    "spring block is not symmetric positive definite"
                ) from None
        object.__setattr__(self, "blocks", blocks)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = self.dimension
        k = np.zeros((m, m))
        at = 0
        for b in self.blocks:
            s = b.shape[0]
            k[at:at + s, at:at + s] = b
            at += s
        return k

    @property
    def dimension(self) -> int:
        return sum(b.shape[0] for b in self.blocks)


@dataclass(frozen=True)
class StiffnessMatrix:
    """6x6 Cartesian stiffness (N/mm, N/rad, N*mm/mm, N*mm/rad blocks)."""

    values: np.ndarray
    rank_deficient: bool = False
    null_space: np.ndarray | None = None  # bordered-system null basis, if any

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (6, 6):
            raise KinetostatError("stiffness must be 6x6")
        scale = np.abs(v).max()
        if scale > 0 and np.abs(v - v.T).max() > _SYM_TOL * scale:
            raise KinetostatError("stiffness result lost symmetry; this is a bug")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def translational(self) -> np.ndarray:
        return self.values[:3, :3]

    @property
    def rotational(self) -> np.ndarray:
        return self.values[3:, 3:]

    def compliance(self) -> np.ndarray:
        """Inverse map (deflection per unit wrench); pseudo-inverse when singular."""
        try:
            return np.linalg.inv(self.values)
        except np.linalg.LinAlgError:
            return np.linalg.pinv(self.values, rcond=_SINGULAR_RCOND, hermitian=True)


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and iteration caps for the equilibrium solvers."""

    translational_tol: float = 1e-6  # mm
    rotational_tol: float = 1e-9  # rad
    statics_tol: float = 1e-6  # N and N*mm
    max_iterations: int = 50

    def __post_init__(self):
        if not (self.translational_tol > 0 and self.rotational_tol > 0
                and self.statics_tol > 0 and self.max_iterations > 0):
            raise KinetostatError("solver options must be positive")


@dataclass(frozen=True)
class EquilibriumState:
    """Converged (or diagnosed) loaded configuration of one chain."""

    q: np.ndarray
    theta: np.ndarray
    load: Wrench
    pose: Transform  # the platform pose the chain was driven to
    iterations: int
    converged: bool
    residual_translation: float = 0.0  # mm
    residual_rotation: float = 0.0  # rad
    residual_statics: float = 0.0  # N / N*mm

    def state(self) -> ChainState:
        return ChainState(self.q, self.theta)


def assemble_spring_matrix(chain: KinematicChain) -> SpringAggregate:
    """Block-diagonal spring stiffness in chain coordinate order."""
    return SpringAggregate(chain.spring_blocks)


def _solve_linear(a: np.ndarray, rhs: np.ndarray):
    """Robust solve of a (possibly singular) symmetric system.

    Returns (solution, rank_deficient, null_basis). Singular but
    consistent systems get the minimum-norm solution; inconsistent ones
    raise SingularEquilibriumError.
    """
    scale = np.abs(a).max()
    if scale == 0:
        if np.abs(rhs).max() == 0:
            return np.zeros(a.shape[1]), True, np.eye(a.shape[1])
        raise SingularEquilibriumError("equilibrium solve singular: zero system matrix")
    try:
        x = np.linalg.solve(a, rhs)
        resid = np.abs(a @ x - rhs).max()
        ref = max(np.abs(rhs).max(), scale * np.abs(x).max())
        if resid <= 1e-8 * max(ref, 1e-300):
            return x, False, None
    except np.linalg.LinAlgError:
        pass
    u, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > _SINGULAR_RCOND * s[0]))
    x = vt[:rank].T @ ((u[:, :rank].T @ rhs) / s[:rank])
    resid = np.abs(a @ x - rhs).max()
    ref = max(np.abs(rhs).max(), 1.0)
    if resid > 1e-6 * ref:
        raise SingularEquilibriumError(
            "equilibrium solve singular: the linearized system is inconsistent "
            "(possible self-motion or unreachable deflection direction)"
        )
    return x, rank < a.shape[0], vt[rank:].T


def _invert_bordered(b: np.ndarray):
    """Inverse of the bordered matrix, with a rank-revealing fallback."""
    try:
        binv = np.linalg.inv(b)
        resid = np.abs(b @ binv - np.eye(b.shape[0])).max()
        if resid <= 1e-6:
            return binv, False, None
    except np.linalg.LinAlgError:
        pass
    u, s, vt = np.linalg.svd(b)
    rank = int(np.sum(s > _SINGULAR_RCOND * s[0]))
    binv = vt[:rank].T @ (u[:, :rank] / s[:rank]).T
    return binv, True, vt[rank:].T


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _cartesian_stiffness_core(j_theta, j_q, k_theta, hessians=None) -> StiffnessMatrix:
    """Leading 6x6 block of the inverse bordered system.

    Without Hessians this is the unloaded map; with them the spring
    stiffness is corrected by the load's virtual-work curvature and the
    passive block picks up the corresponding coupling terms.
    """
    n = j_q.shape[1]
    if hessians is None:
        k_f = np.linalg.inv(k_theta)
        b11 = _sym(j_theta @ k_f @ j_theta.T)
        b12 = j_q
        b22 = np.zeros((n, n))
    else:
        h_qq, h_qt, h_tq, h_tt = hessians
        corrected = k_theta - h_tt
        try:
            np.linalg.cholesky(_sym(corrected))
        except np.linalg.LinAlgError:
            raise BucklingError(
                "stability margin lost (buckling): spring stiffness minus the "
                "load Hessian is not positive definite"
            ) from None
        k_f = np.linalg.inv(corrected)
        b11 = _sym(j_theta @ k_f @ j_theta.T)
        b12 = j_q + j_theta @ k_f @ h_tq
        b22 = _sym(h_qq + h_qt @ k_f @ h_tq)

    b = np.zeros((6 + n, 6 + n))
    b[:6, :6] = b11
    b[:6, 6:] = b12
    b[6:, :6] = b12.T
    b[6:, 6:] = b22
    binv, deficient, null_basis = _invert_bordered(b)
    k = binv[:6, :6]
    return StiffnessMatrix(_sym(k), rank_deficient=deficient, null_space=null_basis)


def chain_stiffness_unloaded(chain: KinematicChain, q0) -> StiffnessMatrix:
    """Cartesian stiffness of one chain at an unloaded posture (theta = 0)."""
    q0 = np.ascontiguousarray(q0, dtype=float)
    theta0 = np.zeros(chain.n_virtual)
    jq, jt, _, _ = _jacobian_arrays(chain, q0, theta0)
    k_theta = assemble_spring_matrix(chain).matrix
    return _cartesian_stiffness_core(jt, jq, k_theta)


def chain_stiffness_loaded(chain: KinematicChain, eq: EquilibriumState) -> StiffnessMatrix:
    """Cartesian stiffness of one chain linearized at a loaded equilibrium."""
    if not eq.converged:
        raise KinetostatError("loaded stiffness needs a converged equilibrium state")
    q = np.ascontiguousarray(eq.q, dtype=float)
    theta = np.ascontiguousarray(eq.theta, dtype=float)
    jq, jt, _, _ = _jacobian_arrays(chain, q, theta)
    k_theta = assemble_spring_matrix(chain).matrix
    hess = force_hessians(chain, ChainState(q, theta), eq.load)
    return _cartesian_stiffness_core(jt, jq, k_theta, hessians=hess)


def aggregate_stiffness(per_chain) -> StiffnessMatrix:
    """Sum of per-chain stiffness matrices in the common platform frame."""
    per_chain = list(per_chain)
    if not per_chain:
        raise KinetostatError("aggregate_stiffness needs at least one chain")
    total = np.zeros((6, 6))
    for k in per_chain:
        total = total + k.values
    return StiffnessMatrix(total)


def _statics_residual(jq, jt, k_theta, f6, theta):
    r_theta = jt.T @ f6 - k_theta @ theta
    r_q = jq.T @ f6
    return max(np.abs(r_theta).max(initial=0.0), np.abs(r_q).max(initial=0.0))


def solve_equilibrium(chain: KinematicChain, target: Transform,
                      start: ChainState | None = None,
                      options: SolverOptions = SolverOptions()) -> EquilibriumState:
    """Static equilibrium of one chain driven to a platform pose.

    Iterates the linearized kinetostatic system: at each step the
    kinematics are relinearized, the bordered system yields the wrench
    and the passive increment, and the spring coordinates follow from the
    spring law. The right-hand side carries the pose residual plus the
    current spring-motion term so the unloaded pose is an exact fixed
    point. A step that worsens the pose residual is halved up to eight
    times before the solve is declared diverged.
    """
    if start is None:
        start = _lenient_rigid_fit(chain, target)
    q = np.array(start.q, dtype=float)
    theta = np.array(start.theta, dtype=float)
    if q.shape[0] != chain.n_passive or theta.shape[0] != chain.n_virtual:
        raise KinetostatError("start state does not match the chain")
    f6 = np.zeros(6)
    n = chain.n_passive
    k_theta = assemble_spring_matrix(chain).matrix
    k_theta_inv = np.linalg.inv(k_theta)

    def residual6(qv, tv):
        return _residual_full(chain, qv, tv, target)

    def within_kinematic(r6v):
        return np.abs(r6v[:3]).max() <= options.translational_tol \
            and np.abs(r6v[3:]).max() <= options.rotational_tol

    # One linearized solve per iteration; the state is checked after each
    # update, so `iterations` counts the solves. The entry check makes an
    # already-balanced start (the unloaded pose) an exact one-iteration
    # fixed point with the state returned untouched.
    jq, jt, r, p = _jacobian_arrays(chain, q, theta)
    r6 = pose_difference(Transform(r, p), target).as_array()
    stat = _statics_residual(jq, jt, k_theta, f6, theta)
    if within_kinematic(r6) and stat <= options.statics_tol:
        return EquilibriumState(q, theta, Wrench.from_array(f6), target, 1, True,
                                np.abs(r6[:3]).max(), np.abs(r6[3:]).max(), stat)

    for it in range(1, options.max_iterations + 1):
        s_theta = _sym(jt @ k_theta_inv @ jt.T)
        b = np.zeros((6 + n, 6 + n))
        b[:6, :6] = s_theta
        b[:6, 6:] = jq
        b[6:, :6] = jq.T
        rhs = np.zeros(6 + n)
        rhs[:6] = r6 + jt @ theta
        sol, _, _ = _solve_linear(b, rhs)
        f_new = sol[:6]
        dq = sol[6:]
        theta_new = k_theta_inv @ (jt.T @ f_new)

        kin_metric = max(np.abs(r6[:3]).max(), 1e3 * np.abs(r6[3:]).max())
        alpha = 1.0
        accepted = False
        for _ in range(9):
            q_try = q + alpha * dq
            theta_try = theta + alpha * (theta_new - theta)
            r_try = residual6(q_try, theta_try)
            # A step counts as kinematic divergence only if it both grows
            # the pose residual and leaves it above tolerance.
            if within_kinematic(r_try) \
                    or max(np.abs(r_try[:3]).max(), 1e3 * np.abs(r_try[3:]).max()) < kin_metric:
                q, theta = q_try, theta_try
                f6 = f6 + alpha * (f_new - f6)
                accepted = True
                break
            alpha *= 0.5

        jq, jt, r, p = _jacobian_arrays(chain, q, theta)
        r6 = pose_difference(Transform(r, p), target).as_array()
        stat = _statics_residual(jq, jt, k_theta, f6, theta)
        converged = within_kinematic(r6) and stat <= options.statics_tol
        if converged or not accepted:
            return EquilibriumState(q, theta, Wrench.from_array(f6), target, it, converged,
                                    np.abs(r6[:3]).max(), np.abs(r6[3:]).max(), stat)

    return EquilibriumState(q, theta, Wrench.from_array(f6), target,
                            options.max_iterations, False,
                            np.abs(r6[:3]).max(), np.abs(r6[3:]).max(), stat)


def manipulator_equilibrium(chains, target: Transform,
                            options: SolverOptions = SolverOptions()):
    """Equilibrium of every chain at a shared platform pose.

    Returns (total wrench, per-chain states); the total is the chain-order
    sum of the per-chain wrenches. Raises EquilibriumError naming the
    chains that failed to converge.
    """
    chains = list(chains)
    if not chains:
        raise KinetostatError("manipulator_equilibrium needs at least one chain")
    states = [solve_equilibrium(c, target, None, options) for c in chains]
    failed = [i for i, s in enumerate(states) if not s.converged]
    if failed:
        raise EquilibriumError(
            f"chains {failed} failed to reach equilibrium at the requested pose",
            states=states,
        )
    total = np.zeros(6)
    for s in states:
        total = total + s.load.as_array()
    return Wrench.from_array(total), states


def deflection_under_load(chains, load: Wrench,
                          options: SolverOptions = SolverOptions(),
                          unloaded_pose: Transform = None) -> Deflection:
    """Platform deflection that balances an applied wrench.

    Outer damped Newton on the platform pose, using the aggregated loaded
    stiffness as the Jacobian, until the manipulator's total wrench
    matches the load within the statics tolerance. The returned
    deflection is measured from ``unloaded_pose``.
    """
    if unloaded_pose is None:
        raise KinetostatError("deflection_under_load needs the unloaded platform pose")
    target6 = load.as_array()
    pose = unloaded_pose

    def wrench_gap(p: Transform):
        total, states = manipulator_equilibrium(chains, p, options)
        return target6 - total.as_array(), states

    gap, states = wrench_gap(pose)

    def gap_metric(g):
        return max(np.abs(g[:3]).max(), np.abs(g[3:]).max())

    for _ in range(options.max_iterations):
        if np.abs(gap[:3]).max() <= options.statics_tol \
                and np.abs(gap[3:]).max() <= options.statics_tol:
            return pose_difference(unloaded_pose, pose)
        k = aggregate_stiffness(
            [chain_stiffness_loaded(c, s) for c, s in zip(chains, states)]
        )
        step, *_ = np.linalg.lstsq(k.values, gap, rcond=None)
        m0 = gap_metric(gap)
        alpha = 1.0
        for _ in range(9):
            pose_try = apply_deflection(pose, Deflection.from_array(alpha * step))
            gap_try, states_try = wrench_gap(pose_try)
            if gap_metric(gap_try) < m0:
                pose, gap, states = pose_try, gap_try, states_try
                break
            alpha *= 0.5
        else:
            raise EquilibriumError(
                "load balance stalled: no pose step reduces the wrench gap",
                states=states,
            )
    raise EquilibriumError("load balance did not converge", states=states)
