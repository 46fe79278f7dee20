"""Bundled translational manipulator models with orthogonal drive rails.

Both builders produce three serial chains whose rails run along x, y and
z (cyclic images of a single template chain), meeting at a point
platform. The first variant uses a single equivalent limb of doubled
cross-section with passive U-joints at both ends; the second replaces
the limb with a dual-bar parallelogram, which suppresses one passive
rotation per leg and stiffens the platform rotationally.

The default dimensions and spring values are plausible machine-tool
numbers chosen for the bundled configs; every check shipped with the
package asserts structure and ordering, never specific magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .beams import BeamSegment, beam_compliance
from .chain import (
    ActuatedJoint,
    KinematicChain,
    ParallelogramLink,
    PassiveJoint,
    RigidLink,
    VirtualSpring6,
)
from .errors import KinetostatError, OutOfWorkspaceError
from .geometry import Transform, elementary
from .statics import StiffnessMatrix, aggregate_stiffness, chain_stiffness_unloaded

__all__ = [
    "OrthoglideParams",
    "build_orthoglide_puu",
    "build_orthoglide_prpar",
    "parallelogram_compliance",
    "closed_form_ik",
    "puu_passive_nominal",
    "prpar_passive_nominal",
    "DEFAULT_REFERENCE_POINTS",
]

DEFAULT_REFERENCE_POINTS = {
    "Q0": (0.0, 0.0, 0.0),
    "Q1": (-73.65, -73.65, -73.65),
    "Q2": (126.35, 126.35, 126.35),
}


def _default_bar() -> BeamSegment:
    # 45 mm square aluminium bar
    return BeamSegment(length=260.0, elastic_modulus=70000.0, shear_modulus=26300.0,
                       area=2025.0, I_y=341718.75, I_z=341718.75, J_torsion=576547.9)


def _default_foot() -> BeamSegment:
    # U-joint bracket, 60 mm square aluminium
    return BeamSegment(length=80.0, elastic_modulus=70000.0, shear_modulus=26300.0,
                       area=3600.0, I_y=1080000.0, I_z=1080000.0, J_torsion=1822176.0)


@dataclass(frozen=True)
class OrthoglideParams:
    """Geometry and elasticity of the bundled orthogonal-rail models."""

    leg_length: float = 260.0
    rail_offset: float = 410.0  # rail origin behind the workspace centre, mm
    actuator_stiffness: float = 2500.0  # N/mm, drive plus control loop
    bar: BeamSegment = field(default_factory=_default_bar)
    foot: BeamSegment = field(default_factory=_default_foot)
    foot_offset: float = 80.0  # slider to U-joint centre, local z, mm
    parallelogram_separation: float = 165.0  # bar spacing, mm
    reference_points: dict = field(
        default_factory=lambda: dict(DEFAULT_REFERENCE_POINTS))

    def __post_init__(self):
        if not (self.leg_length > 0 and self.rail_offset > 0
                and self.actuator_stiffness > 0):
            raise KinetostatError("lengths and stiffness must be positive")
        if self.parallelogram_separation < 0:
            raise KinetostatError("parallelogram separation cannot be negative")
        if abs(self.bar.length - self.leg_length) > 1e-9:
            raise KinetostatError("bar length must equal the leg length")

    def scaled_stiffness(self, factor: float) -> "OrthoglideParams":
        """Every elastic parameter scaled by ``factor`` (geometry unchanged)."""
        return replace(
            self,
            actuator_stiffness=factor * self.actuator_stiffness,
            bar=self.bar.scaled_section(factor),
            foot=self.foot.scaled_section(factor),
        )

    def reference_point(self, name: str) -> np.ndarray:
        try:
            return np.asarray(self.reference_points[name], dtype=float)
        except KeyError:
            raise KinetostatError(f"unknown reference point {name!r}") from None


# Cyclic axis permutation x -> y -> z -> x; chains 0, 1, 2 are its powers.
_CYCLE = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def chain_frames() -> list:
    return [np.eye(3), _CYCLE, _CYCLE @ _CYCLE]


def closed_form_ik(params: OrthoglideParams, point) -> list:
    """Per-chain (rho, q1, q2) from the orthogonal loop closure.

    The U-joint bracket on the slider and the matching attachment lug on
    the platform carry the same local offset, so they cancel in the loop
    closure: the leg spans from (rho - rail_offset, 0, 0) to the platform
    point in chain-local coordinates and runs parallel to the rail at the
    workspace centre. Raises OutOfWorkspaceError when the transverse
    offset exceeds the leg length.
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise KinetostatError("workspace point must be a 3-vector")
    L = params.leg_length
    out = []
    for r in chain_frames():
        ploc = r.T @ p
        w = L * L - ploc[1] ** 2 - ploc[2] ** 2
        if w <= 0.0:
            raise OutOfWorkspaceError(
                f"point {p.tolist()} outside the leg reach (transverse offset too large)")
        s = np.sqrt(w)
        rho = ploc[0] + params.rail_offset - s
        q1 = np.arctan2(ploc[1], s)
        q2 = -np.arcsin(ploc[2] / L)
        out.append((rho, q1, q2))
    return out


_X_TO_Z = elementary("rotation", "y", -np.pi / 2).rotation  # beam axis x -> chain z


def _foot_spring(params: OrthoglideParams) -> VirtualSpring6:
    # The bracket beam runs along local z (slider to U-joint); rotate its
    # tip stiffness from the beam frame into the chain frame.
    ad = np.zeros((6, 6))
    ad[:3, :3] = _X_TO_Z
    ad[3:, 3:] = _X_TO_Z
    k = ad @ beam_compliance(params.foot).stiffness() @ ad.T
    return VirtualSpring6(0.5 * (k + k.T))


def _limb_spring(params: OrthoglideParams) -> VirtualSpring6:
    # equivalent single limb replacing the bar pair: doubled section
    return VirtualSpring6(beam_compliance(params.bar.scaled_section(2.0)).stiffness())


def _chain_common(params, r, rho):
    base = Transform(r, r @ np.array([-params.rail_offset, 0.0, 0.0]))
    bracket = Transform(np.eye(3), np.array([0.0, 0.0, params.foot_offset]))
    return [
        RigidLink(base),
        ActuatedJoint("prismatic", "x", rho, params.actuator_stiffness),
        RigidLink(bracket),
        _foot_spring(params),
    ]


def _tool(params, r) -> RigidLink:
    # Platform attachment lug (mirror of the slider bracket, so the leg
    # runs parallel to the rail at the workspace centre), then realign
    # the chain frame with the world frame.
    return RigidLink(Transform(r.T, np.array([0.0, 0.0, -params.foot_offset])))


def build_orthoglide_puu(params: OrthoglideParams, point) -> list:
    """Three U-joint chains (single equivalent limbs) posed at ``point``.

    Each chain: rail link, prismatic drive with its series spring, foot
    spring, U-joint (z then y), rigid leg, leg spring, U-joint (y then
    z), platform link. Four passive coordinates and thirteen elastic
    coordinates per chain; at the rigid nominal posture the end U-joint
    mirrors the start one, so the platform never rotates.
    """
    leg = params.leg_length
    chains = []
    for r, (rho, _, _) in zip(chain_frames(), closed_form_ik(params, point)):
        elements = _chain_common(params, r, rho) + [
            PassiveJoint("revolute", "z"),
            PassiveJoint("revolute", "y"),
            RigidLink(elementary("translation", "x", leg)),
            _limb_spring(params),
            PassiveJoint("revolute", "y"),
            PassiveJoint("revolute", "z"),
            _tool(params, r),
        ]
        chains.append(KinematicChain(elements))
    return chains


def puu_passive_nominal(params: OrthoglideParams, point) -> list:
    """Closed-form passive coordinates (q1, q2, -q2, -q1) per chain."""
    return [np.array([q1, q2, -q2, -q1]) for _, q1, q2 in closed_form_ik(params, point)]


def prpar_passive_nominal(params: OrthoglideParams, point) -> list:
    """Closed-form passive coordinates (q1, q2, -q1) per chain."""
    return [np.array([q1, q2, -q1]) for _, q1, q2 in closed_form_ik(params, point)]


def _bar_chain(params: OrthoglideParams, offset: float) -> KinematicChain:
    """One parallelogram bar: pin, elastic bar, pin, between the end frames."""
    bar = params.bar
    shift = np.array([0.0, 0.0, offset])
    return KinematicChain([
        RigidLink(Transform(np.eye(3), shift)),
        PassiveJoint("revolute", "y"),
        RigidLink(elementary("translation", "x", bar.length)),
        VirtualSpring6(beam_compliance(bar).stiffness()),
        PassiveJoint("revolute", "y"),
        RigidLink(Transform(np.eye(3), -shift)),
    ])


def parallelogram_compliance(params: OrthoglideParams) -> StiffnessMatrix:
    """6x6 stiffness of the dual-bar parallelogram as a super-element.

    The upper and lower bars (pinned at both ends, separated across the
    pin axis) form two chains sharing the proximal and distal frames;
    their Cartesian stiffnesses sum. The result is rank five: the
    parallelogram's own circular-translation freedom carries no
    stiffness and is represented by the element's passive coordinate
    when the super-element is used inside a chain.
    """
    h = params.parallelogram_separation
    per_bar = []
    for off in (0.5 * h, -0.5 * h):
        c = _bar_chain(params, off)
        per_bar.append(chain_stiffness_unloaded(c, np.zeros(c.n_passive)))
    return aggregate_stiffness(per_bar)


def _parallelogram_spring(params: OrthoglideParams) -> VirtualSpring6:
    """Parallelogram stiffness with its mechanism direction made finite.

    The super-element's null direction coincides with the parallelogram
    passive coordinate of the chain it is mounted in, so the motion stays
    free regardless of the filler value; a mid-spectrum filler keeps the
    spring block well conditioned.
    """
    k = parallelogram_compliance(params).values
    w, v = np.linalg.eigh(k)
    positive = w[w > 1e-9 * w.max()]
    if positive.size == 6:
        return VirtualSpring6(k)
    filler = float(np.exp(np.mean(np.log(positive))))
    w = np.where(w > 1e-9 * w.max(), w, filler)
    reg = (v * w) @ v.T
    return VirtualSpring6(0.5 * (reg + reg.T))


def build_orthoglide_prpar(params: OrthoglideParams, point) -> list:
    """Three parallelogram-leg chains posed at ``point``.

    The leg is the parallelogram super-element: one passive rotation at
    the foot, the coupled circular-translation coordinate, the
    parallelogram spring, and one passive rotation at the platform (one
    fewer independent passive rotation than the U-joint variant). The
    bar pair must have a nonzero separation.
    """
    if params.parallelogram_separation <= 0:
        raise KinetostatError(
            "degenerate parallelogram: bar separation must be positive for this architecture")
    leg = params.leg_length
    spring = _parallelogram_spring(params)
    chains = []
    for r, (rho, _, _) in zip(chain_frames(), closed_form_ik(params, point)):
        elements = _chain_common(params, r, rho) + [
            PassiveJoint("revolute", "z"),
            ParallelogramLink("y", leg),
            spring,
            PassiveJoint("revolute", "z"),
            _tool(params, r),
        ]
        chains.append(KinematicChain(elements))
    return chains
