"""Link compliance: analytic beams, serial aggregation, validated import.

A link's elasticity is condensed into a 6x6 compliance matrix mapping a
wrench applied at the link tip (tip frame) to the tip deflection. Single
links use Euler-Bernoulli cantilever formulas (shear deformation is
neglected; slender machine-tool links make it second order). Stockier or
stepped links chain several beam segments; externally computed matrices
(e.g. from finite-element runs) are imported with validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComplianceMatrixError, KinetostatError
from .geometry import Transform, compose

__all__ = [
    "BeamSegment",
    "ComplianceMatrix",
    "beam_compliance",
    "serial_link_compliance",
    "load_compliance_matrix",
]

_SYM_TOL = 1e-9  # relative, for constructed matrices
_IMPORT_SYM_TOL = 1e-6  # relative, accepted on import before symmetrizing
_COND_CAP = 1e12  # stiffness conditioning cap for near-rigid links


@dataclass(frozen=True)
class BeamSegment:
    """Uniform beam along local x; response observed at the free tip.

    Units: mm, N/mm^2 (moduli), mm^2 (area), mm^4 (second moments and
    torsion constant).
    """

    length: float
    elastic_modulus: float
    shear_modulus: float
    area: float
    I_y: float
    I_z: float
    J_torsion: float

    def __post_init__(self):
        for name in ("length", "elastic_modulus", "shear_modulus",
                     "area", "I_y", "I_z", "J_torsion"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise KinetostatError(f"beam parameter {name} must be positive, got {v}")

    def scaled_section(self, factor: float) -> "BeamSegment":
        """Same stock with area and all section constants scaled by ``factor``."""
        if not factor > 0:
            raise KinetostatError("section scale factor must be positive")
        return BeamSegment(self.length, self.elastic_modulus, self.shear_modulus,
                           factor * self.area, factor * self.I_y, factor * self.I_z,
                           factor * self.J_torsion)


@dataclass(frozen=True)
class ComplianceMatrix:
    """Symmetric positive definite 6x6 tip compliance."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (6, 6):
            raise ComplianceMatrixError("compliance must be 6x6")
        scale = np.abs(v).max()
        if not (np.isfinite(scale) and scale > 0):
            raise ComplianceMatrixError("compliance must be finite and nonzero")
        if np.abs(v - v.T).max() > _SYM_TOL * scale:
            raise ComplianceMatrixError("compliance must be symmetric")
        eig = np.linalg.eigvalsh(0.5 * (v + v.T))
        if eig.min() <= 0:
            raise ComplianceMatrixError(
                f"compliance must be positive definite (min eigenvalue {eig.min():.6e})"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def stiffness(self) -> np.ndarray:
        """Inverse of the compliance, with conditioning capped.

        Eigenvalues of the compliance below max/1e12 are floored before
        inversion so near-rigid links become large-but-finite stiffness
        instead of overflowing.
        """
        w, vec = np.linalg.eigh(self.values)
        w = np.maximum(w, w.max() / _COND_CAP)
        k = (vec / w) @ vec.T
        return 0.5 * (k + k.T)


def beam_compliance(beam: BeamSegment) -> ComplianceMatrix:
    """Cantilever tip compliance of a single beam segment.

    Nonzero entries: axial L/EA; torsion L/GJ; bending blocks
    L^3/3EI with L^2/2EI translation-rotation coupling and L/EI tip
    rotation, signs per the right-hand rule (positive y-force rotates the
    tip about +z, positive z-force about -y).
    """
    L = beam.length
    E, G = beam.elastic_modulus, beam.shear_modulus
    c = np.zeros((6, 6))
    c[0, 0] = L / (E * beam.area)
    c[3, 3] = L / (G * beam.J_torsion)
    eiz = E * beam.I_z
    eiy = E * beam.I_y
    c[1, 1] = L**3 / (3.0 * eiz)
    c[5, 5] = L / eiz
    c[1, 5] = c[5, 1] = L**2 / (2.0 * eiz)
    c[2, 2] = L**3 / (3.0 * eiy)
    c[4, 4] = L / eiy
    c[2, 4] = c[4, 2] = -(L**2) / (2.0 * eiy)
    return ComplianceMatrix(c)


def serial_link_compliance(segments) -> ComplianceMatrix:
    """Tip compliance of beam segments chained base to tip.

    ``segments`` is a sequence of (BeamSegment, Transform); each
    transform places the segment's base frame at the previous segment's
    tip (identity for coaxial stacking). The segments form an elastic
    chain of 6-dof springs without passive joints, and the aggregate is
    the Jacobian-weighted sum of the per-segment tip compliances,
    expressed at the final tip.
    """
    from .chain import KinematicChain, RigidLink, VirtualSpring6, forward_kinematics, jacobians

    segments = list(segments)
    if not segments:
        raise KinetostatError("serial_link_compliance needs at least one segment")

    elements = []
    block_compliances = []
    for beam, placement in segments:
        if not isinstance(beam, BeamSegment) or not isinstance(placement, Transform):
            raise KinetostatError("segments must be (BeamSegment, Transform) pairs")
        c = beam_compliance(beam)
        body = compose(placement, Transform(np.eye(3), np.array([beam.length, 0.0, 0.0])))
        elements.append(RigidLink(body))
        elements.append(VirtualSpring6(c.stiffness()))
        block_compliances.append(c.values)

    chain = KinematicChain(elements)
    state = chain.zero_state()
    j_springs, _ = jacobians(chain, state)
    cb = np.zeros((j_springs.shape[1],) * 2)
    for i, blk in enumerate(block_compliances):
        cb[6 * i:6 * i + 6, 6 * i:6 * i + 6] = blk
    total = j_springs @ cb @ j_springs.T

    # Express in the tip frame (moments already taken about the tip point).
    tip = forward_kinematics(chain, state)
    rot = np.zeros((6, 6))
    rot[:3, :3] = tip.rotation
    rot[3:, 3:] = tip.rotation
    result = rot.T @ total @ rot
    return ComplianceMatrix(0.5 * (result + result.T))


def load_compliance_matrix(raw) -> ComplianceMatrix:
    """Validate an externally computed 6x6 compliance matrix.

    Accepts any 36-value numeric payload. Asymmetry up to 1e-6 relative
    is averaged away (measurement noise); anything worse is rejected, as
    is any matrix that is not positive definite.
    """
    v = np.array(raw, dtype=float)
    if v.size != 36:
        raise ComplianceMatrixError(f"expected 36 numbers, got {v.size}")
    v = v.reshape(6, 6)
    if not np.isfinite(v).all():
        raise ComplianceMatrixError("compliance entries must be finite")
    scale = np.abs(v).max()
    if scale == 0:
        raise ComplianceMatrixError("compliance matrix is zero")
    asym = np.abs(v - v.T).max() / scale
    if asym > _IMPORT_SYM_TOL:
        raise ComplianceMatrixError(
            f"compliance asymmetry {asym:.3e} exceeds {_IMPORT_SYM_TOL:.0e} relative"
        )
    v = 0.5 * (v + v.T)
    eig = np.linalg.eigvalsh(v)
    if eig.min() <= 0:
        raise ComplianceMatrixError(
            f"compliance is not positive definite: eigenvalue {eig.min():.6e}"
        )
    return ComplianceMatrix(v)
