"""Kinetostatic stiffness analysis of multi-chain parallel manipulators.

The package models each kinematic chain as a serial sequence of rigid
links, position-locked actuated joints with series springs, passive
joints and 6-dof virtual springs; computes Cartesian stiffness in the
unloaded and loaded (finite deflection) regimes; and aggregates chains
into whole-manipulator stiffness. Units: mm, N, N*mm, rad.
"""

from ._kernels import backend_name as kernel_backend
from .beams import (
    BeamSegment,
    ComplianceMatrix,
    beam_compliance,
    load_compliance_matrix,
    serial_link_compliance,
)
from .chain import (
    ActuatedJoint,
    ChainState,
    KinematicChain,
    ParallelogramLink,
    PassiveJoint,
    RigidLink,
    VirtualSpring6,
    force_hessians,
    forward_kinematics,
    jacobians,
    rigid_full_configuration,
    rigid_nominal_configuration,
)
from .config import GridSpec, ModelConfig, bundled_model_path, load_model
from .errors import (
    BucklingError,
    ComplianceMatrixError,
    DimensionError,
    EquilibriumError,
    GeometryError,
    KinetostatError,
    ModelConfigError,
    OutOfWorkspaceError,
    SingularEquilibriumError,
)
from .geometry import (
    Deflection,
    Pose,
    Transform,
    Wrench,
    apply_deflection,
    compose,
    elementary,
    pose_difference,
    pose_of,
    transform_from_pose,
)
from .models import (
    OrthoglideParams,
    build_orthoglide_prpar,
    build_orthoglide_puu,
    closed_form_ik,
    parallelogram_compliance,
)
from .statics import (
    EquilibriumState,
    SolverOptions,
    SpringAggregate,
    StiffnessMatrix,
    aggregate_stiffness,
    assemble_spring_matrix,
    chain_stiffness_loaded,
    chain_stiffness_unloaded,
    deflection_under_load,
    manipulator_equilibrium,
    solve_equilibrium,
)

__version__ = "0.1.0"
