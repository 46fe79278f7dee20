"""Exception hierarchy shared across the package."""


class KinetostatError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(KinetostatError):
    """Invalid rotation/transform data or an orientation branch ambiguity."""


class DimensionError(KinetostatError):
    """Coordinate vector lengths do not match the chain."""


class OutOfWorkspaceError(KinetostatError):
    """Rigid inverse kinematics failed to reach the requested pose."""


class SingularEquilibriumError(KinetostatError):
    """The equilibrium linear system is singular and inconsistent."""


class BucklingError(KinetostatError):
    """The loaded spring stiffness lost positive definiteness."""


class EquilibriumError(KinetostatError):
    """One or more chains failed to reach static equilibrium."""

    def __init__(self, message, states=None):
        super().__init__(message)
        self.states = states


class ComplianceMatrixError(KinetostatError):
    """A 6x6 compliance matrix failed validation."""


class ModelConfigError(KinetostatError):
    """A model configuration file failed to parse or validate."""
