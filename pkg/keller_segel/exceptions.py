""" Exceptions Module """
from __future__ import annotations


class KellerSegelError(Exception):
    """
    Base class for every error raised by the package.
    """

    pass


class DomainValidationError(KellerSegelError):
    """
    Custom exception raised for polygons that are not simple, closed, counterclockwise Lipschitz polygons.
    """

    pass


class MeshError(KellerSegelError):
    """
    Custom exception raised when a mesh cannot be produced or fails its structural contracts.
    """

    pass


class MeshFormatError(MeshError):
    """
    Subset of MeshError, raised for malformed mesh files.
    """

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


class MeshConformityError(MeshError):
    """
    Subset of MeshError, raised when the connectivity is not conforming.
    """

    pass


class DimensionError(KellerSegelError, ValueError):
    """
    Custom exception raised when fields, operators and meshes do not fit together.
    """

    pass


class SolverError(KellerSegelError):
    """
    Base class for linear solver failures.
    """

    pass


class SolverInputError(SolverError):
    """
    Subset of SolverError, raised for non-finite right-hand sides.
    """

    pass


class NonConvergenceError(SolverError):
    """
    Subset of SolverError, raised when the iteration limit is hit before the tolerance.
    """

    def __init__(self, residual: float, iterations: int) -> None:
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
        )


class ReactionEvaluationError(KellerSegelError):
    """
    Custom exception raised when kinetic or coefficient functions receive or produce non-finite values.
    """

    pass


class CoefficientError(KellerSegelError):
    """
    Custom exception raised when the diffusion coefficient falls below its positive floor.
    """

    pass


class StepUnderflowError(KellerSegelError):
    """
    Custom exception raised when time-step halving would go below the configured floor.
    """

    pass


class ConfigurationError(KellerSegelError):
    """
    Custom exception raised for invalid run configuration files or values.
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InitialConditionError(ConfigurationError):
    """
    Subset of ConfigurationError, raised when an initial condition cannot be built on a mesh.
    """

    pass


class PropertyViolation(AssertionError):
    """
    Custom exception raised when a built-in property check fails.
    """

    pass
