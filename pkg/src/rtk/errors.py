"""Exception hierarchy.

Every error carries a machine-readable ``code`` and the CLI exit status that
its class maps to (2 parse/validation, 3 solver precondition, 4 convergence).
"""


class RTKError(Exception):
    code = "rtk_error"
    exit_code = 1


class ShapeMismatch(RTKError, ValueError):
    code = "shape_mismatch"
    exit_code = 3


class PreconditionError(RTKError):
    """A solver precondition does not hold for the given data."""

    code = "precondition"
    exit_code = 3


class SingularTensor(PreconditionError):
    code = "singular_tensor"


class NotHermitian(PreconditionError):
    code = "not_hermitian"


class NotHermitianBlocks(NotHermitian):
    code = "not_hermitian_blocks"


class NotSymplectic(PreconditionError):
    code = "not_symplectic"


class NoUniqueSolution(PreconditionError):
    code = "no_unique_solution"


class UnstableCoefficient(PreconditionError):
    code = "unstable_coefficient"


class UnstableSystem(PreconditionError):
    code = "unstable_system"


class UnstableClosedLoop(PreconditionError):
    code = "unstable_closed_loop"


class ImaginaryAxisEigenvalue(PreconditionError):
    code = "imaginary_axis_eigenvalue"


class SingularQ1(PreconditionError):
    code = "singular_q1"


class SingularResolvent(PreconditionError):
    code = "singular_resolvent"


class GammaTooSmall(PreconditionError):
    code = "gamma_too_small"


class ConvergenceFailure(RTKError):
    code = "convergence_failure"
    exit_code = 4

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class MaxIterationsExceeded(ConvergenceFailure):
    code = "max_iterations"


class ParseError(RTKError):
    code = "parse_error"
    exit_code = 2

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field


class ValidationError(ParseError):
    code = "validation_error"
