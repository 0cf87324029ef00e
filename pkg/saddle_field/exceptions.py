# saddle_field/exceptions.py
"""Exception hierarchy shared by all saddle_field modules.

The CLI maps each family to an exit code:

- ConfigError  -> 1
- DomainError  -> 2
- SolverError  -> 3
"""


class SaddleFieldError(Exception):
    """Base class for every error raised by the package"""

    exit_code = 1


class ConfigError(SaddleFieldError):
    """Problem description could not be parsed or validated"""

    exit_code = 1

    def __init__(self, message: str, path: str = None, line: int = None, column: int = None):
        self.path = path
        self.line = line
        self.column = column
        location = []
        if line is not None:
            location.append(f"line {line}, column {column}")
        if path:
            location.append(f"field '{path}'")
        prefix = f"{'; '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class DomainError(SaddleFieldError):
    """An argument lies outside the domain of the requested operation"""

    exit_code = 2


class UtilityRangeError(DomainError):
    """Utility evaluated below the representable range"""


class ContractError(DomainError):
    """A structural precondition (symmetry, shape) was violated"""


class SolverError(SaddleFieldError):
    """A numerical solver failed to converge"""

    exit_code = 3


class AllocationSolverError(SolverError):
    """The Pareto allocation root search did not converge"""


class SaddlePointSolverError(SolverError):
    """The damped Newton saddle solve did not converge or hit a singular Jacobian"""


class PositiveDefiniteError(SolverError):
    """The matrix A(f) is not positive definite"""
