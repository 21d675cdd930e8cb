"""Exception types shared across the package.

Two failure classes are distinguished so that callers (and the command line
tool) can react differently: bad input versus a numerical guard tripping at
run time.
"""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition.

    Examples: a radius at or below the critical value 1, an evaluation point
    outside the admissible axial interval, mismatched grid shapes, or a
    malformed file. Mapped to exit code 1 by the command line tool.
    """


class NumericalGuardError(ArithmeticError):
    """Raised when a runtime numerical safeguard trips.

    Examples: a near-singular diagonal in the triangular solve, or a
    quadrature that fails to converge within its refinement budget. Mapped to
    exit code 2 by the command line tool.
    """
