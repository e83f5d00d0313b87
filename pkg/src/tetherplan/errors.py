"""Exception hierarchy shared by all planning stages.

Every error carries a short machine-readable ``code`` so the command line
front end can map it to an exit status without string matching.
"""


class TetherPlanError(Exception):
    """Base class for every error raised by the package."""

    code = "INTERNAL"

    def __init__(self, message="", diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class DegeneratePath(TetherPlanError, ValueError):
    code = "DEGENERATE_PATH"


class DomainError(TetherPlanError, ValueError):
    code = "DOMAIN_ERROR"


class InvalidCatenary(TetherPlanError, ValueError):
    code = "INVALID_CATENARY"


class TautTether(TetherPlanError):
    code = "INFEASIBLE"

    def __init__(self, message="", diagnostic="TAUT"):
        super().__init__(message, diagnostic)


class InfeasibleGeometry(TetherPlanError):
    code = "INFEASIBLE"

    def __init__(self, message="", diagnostic="INFEASIBLE_GEOMETRY"):
        super().__init__(message, diagnostic)


class InvalidEndpoint(TetherPlanError):
    code = "NO_PATH"


class NoPathFound(TetherPlanError):
    code = "NO_PATH"


class InfeasibleAtStart(TetherPlanError):
    code = "INFEASIBLE"


class InfeasibleGoal(TetherPlanError):
    code = "INFEASIBLE"


class FollowerStuck(TetherPlanError):
    code = "INFEASIBLE"

    def __init__(self, message="", diagnostic=None, index=0):
        super().__init__(message, diagnostic)
        self.index = index


class InvalidKnots(TetherPlanError, ValueError):
    code = "INVALID_KNOTS"


class InternalInconsistency(TetherPlanError):
    code = "INTERNAL"


class ConstraintResidual(TetherPlanError):
    """Optimisation finished with a hard constraint still violated.

    ``result`` holds the best-effort output and ``residual`` the worst
    violation in meters.
    """

    code = "INFEASIBLE"

    def __init__(self, message="", result=None, residual=0.0):
        super().__init__(message, "CONSTRAINT_RESIDUAL")
        self.result = result
        self.residual = residual


class InvariantViolation(TetherPlanError):
    code = "INTERNAL"

    def __init__(self, message="", tick=None, diagnostic=None):
        super().__init__(message, diagnostic)
        self.tick = tick


class NoData(TetherPlanError, ValueError):
    code = "NO_DATA"


class GenerationFailed(TetherPlanError):
    code = "INTERNAL"


class ScenarioParseError(TetherPlanError):
    code = "PARSE_ERROR"
