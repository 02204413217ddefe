"""Exception hierarchy shared by all modules."""


class FrontTrackError(Exception):
    """Base class for every error raised by this package."""


class OutOfDomain(FrontTrackError):
    """A state left the box ``|u|_inf <= delta`` where the model is valid."""


class NotHyperbolic(FrontTrackError):
    """Jacobian eigenvalues coincide or are complex."""


class NotPositive(FrontTrackError):
    """The slow characteristic speed is not strictly positive."""


class NotGenuinelyNonlinear(FrontTrackError):
    """The directional derivative of an eigenvalue along its eigenvector vanishes."""


class NoConvergence(FrontTrackError):
    """A Newton iteration failed to reach its tolerance."""


class DataTooLarge(FrontTrackError):
    """Initial data violates the smallness thresholds."""


class NoEvent(FrontTrackError):
    """No further interaction or boundary event can occur."""


class CannotSeparate(FrontTrackError):
    """Speed perturbation could not break a simultaneous event."""


class GuardTripped(FrontTrackError):
    """The sup-norm or front-count guard was exceeded during a run.

    The offending :class:`~fronttrack.front_tracking.SolutionState` is kept
    on ``state`` for inspection.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class NoFeasibleParams(FrontTrackError):
    """No Lyapunov weights satisfy the boundary dissipation inequality."""

    def __init__(self, message, rho1=None):
        super().__init__(message)
        self.rho1 = rho1


class ViolationFound(FrontTrackError):
    def __init__(self, message, event=None):
        super().__init__(message)
        self.event = event


class DegenerateEigenbasis(FrontTrackError):
    pass


class InconclusiveNearBoundary(FrontTrackError):
    def __init__(self, message, root=None):
        super().__init__(message)
        self.root = root


class CFLViolation(FrontTrackError):
    pass


class ConfigParseError(FrontTrackError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ValidationError(FrontTrackError):
    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field
