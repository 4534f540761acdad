"""Exception hierarchy shared by the solvers and the command line driver."""


class FracNehariError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(FracNehariError, ValueError):
    """Invalid parameters, under-resolved discretisation or malformed config."""


class ResolutionError(ConfigurationError):
    """A profile is too concentrated for the basis it is projected onto."""


class DivergedIterateError(FracNehariError, FloatingPointError):
    """Trace values are large enough for ``exp(u**2 + v**2)`` to overflow."""


class DegenerateFieldError(FracNehariError):
    """The fibering map of a field has no interior maximum."""


class NoProjectionError(FracNehariError):
    """No ``t+`` scaling exists: lambda is too large for this direction."""


class NoSolutionFoundError(FracNehariError):
    """Every start of a multistart solver failed."""


class InconsistentStateError(FracNehariError):
    """A mountain-pass path dropped below the local-minimum level."""


class DegenerateSecondSolutionError(FracNehariError):
    """The polished mountain-pass point collapsed onto the first solution."""


class LevelViolationError(FracNehariError):
    """A computed mountain-pass level breaks the pi/2 compactness threshold."""


class NontrivialityError(FracNehariError):
    """A mountain-pass solve converged to the trivial solution."""


class HypothesisFailure(FracNehariError):
    """A superlinear model fails one of the growth hypotheses (h1)-(h5)."""

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("hypotheses failed: " + ", ".join(self.failed))
