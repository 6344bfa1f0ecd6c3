"""Exception hierarchy shared by all distobs modules."""


class DistObsError(Exception):
    """Base class for every error raised by distobs."""


class InputError(DistObsError, ValueError):
    """Malformed or inconsistent user input (shapes, NaNs, bad weights)."""


class ConfigError(InputError):
    """Scenario document could not be turned into a valid configuration.

    ``location`` is a dotted field path (``observer.gamma``) or a
    ``line N`` marker for syntax errors.
    """

    def __init__(self, location, message):
        self.location = location
        self.message = message
        super().__init__(f"{location}: {message}")


class NumericError(DistObsError, ArithmeticError):
    """A numerical kernel failed (eigen-solver, residual check, ...)."""


class NoSolutionError(NumericError):
    """The requested matrix equation has no admissible solution."""


class GraphError(DistObsError):
    """A graph does not satisfy a structural hypothesis (e.g. strong connectivity)."""


class SynthesisError(DistObsError):
    """The observer cannot be built for the given system and specification."""


class UnsupportedSpecError(SynthesisError):
    """A gain specification is not supported for the given block shape."""


class CertificationError(DistObsError):
    """A stability certificate could not be established."""


class DivergenceError(DistObsError):
    """A simulation blew past the overflow guard.

    The partial :class:`~distobs.simulate.SimResult` is kept on ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
