"""Exception hierarchy for evolsolve."""


class EvolsolveError(Exception):
    """Base class for all library errors."""


class ExpressionError(EvolsolveError):
    """An expression failed to parse or evaluated to a non-finite value."""


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text; ``position`` is the 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifier(ExpressionSyntaxError):
    def __init__(self, name, position):
        super().__init__(f"unknown identifier {name!r}", position)
        self.name = name


class ValidationError(EvolsolveError):
    """A problem specification is not admissible."""


class EllipticityViolation(ValidationError):
    pass


class DegenerateBoundary(ValidationError):
    pass


class WindowMismatch(EvolsolveError):
    """A space-time function is not supported in the requested window."""


class SingularStep(EvolsolveError):
    """A step matrix could not be factored."""


class IncompatibleData(EvolsolveError):
    """Boundary/initial data violate the compatibility conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IncompatibleBoundaryData(IncompatibleData):
    pass


class IncompatibleInitialDatum(IncompatibleData):
    pass


class NoContraction(EvolsolveError):
    """The fixed-point iteration on a window did not contract fast enough."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class WindowUnderflow(EvolsolveError):
    """Even a one-step window exceeds the contraction target."""


class ResolventSolveFailure(EvolsolveError):
    def __init__(self, tau, lam):
        super().__init__(f"resolvent solve failed at tau={tau!r}, lambda={lam!r}")
        self.tau = tau
        self.lam = lam


class ConfigParseError(EvolsolveError):
    """Config text is malformed; ``errors`` holds (line_number, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {n}: {m}" for n, m in self.errors))


class ConfigValidationError(ValidationError):
    """Config values are out of range; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
